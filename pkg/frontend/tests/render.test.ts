import { describe, expect, it } from "vitest";

import {
  alertStyle,
  formatServerTime,
  lampView,
  resetEnabled,
  speedAngleDeg,
} from "../src/render.js";
import { StateMessage } from "../src/protocol.js";

function state(overrides: Partial<StateMessage>): StateMessage {
  return {
    type: "state", t_ms: 0, phase: "NORMAL", speed: 200,
    alarm: false, red: false, green: true, vibration: false,
    ...overrides,
  };
}

describe("alert styling", () => {
  it("urgent codes get urgent styling", () => {
    expect(alertStyle("ALERT_URGENT_SLEEP")).toBe("urgent");
    expect(alertStyle("MOTOR_STOPPED")).toBe("urgent");
  });

  it("status codes are calm, the rest are warnings", () => {
    expect(alertStyle("STATUS_EYES_OPEN")).toBe("status");
    expect(alertStyle("ALERT_EYES_CLOSED")).toBe("alert");
    expect(alertStyle("ALERT_ALCOHOL")).toBe("alert");
    expect(alertStyle("MOTOR_RAMP")).toBe("alert");
  });
});

describe("lamps", () => {
  it("mirror the server state", () => {
    expect(lampView(state({ red: false, green: true }))).toEqual({ red: false, green: true });
    expect(lampView(state({ red: true, green: false }))).toEqual({ red: true, green: false });
  });

  it("never show both lamps even on a contradictory message", () => {
    const v = lampView(state({ red: true, green: true }));
    expect(v.red && v.green).toBe(false);
  });

  it("are dark with no state yet", () => {
    expect(lampView(null)).toEqual({ red: false, green: false });
  });
});

describe("gauge and controls", () => {
  it("maps duty to a half-circle sweep", () => {
    expect(speedAngleDeg(0)).toBe(-90);
    expect(speedAngleDeg(255)).toBe(90);
    expect(speedAngleDeg(127.5)).toBe(0);
    expect(speedAngleDeg(999)).toBe(90); // clamped
  });

  it("enables reset only once stopped", () => {
    expect(resetEnabled(null)).toBe(false);
    expect(resetEnabled(state({ phase: "NORMAL" }))).toBe(false);
    expect(resetEnabled(state({ phase: "STOPPED", speed: 0 }))).toBe(true);
  });

  it("formats server time in seconds", () => {
    expect(formatServerTime(21500)).toBe("21.5s");
    expect(formatServerTime(0)).toBe("0.0s");
  });
});
