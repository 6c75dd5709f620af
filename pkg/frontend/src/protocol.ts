/**
 * Wire protocol with the live server: one JSON document per WebSocket text
 * message. Parsing is strict; anything malformed is rejected (the caller
 * counts drops) so a bad message can never crash the console.
 */

export interface StateMessage {
  type: "state";
  t_ms: number;
  phase: string;
  speed: number;
  alarm: boolean;
  red: boolean;
  green: boolean;
  vibration: boolean;
}

export interface AlertMessage {
  type: "alert";
  seq: number;
  code: string;
  detail: string;
}

export type ServerMessage = StateMessage | AlertMessage;

function isObject(x: unknown): x is Record<string, unknown> {
  return typeof x === "object" && x !== null && !Array.isArray(x);
}

export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (!isObject(data)) return null;

  if (data.type === "state") {
    if (
      typeof data.t_ms !== "number" ||
      typeof data.phase !== "string" ||
      typeof data.speed !== "number" ||
      typeof data.alarm !== "boolean" ||
      typeof data.red !== "boolean" ||
      typeof data.green !== "boolean" ||
      typeof data.vibration !== "boolean"
    ) {
      return null;
    }
    return {
      type: "state",
      t_ms: data.t_ms,
      phase: data.phase,
      speed: data.speed,
      alarm: data.alarm,
      red: data.red,
      green: data.green,
      vibration: data.vibration,
    };
  }

  if (data.type === "alert") {
    if (
      typeof data.seq !== "number" ||
      typeof data.code !== "string" ||
      typeof data.detail !== "string"
    ) {
      return null;
    }
    return { type: "alert", seq: data.seq, code: data.code, detail: data.detail };
  }

  return null;
}

export function eyesInput(closed: boolean): string {
  return JSON.stringify({ type: "input", eyes: closed ? "closed" : "open" });
}

export function alcoholInput(ppm: number): string {
  return JSON.stringify({ type: "input", alcohol_ppm: ppm });
}

export function resetInput(): string {
  return JSON.stringify({ type: "reset" });
}
