/**
 * DOM rendering plus the pure display rules it is built on. The pure
 * helpers are exported separately so they can be unit tested headlessly.
 */

import { StateMessage } from "./protocol.js";
import { AlertEntry, ViewState } from "./state.js";

export const SPEED_FULL_SCALE = 255;

export type AlertStyle = "status" | "alert" | "urgent";

export function alertStyle(code: string): AlertStyle {
  if (code === "ALERT_URGENT_SLEEP" || code === "MOTOR_STOPPED") return "urgent";
  if (code.startsWith("STATUS_")) return "status";
  return "alert";
}

/** Lamps are mutually exclusive; if the feed ever contradicts that, red wins. */
export function lampView(s: StateMessage | null): { red: boolean; green: boolean } {
  if (!s) return { red: false, green: false };
  return { red: s.red, green: s.green && !s.red };
}

export function formatServerTime(t_ms: number): string {
  return (t_ms / 1000).toFixed(1) + "s";
}

export function speedAngleDeg(speed: number): number {
  const frac = Math.max(0, Math.min(1, speed / SPEED_FULL_SCALE));
  return -90 + frac * 180;
}

export function resetEnabled(s: StateMessage | null): boolean {
  return s !== null && s.phase === "STOPPED";
}

export interface ConsoleElements {
  banner: HTMLElement;
  serverTime: HTMLElement;
  phaseLabel: HTMLElement;
  needle: HTMLElement;
  speedValue: HTMLElement;
  lampRed: HTMLElement;
  lampGreen: HTMLElement;
  badgeAlarm: HTMLElement;
  badgeVibration: HTMLElement;
  alertFeed: HTMLElement;
  resetButton: HTMLButtonElement;
  notice: HTMLElement;
  dropCounter: HTMLElement;
}

function alertRow(entry: AlertEntry): HTMLElement {
  const row = document.createElement("li");
  row.className = `alert-row ${alertStyle(entry.code)}`;
  if (entry.gapBefore) {
    const gap = document.createElement("span");
    gap.className = "gap-flag";
    gap.textContent = "missed alerts";
    row.appendChild(gap);
  }
  const seq = document.createElement("span");
  seq.className = "seq";
  seq.textContent = `#${entry.seq}`;
  const code = document.createElement("span");
  code.className = "code";
  code.textContent = entry.code;
  const detail = document.createElement("span");
  detail.className = "detail";
  detail.textContent = entry.detail;
  row.append(seq, code, detail);
  return row;
}

export function render(view: ViewState, els: ConsoleElements): void {
  els.banner.dataset.status = view.connection;
  els.banner.textContent =
    view.connection === "LIVE" ? "live"
    : view.connection === "CONNECTING" ? "connecting..."
    : "disconnected, retrying";

  const s = view.lastState;
  els.phaseLabel.textContent = s ? s.phase : "-";
  els.phaseLabel.dataset.phase = s ? s.phase : "";
  els.serverTime.textContent = s ? formatServerTime(s.t_ms) : "-";
  els.speedValue.textContent = s ? s.speed.toFixed(0) : "-";
  els.needle.style.transform = `rotate(${speedAngleDeg(s ? s.speed : 0)}deg)`;

  const lamps = lampView(s);
  els.lampRed.classList.toggle("on", lamps.red);
  els.lampGreen.classList.toggle("on", lamps.green);
  els.badgeAlarm.classList.toggle("on", !!s && s.alarm);
  els.badgeVibration.classList.toggle("on", !!s && s.vibration);

  els.resetButton.disabled = !resetEnabled(s);

  els.notice.textContent = view.notice ?? "";
  els.dropCounter.textContent =
    view.droppedMessages > 0 ? `${view.droppedMessages} malformed dropped` : "";

  // newest first in the feed; urgent styling comes from the row class
  els.alertFeed.replaceChildren(
    ...view.alerts.slice().reverse().map(alertRow),
  );
}
