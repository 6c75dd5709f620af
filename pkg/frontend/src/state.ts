/**
 * Console view state: a pure reducer over connection events and server
 * messages. The view only ever shows server-confirmed state; inputs are
 * never reflected optimistically.
 */

import { parseServerMessage, StateMessage } from "./protocol.js";

export const ALERT_LOG_LIMIT = 100;

export type ConnectionStatus = "CONNECTING" | "LIVE" | "DISCONNECTED";

export interface AlertEntry {
  seq: number;
  code: string;
  detail: string;
  /** true when one or more alerts were missed before this one */
  gapBefore: boolean;
}

export interface ViewState {
  connection: ConnectionStatus;
  lastState: StateMessage | null;
  alerts: AlertEntry[]; // oldest first, capped at ALERT_LOG_LIMIT
  lastSeq: number | null;
  droppedMessages: number;
  notice: string | null;
}

export function initialViewState(): ViewState {
  return {
    connection: "CONNECTING",
    lastState: null,
    alerts: [],
    lastSeq: null,
    droppedMessages: 0,
    notice: null,
  };
}

export function onConnecting(view: ViewState): ViewState {
  return { ...view, connection: "CONNECTING" };
}

export function onOpen(view: ViewState): ViewState {
  // the alert log survives reconnects; only the link status changes
  return { ...view, connection: "LIVE", notice: null };
}

export function onClose(view: ViewState): ViewState {
  return { ...view, connection: "DISCONNECTED" };
}

export function withNotice(view: ViewState, notice: string): ViewState {
  return { ...view, notice };
}

export function onMessage(view: ViewState, raw: string): ViewState {
  const msg = parseServerMessage(raw);
  if (msg === null) {
    return { ...view, droppedMessages: view.droppedMessages + 1 };
  }
  if (msg.type === "state") {
    return { ...view, lastState: msg };
  }
  const gapBefore = view.lastSeq !== null && msg.seq !== view.lastSeq + 1;
  const alerts = [...view.alerts, {
    seq: msg.seq,
    code: msg.code,
    detail: msg.detail,
    gapBefore,
  }];
  if (alerts.length > ALERT_LOG_LIMIT) {
    alerts.splice(0, alerts.length - ALERT_LOG_LIMIT);
  }
  return { ...view, alerts, lastSeq: msg.seq };
}
