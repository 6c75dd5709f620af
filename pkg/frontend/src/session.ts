/**
 * WebSocket session: connect, automatically reconnect with backoff, and
 * translate driver gestures into protocol inputs. Press-and-hold on the
 * eyes control maps to closed-on-press / open-on-release; the alcohol
 * slider is debounced so dragging does not flood the link.
 *
 * The socket and timers are injectable so the whole session is testable
 * without a browser or a server.
 */

import { ReconnectBackoff } from "./backoff.js";
import { alcoholInput, eyesInput, resetInput } from "./protocol.js";
import {
  initialViewState,
  onClose,
  onConnecting,
  onMessage,
  onOpen,
  ViewState,
  withNotice,
} from "./state.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface SessionOptions {
  socketFactory?: SocketFactory;
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
  clearTimeoutFn?: (handle: unknown) => void;
  debounceMs?: number;
  backoff?: ReconnectBackoff;
}

const browserSocketFactory: SocketFactory = (url) =>
  new WebSocket(url) as unknown as SocketLike;

export class ConsoleSession {
  private view_: ViewState = initialViewState();
  private socket: SocketLike | null = null;
  private reconnectHandle: unknown = null;
  private debounceHandle: unknown = null;
  private pendingPpm: number | null = null;
  private disposed = false;

  private readonly factory: SocketFactory;
  private readonly setTimeoutFn: (fn: () => void, ms: number) => unknown;
  private readonly clearTimeoutFn: (handle: unknown) => void;
  private readonly debounceMs: number;
  private readonly backoff: ReconnectBackoff;

  constructor(
    private readonly url: string,
    private readonly onViewChange: (view: ViewState) => void,
    options: SessionOptions = {},
  ) {
    this.factory = options.socketFactory ?? browserSocketFactory;
    this.setTimeoutFn = options.setTimeoutFn ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimeoutFn = options.clearTimeoutFn ?? ((h) => clearTimeout(h as number));
    this.debounceMs = options.debounceMs ?? 100;
    this.backoff = options.backoff ?? new ReconnectBackoff();
  }

  get view(): ViewState {
    return this.view_;
  }

  get live(): boolean {
    return this.view_.connection === "LIVE";
  }

  connect(): void {
    if (this.disposed) return;
    this.update(onConnecting(this.view_));
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.backoff.reset();
      this.update(onOpen(this.view_));
    };
    socket.onmessage = (event) => {
      this.update(onMessage(this.view_, String(event.data)));
    };
    socket.onclose = () => this.handleDrop(socket);
    socket.onerror = () => this.handleDrop(socket);
  }

  dispose(): void {
    this.disposed = true;
    if (this.reconnectHandle !== null) this.clearTimeoutFn(this.reconnectHandle);
    if (this.debounceHandle !== null) this.clearTimeoutFn(this.debounceHandle);
    if (this.socket) {
      this.socket.onclose = null;
      this.socket.close();
    }
  }

  private handleDrop(socket: SocketLike): void {
    if (socket !== this.socket || this.disposed) return;
    this.socket = null;
    this.update(onClose(this.view_));
    const delay = this.backoff.next();
    this.reconnectHandle = this.setTimeoutFn(() => {
      this.reconnectHandle = null;
      this.connect();
    }, delay);
  }

  private send(payload: string, gesture: string): boolean {
    if (!this.live || this.socket === null) {
      this.update(withNotice(this.view_, `${gesture} ignored: not connected`));
      return false;
    }
    this.socket.send(payload);
    return true;
  }

  /** Press-and-hold eyes control: closed on press. */
  pressEyes(): void {
    this.send(eyesInput(true), "eyes input");
  }

  /** ...and open again on release. */
  releaseEyes(): void {
    this.send(eyesInput(false), "eyes input");
  }

  /** Accessibility toggle mode sends the absolute state. */
  setEyes(closed: boolean): void {
    this.send(eyesInput(closed), "eyes input");
  }

  /** Alcohol slider, debounced. */
  setAlcohol(ppm: number): void {
    this.pendingPpm = ppm;
    if (this.debounceHandle !== null) this.clearTimeoutFn(this.debounceHandle);
    this.debounceHandle = this.setTimeoutFn(() => {
      this.debounceHandle = null;
      if (this.pendingPpm !== null) {
        this.send(alcoholInput(this.pendingPpm), "alcohol input");
        this.pendingPpm = null;
      }
    }, this.debounceMs);
  }

  reset(): void {
    this.send(resetInput(), "reset");
  }

  private update(view: ViewState): void {
    this.view_ = view;
    this.onViewChange(view);
  }
}
