/** Reconnect delays: doubling from half a second, capped at five. */
export class ReconnectBackoff {
  private attempt = 0;

  constructor(
    private readonly baseMs: number = 500,
    private readonly maxMs: number = 5000,
  ) {}

  next(): number {
    const delay = Math.min(this.baseMs * 2 ** this.attempt, this.maxMs);
    this.attempt += 1;
    return delay;
  }

  reset(): void {
    this.attempt = 0;
  }
}
