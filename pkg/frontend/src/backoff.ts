/** Exponential backoff with a hard ceiling: 250, 500, 1000, ... capped. */
export class Backoff {
  private attempt = 0;

  constructor(
    readonly baseMs: number = 250,
    readonly maxMs: number = 5000,
  ) {
    if (baseMs <= 0 || maxMs < baseMs) {
      throw new Error(`bad backoff window [${baseMs}, ${maxMs}]`);
    }
  }

  /** Delay to wait before the next attempt, growing per call. */
  next(): number {
    const delay = Math.min(this.baseMs * 2 ** this.attempt, this.maxMs);
    this.attempt += 1;
    return delay;
  }

  reset(): void {
    this.attempt = 0;
  }

  get attempts(): number {
    return this.attempt;
  }
}
