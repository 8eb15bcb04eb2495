export const POLL_INTERVAL_MS = 5000;

/** Fixed-interval poller: one tick in flight at a time, next tick scheduled
 * only after the previous one settles, so a slow API never stacks requests. */
export class Poller {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private running = false;

  constructor(
    private readonly tick: () => Promise<void>,
    private readonly intervalMs: number = POLL_INTERVAL_MS,
  ) {}

  start(): void {
    if (this.running) return;
    this.running = true;
    void this.cycle();
  }

  stop(): void {
    this.running = false;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  private async cycle(): Promise<void> {
    if (!this.running) return;
    try {
      await this.tick();
    } finally {
      if (this.running) {
        this.timer = setTimeout(() => void this.cycle(), this.intervalMs);
      }
    }
  }
}
