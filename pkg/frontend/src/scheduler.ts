/**
 * Debounced, single-in-flight preview runner: a new request cancels both the
 * pending timer and any request already on the wire (cancel-and-replace).
 */
export class PreviewScheduler {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private controller: AbortController | null = null;

  constructor(
    private readonly delayMs: number,
    private readonly run: (signal: AbortSignal) => Promise<void>,
    private readonly onError: (err: unknown) => void = () => {},
  ) {}

  /** Schedule a preview `delayMs` after the most recent call. */
  request(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire();
    }, this.delayMs);
  }

  /** Run immediately, cancelling anything pending or in flight. */
  flush(): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    return this.fire();
  }

  cancel(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.controller?.abort();
    this.controller = null;
  }

  private async fire(): Promise<void> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    try {
      await this.run(controller.signal);
    } catch (err) {
      if (!controller.signal.aborted) this.onError(err);
    } finally {
      if (this.controller === controller) this.controller = null;
    }
  }
}
