import { Stats, fetchStats } from "./api.js";

export interface ProgressView {
  totalPapers: number;
  totalQas: number;
  byCategory: Record<string, number>;
  stale: boolean;
}

export const INITIAL_VIEW: ProgressView = {
  totalPapers: 0,
  totalQas: 0,
  byCategory: { knowledge: 0, method: 0, discussion: 0 },
  stale: false,
};

const STALE_AFTER_FAILURES = 2;

/** Polls /api/stats and keeps the latest server counts. The view only ever
 * shows numbers received from the server; overlapping responses are resolved
 * last-write-wins on a monotonic request counter. */
export class ProgressPoller {
  view: ProgressView = { ...INITIAL_VIEW };

  private requestCounter = 0;
  private appliedRequest = 0;
  private failures = 0;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly onChange: (view: ProgressView) => void,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  start(intervalMs = 2000): void {
    void this.refresh();
    this.timer = setInterval(() => void this.refresh(), intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async refresh(): Promise<void> {
    const requestId = ++this.requestCounter;
    let stats: Stats;
    try {
      stats = await fetchStats(this.fetchFn);
    } catch {
      this.failures += 1;
      if (this.failures >= STALE_AFTER_FAILURES && !this.view.stale) {
        this.view = { ...this.view, stale: true };
        this.onChange(this.view);
      }
      return;
    }
    if (requestId < this.appliedRequest) {
      return; // a newer response already landed
    }
    this.appliedRequest = requestId;
    this.failures = 0;
    this.view = {
      totalPapers: stats.total_papers,
      totalQas: stats.total_qas,
      byCategory: { ...stats.by_category },
      stale: false,
    };
    this.onChange(this.view);
  }
}
