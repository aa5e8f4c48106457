/** Local review-session bookkeeping: items viewed, time per item, labels.
 * Kept client-side and exportable so reviewers can self-measure their
 * events-per-minute without any backend support. */

export interface SessionEvent {
  key: string;
  viewedMs: number;
}

export interface SessionExport {
  startedAt: string;
  durationMs: number;
  itemsViewed: number;
  labelsSubmitted: number;
  eventsPerMinute: number;
  events: SessionEvent[];
}

type Clock = () => number;

export class ReviewSession {
  private startedWall = new Date().toISOString();
  private startedMs: number;
  private openKey: string | null = null;
  private openedAt = 0;
  private viewed = new Map<string, number>();
  private labels = 0;

  constructor(private clock: Clock = () => Date.now()) {
    this.startedMs = this.clock();
  }

  openItem(key: string): void {
    this.closeItem();
    this.openKey = key;
    this.openedAt = this.clock();
  }

  closeItem(): void {
    if (this.openKey !== null) {
      const elapsed = this.clock() - this.openedAt;
      this.viewed.set(this.openKey, (this.viewed.get(this.openKey) ?? 0) + elapsed);
      this.openKey = null;
    }
  }

  recordLabel(): void {
    this.labels += 1;
  }

  export(): SessionExport {
    this.closeItem();
    const durationMs = this.clock() - this.startedMs;
    const minutes = durationMs / 60000;
    return {
      startedAt: this.startedWall,
      durationMs,
      itemsViewed: this.viewed.size,
      labelsSubmitted: this.labels,
      eventsPerMinute: minutes > 0 ? this.labels / minutes : 0,
      events: [...this.viewed.entries()].map(([key, viewedMs]) => ({ key, viewedMs })),
    };
  }

  exportJson(): string {
    return JSON.stringify(this.export(), null, 2);
  }
}
