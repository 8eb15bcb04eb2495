import type { Alert, AlertPage } from "./types.js";

export interface FeedSnapshot {
  alerts: Alert[];
  total: number;
  loaded: boolean;
  error: string | null;
}

type Listener = (snapshot: FeedSnapshot) => void;

/** Feed state derived entirely from API responses; no local classification. */
export class FeedState {
  private alerts: Alert[] = [];
  private total = 0;
  private loaded = false;
  private error: string | null = null;
  private readonly listeners = new Set<Listener>();

  snapshot(): FeedSnapshot {
    return { alerts: [...this.alerts], total: this.total, loaded: this.loaded, error: this.error };
  }

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => {
      this.listeners.delete(listener);
    };
  }

  /** Replace the visible page with a fresh poll result (server order kept). */
  applyPage(page: AlertPage): void {
    this.alerts = [...page.alerts];
    this.total = page.total;
    this.loaded = true;
    this.error = null;
    this.notify();
  }

  /** Patch one alert in place (optimistic update or review response). */
  upsert(alert: Alert): void {
    const index = this.alerts.findIndex((a) => a.report_id === alert.report_id);
    if (index >= 0) {
      this.alerts[index] = alert;
    } else {
      this.alerts.unshift(alert);
      this.total += 1;
    }
    this.notify();
  }

  get(reportId: string): Alert | undefined {
    return this.alerts.find((a) => a.report_id === reportId);
  }

  /** Keep the last good page on errors; the banner shows until a poll succeeds. */
  applyError(message: string): void {
    this.error = message;
    this.notify();
  }

  private notify(): void {
    const snapshot = this.snapshot();
    this.listeners.forEach((listener) => listener(snapshot));
  }
}
