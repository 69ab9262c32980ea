// Thin client for the /api/v1 endpoints, plus the live-update subscription:
// server-sent events when available, polling as the compatibility floor.

import { ImagePage, ResultRow, Stats } from "./types";

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(this.baseUrl + path);
    if (!resp.ok) throw new Error(`${path}: HTTP ${resp.status}`);
    return resp.json() as Promise<T>;
  }

  listImages(params: { since?: string; status?: string; task?: string; limit?: number } = {}):
      Promise<ImagePage> {
    const q = new URLSearchParams();
    for (const [k, v] of Object.entries(params)) {
      if (v !== undefined) q.set(k, String(v));
    }
    const qs = q.toString();
    return this.getJson<ImagePage>(`/api/v1/images${qs ? "?" + qs : ""}`);
  }

  async getResult(imageId: string): Promise<ResultRow | null> {
    const resp = await fetch(`${this.baseUrl}/api/v1/results/${imageId}`);
    if (resp.status === 404) return null; // still pending
    if (!resp.ok) throw new Error(`results: HTTP ${resp.status}`);
    return resp.json() as Promise<ResultRow>;
  }

  getStats(): Promise<Stats> {
    return this.getJson<Stats>("/api/v1/stats");
  }

  imageFileUrl(imageId: string): string {
    return `${this.baseUrl}/api/v1/images/${imageId}/file`;
  }

  /**
   * Subscribe to completed results. Prefers the event stream; falls back to
   * polling stats and refetching when the processed count moves. Returns an
   * unsubscribe function.
   */
  subscribe(onResult: (r: ResultRow) => void, pollMs = 2000): () => void {
    if (typeof EventSource !== "undefined") {
      let source = new EventSource(`${this.baseUrl}/api/v1/events`);
      const attach = (es: EventSource) => {
        es.onmessage = (ev) => onResult(JSON.parse(ev.data) as ResultRow);
        es.onerror = () => {
          es.close();
          setTimeout(() => { source = attach(new EventSource(`${this.baseUrl}/api/v1/events`)); }, 2000);
        };
        return es;
      };
      source = attach(source);
      return () => source.close();
    }
    let lastProcessed = -1;
    const timer = setInterval(async () => {
      try {
        const stats = await this.getStats();
        if (stats.processed !== lastProcessed) {
          lastProcessed = stats.processed;
          const page = await this.listImages({ status: "processed", limit: 5 });
          for (const rec of page.images) {
            const result = await this.getResult(rec.image_id);
            if (result) onResult(result);
          }
        }
      } catch {
        // API unreachable: keep polling, the UI shows the banner
      }
    }, pollMs);
    return () => clearInterval(timer);
  }
}
