import type { PortfolioView, SessionView, TradesView } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Typed client for the session/portfolio/trades endpoints. */
export class ConsoleApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const body = await response.text();
    if (!response.ok) {
      let detail = body;
      try {
        detail = JSON.parse(body).detail ?? body;
      } catch {
        // non-JSON error body, keep the raw text
      }
      throw new ApiError(response.status, detail);
    }
    return JSON.parse(body) as T;
  }

  createSession(): Promise<SessionView> {
    return this.request("/sessions", { method: "POST" });
  }

  getSession(id: string): Promise<SessionView> {
    return this.request(`/sessions/${id}`);
  }

  postMessage(id: string, text: string): Promise<SessionView> {
    return this.request(`/sessions/${id}/message`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  execute(id: string): Promise<SessionView> {
    return this.request(`/sessions/${id}/execute`, { method: "POST" });
  }

  portfolio(): Promise<PortfolioView> {
    return this.request("/portfolio");
  }

  trades(): Promise<TradesView> {
    return this.request("/trades");
  }
}
