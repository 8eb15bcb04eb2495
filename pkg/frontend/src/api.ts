import type {
  Alert,
  AlertFilters,
  AlertPage,
  Device,
  HardNegatives,
  ReviewVerdict,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface ApiOptions {
  baseUrl?: string;
  token?: string;
  fetchFn?: FetchLike;
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
  } catch {
    // not JSON; fall through to the status line
  }
  return `${response.status} ${response.statusText}`;
}

/** Thin client over the alert service API v1; every view state comes from here. */
export class ConsoleApi {
  private readonly baseUrl: string;
  private readonly token: string | undefined;
  private readonly fetchFn: FetchLike;

  constructor(options: ApiOptions = {}) {
    this.baseUrl = (options.baseUrl ?? "").replace(/\/$/, "");
    this.token = options.token;
    this.fetchFn = options.fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const headers: Record<string, string> = { ...(init.headers as Record<string, string>) };
    if (this.token) headers["authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchFn(this.baseUrl + path, { ...init, headers });
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json()) as T;
  }

  listAlerts(filters: AlertFilters = {}, page = 1, pageSize = 50): Promise<AlertPage> {
    const query = new URLSearchParams();
    if (filters.device) query.set("device", filters.device);
    if (filters.disposition) query.set("disposition", filters.disposition);
    if (filters.review) query.set("review", filters.review);
    query.set("page", String(page));
    query.set("page_size", String(pageSize));
    return this.request<AlertPage>(`/api/v1/alerts?${query}`);
  }

  getAlert(reportId: string): Promise<Alert> {
    return this.request<Alert>(`/api/v1/alerts/${reportId}`);
  }

  review(reportId: string, verdict: ReviewVerdict, reviewer: string): Promise<Alert> {
    return this.request<Alert>(`/api/v1/alerts/${reportId}/review`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ verdict, reviewer }),
    });
  }

  async listDevices(): Promise<Device[]> {
    const body = await this.request<{ devices: Device[] }>("/api/v1/devices");
    return body.devices;
  }

  hardNegatives(): Promise<HardNegatives> {
    return this.request<HardNegatives>("/api/v1/hard-negatives");
  }

  snapshotUrl(reportId: string): string {
    return `${this.baseUrl}/api/v1/alerts/${reportId}/snapshot`;
  }

  chipUrl(reportId: string): string {
    return `${this.baseUrl}/api/v1/alerts/${reportId}/chip`;
  }

  /** JPEG endpoints need the bearer header, which <img src> cannot carry. */
  async fetchImage(reportId: string, kind: "snapshot" | "chip"): Promise<Blob> {
    const headers: Record<string, string> = {};
    if (this.token) headers["authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchFn(`${this.baseUrl}/api/v1/alerts/${reportId}/${kind}`, {
      headers,
    });
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return response.blob();
  }
}
