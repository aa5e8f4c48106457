import type {
  ContextResponse,
  LabelAck,
  LabelsResponse,
  RankingsResponse,
  TriageSubmission,
} from "./types.js";

export class GatewayError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
    this.name = "GatewayError";
  }
}

/** Thin fetch wrapper over the documented gateway endpoints; nothing else. */
export class GatewayClient {
  constructor(readonly baseUrl: string) {}

  private async get<T>(path: string, params: Record<string, string | number>): Promise<T> {
    const url = new URL(`${this.baseUrl}${path}`);
    for (const [k, v] of Object.entries(params)) {
      url.searchParams.set(k, String(v));
    }
    let response: Response;
    try {
      response = await fetch(url);
    } catch (err) {
      throw new GatewayError(`gateway unreachable: ${(err as Error).message}`);
    }
    if (!response.ok) {
      throw new GatewayError(`${path} failed: ${response.status}`, response.status);
    }
    return (await response.json()) as T;
  }

  fetchRankings(date: string, limit = 25, indicator?: string): Promise<RankingsResponse> {
    const params: Record<string, string | number> = { date, limit };
    if (indicator) params.indicator = indicator;
    return this.get<RankingsResponse>("/api/rankings", params);
  }

  fetchContext(
    indicator: string,
    region: string,
    date: string,
    window = 28,
  ): Promise<ContextResponse> {
    return this.get<ContextResponse>("/api/context", { indicator, region, date, window });
  }

  fetchLabels(date?: string): Promise<LabelsResponse> {
    return this.get<LabelsResponse>("/api/labels", date ? { date } : {});
  }

  async submitLabel(record: TriageSubmission): Promise<LabelAck> {
    let response: Response;
    try {
      response = await fetch(`${this.baseUrl}/api/labels`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(record),
      });
    } catch (err) {
      throw new GatewayError(`gateway unreachable: ${(err as Error).message}`);
    }
    if (!response.ok) {
      const detail = await response.text().catch(() => "");
      throw new GatewayError(`label rejected: ${response.status} ${detail}`, response.status);
    }
    return (await response.json()) as LabelAck;
  }
}
