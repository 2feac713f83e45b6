import type {
  OperatorCatalogue,
  PipelineCreated,
  PipelineSpec,
  RunStatus,
  SamplePayload,
  StatsPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(detail);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/**
 * Thin typed client over the HTTP API. The fetch implementation is
 * injectable so tests can script responses without a server.
 */
export class ApiClient {
  constructor(
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
    private readonly base: string = "",
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail =
        typeof (body as { detail?: unknown }).detail === "string"
          ? (body as { detail: string }).detail
          : `HTTP ${response.status}`;
      throw new ApiError(response.status, detail);
    }
    return body as T;
  }

  operators(): Promise<OperatorCatalogue> {
    return this.request("/operators");
  }

  definePipeline(spec: PipelineSpec): Promise<PipelineCreated> {
    return this.request("/pipelines", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(spec),
    });
  }

  launch(runId: string): Promise<{ run_id: string; status: string }> {
    return this.request(`/pipelines/${encodeURIComponent(runId)}/run`, {
      method: "POST",
    });
  }

  runStatus(runId: string): Promise<RunStatus> {
    return this.request(`/runs/${encodeURIComponent(runId)}`);
  }

  stats(runId: string): Promise<StatsPayload> {
    return this.request(`/runs/${encodeURIComponent(runId)}/stats`);
  }

  sample(runId: string, operator: string, n = 10): Promise<SamplePayload> {
    const run = encodeURIComponent(runId);
    const name = encodeURIComponent(operator);
    return this.request(`/runs/${run}/operators/${name}/sample?n=${n}`);
  }
}
