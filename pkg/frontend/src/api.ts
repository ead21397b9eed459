import type { LabelSets, MappingConfig } from "./types.js";

/** Thin typed client over the daemon's HTTP control plane.
 *
 * `fetchFn` is injectable so tests can run against an in-memory server.
 */
export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchFn(this.base + path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const data = await resp.json();
    if (!resp.ok) {
      const message =
        typeof data === "object" && data !== null && "error" in data
          ? String((data as { error: unknown }).error)
          : `HTTP ${resp.status}`;
      throw new ApiError(resp.status, message);
    }
    return data as T;
  }

  getConfig(): Promise<MappingConfig> {
    return this.request("GET", "/config");
  }

  putConfig(config: MappingConfig): Promise<MappingConfig> {
    return this.request("PUT", "/config", config);
  }

  getLabels(): Promise<LabelSets> {
    return this.request("GET", "/labels");
  }

  getStatus(): Promise<Record<string, unknown>> {
    return this.request("GET", "/status");
  }

  recordStart(kind: "static" | "dynamic", label: string): Promise<unknown> {
    return this.request("POST", "/record/start", { kind, label });
  }

  recordStop(): Promise<{ kind: string; label: string; count: number }> {
    return this.request("POST", "/record/stop");
  }

  retrain(kind: "static" | "dynamic"): Promise<{ kind: string; labels: string[] }> {
    return this.request("POST", "/retrain", { kind });
  }

  setSignal(on: boolean): Promise<{ on: boolean }> {
    return this.request("POST", "/signal", { on });
  }
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}
