import type { ControlAck, ControlRequest, Snapshot } from "./types.js";

export type FetchFn = typeof fetch;

/** The server answered with a non-2xx status: reachable, but refused. */
export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

/**
 * Thin client for the telemetry service. Pure request plumbing: no
 * retry or mode policy here, the cockpit decides what to send when.
 */
export class ApiClient {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchFn: FetchFn = (...args) => fetch(...args),
  ) {}

  url(path: string): string {
    return this.baseUrl + path;
  }

  get streamUrl(): string {
    return this.url("/api/stream");
  }

  get videoUrl(): string {
    return this.url("/api/video");
  }

  get saliencyUrl(): string {
    return this.url("/api/saliency");
  }

  async state(): Promise<Snapshot> {
    const resp = await this.fetchFn(this.url("/api/state"));
    if (!resp.ok) {
      throw new ApiError(resp.status, `state: HTTP ${resp.status}`);
    }
    return (await resp.json()) as Snapshot;
  }

  async control(body: ControlRequest): Promise<ControlAck> {
    const resp = await this.fetchFn(this.url("/api/control"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, `control: HTTP ${resp.status}`);
    }
    return (await resp.json()) as ControlAck;
  }
}
