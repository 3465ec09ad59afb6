import type {
  AnomalyFlag,
  ClassifyResponse,
  Meta,
  NeighborRow,
  ProjectionPoint,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the service endpoints. The UI never computes
 * distances or votes itself; everything flows through here. */
export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    const body = (await resp.json().catch(() => ({}))) as Record<string, unknown>;
    if (!resp.ok) {
      const message = typeof body.error === "string" ? body.error : resp.statusText;
      throw new ApiError(resp.status, message);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  meta(): Promise<Meta> {
    return this.request<Meta>("/meta");
  }

  async projection(): Promise<ProjectionPoint[]> {
    const body = await this.request<{ points: ProjectionPoint[] }>("/projection");
    return body.points;
  }

  async neighbors(id: number, k: number): Promise<NeighborRow[]> {
    const body = await this.request<{ neighbors: NeighborRow[] }>(
      `/neighbors?id=${id}&k=${k}`,
    );
    return body.neighbors;
  }

  classify(text: string, k?: number): Promise<ClassifyResponse> {
    return this.post<ClassifyResponse>("/classify", k === undefined ? { text } : { text, k });
  }

  addDocument(text: string, label: string): Promise<{ id: number; index_size: number }> {
    return this.post("/documents", { text, label });
  }

  relabel(id: number, label: string): Promise<{ id: number; label: string; index_size: number }> {
    return this.post("/relabel", { id, label });
  }

  async anomalies(kind: string): Promise<AnomalyFlag[]> {
    const body = await this.request<{ flags: AnomalyFlag[] }>(
      `/anomalies?kind=${encodeURIComponent(kind)}`,
    );
    return body.flags;
  }
}
