// Typed client for the session service. Every view in the app derives from
// the documents returned here; the client never infers posterior state on
// its own.

export type ChannelConfig =
  | { type: "bsc"; p: number }
  | { type: "qsc"; p: number }
  | { type: "dmc"; matrix: number[][] };

export type Flavor = "cdf1d" | "kr-grid";

export interface SessionQuery {
  type: "median" | "cell";
  point?: number[];
  center?: number[];
}

export interface SessionDoc {
  id: string;
  n: number;
  mode: "human" | "hidden";
  reveal: boolean;
  flavor: string;
  channel: { type: string; [key: string]: unknown };
  dim: number;
  n_inputs: number;
  query: SessionQuery;
  median: number[];
  credible_box: number[][];
  decoded_prefix: string[];
  last: { x: number; y: number } | null;
  target?: number[];
  state?: number[];
}

export interface InputResponse {
  x: number;
  y: number;
  state: SessionDoc;
}

export interface PosteriorDoc {
  resolution: number;
  masses: number[];
  edges: number[][];
}

export interface WarpDoc {
  resolution: number;
  points: number[][];
}

export interface CreateSessionRequest {
  channel: ChannelConfig;
  flavor: Flavor;
  mode: "human" | "hidden";
  reveal?: boolean;
  seed?: number;
  target?: number | number[];
}

export class ServiceError extends Error {
  readonly status: number;
  readonly kind: string;

  constructor(status: number, kind: string, message: string) {
    super(message);
    this.status = status;
    this.kind = kind;
  }
}

async function request<T>(
  base: string,
  path: string,
  init?: RequestInit,
): Promise<T> {
  const resp = await fetch(base + path, init);
  if (resp.status === 204) {
    return undefined as T;
  }
  const body = await resp.json();
  if (!resp.ok) {
    const err = body?.error ?? { type: "Unknown", message: "request failed" };
    throw new ServiceError(resp.status, err.type, err.message);
  }
  return body as T;
}

function post(payload: unknown): RequestInit {
  return {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(payload),
  };
}

export class SessionClient {
  readonly base: string;

  constructor(base: string) {
    this.base = base.replace(/\/$/, "");
  }

  createSession(req: CreateSessionRequest): Promise<SessionDoc> {
    return request(this.base, "/sessions", post(req));
  }

  getSession(id: string): Promise<SessionDoc> {
    return request(this.base, `/sessions/${id}`);
  }

  /** Post the human's channel input; omit symbol in hidden mode to let the
   * server-side encoder pick it. */
  sendInput(id: string, symbol?: number): Promise<InputResponse> {
    const payload = symbol === undefined ? {} : { symbol };
    return request(this.base, `/sessions/${id}/input`, post(payload));
  }

  getPosterior(id: string, resolution: number): Promise<PosteriorDoc> {
    return request(
      this.base,
      `/sessions/${id}/posterior?resolution=${resolution}`,
    );
  }

  getWarp(id: string, resolution: number): Promise<WarpDoc> {
    return request(this.base, `/sessions/${id}/warp?resolution=${resolution}`);
  }

  deleteSession(id: string): Promise<void> {
    return request(this.base, `/sessions/${id}`, { method: "DELETE" });
  }
}
