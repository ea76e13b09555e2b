/** Transport boundary: the session talks to the service only through this
 * interface, so tests can intercept every request and replay recorded
 * responses without touching the network. */

export interface TransportRequest {
  method: "GET" | "POST";
  path: string;
  body?: unknown;
  signal?: AbortSignal;
}

export interface TransportResponse {
  status: number;
  body: unknown;
}

export type Transport = (req: TransportRequest) => Promise<TransportResponse>;

/** Real transport: fetch against a service base URL. */
export function fetchTransport(baseUrl: string): Transport {
  const base = baseUrl.replace(/\/$/, "");
  return async (req) => {
    const init: RequestInit = { method: req.method, signal: req.signal ?? null };
    if (req.body !== undefined) {
      init.body = JSON.stringify(req.body);
      init.headers = { "content-type": "application/json" };
    }
    const resp = await fetch(base + req.path, init);
    return { status: resp.status, body: await resp.json() };
  };
}
