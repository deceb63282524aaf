import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError, NetworkError } from "../src/api.js";
import { jsonResponse, makeCandidate } from "./helpers.js";

const CONFIG = { serviceUrl: "http://svc:8000/", annotator: "ann a" };

function clientWith(fetchImpl: typeof fetch) {
  return new ApiClient(CONFIG, fetchImpl);
}

describe("ApiClient request shapes", () => {
  it("asks /api/next with the annotator in the query string", async () => {
    const fetchImpl = vi.fn(async () => jsonResponse({ candidate: null, remaining: 0 }));
    await clientWith(fetchImpl).next();
    const [url, init] = fetchImpl.mock.calls[0]!;
    expect(url).toBe("http://svc:8000/api/next?annotator=ann%20a");
    expect((init!.headers as Record<string, string>)["Authorization"]).toBe("Bearer ann a");
  });

  it("posts labels as JSON with the annotator id in the body", async () => {
    const fetchImpl = vi.fn(async () =>
      jsonResponse({
        ok: true,
        record: { candidate_id: "c-1", annotator_id: "ann a", label: "2", timestamp: 1 },
      }),
    );
    const ack = await clientWith(fetchImpl).submitLabel("c-1", "2");
    expect(ack.ok).toBe(true);
    const [url, init] = fetchImpl.mock.calls[0]!;
    expect(url).toBe("http://svc:8000/api/label");
    expect(init!.method).toBe("POST");
    expect((init!.headers as Record<string, string>)["Content-Type"]).toBe("application/json");
    expect(JSON.parse(init!.body as string)).toEqual({
      candidate_id: "c-1",
      annotator_id: "ann a",
      label: "2",
    });
  });

  it("reaches the three read-only endpoints at their fixed paths", async () => {
    const fetchImpl = vi.fn(async (url: RequestInfo | URL) => {
      const path = String(url);
      if (path.endsWith("/api/progress")) {
        return jsonResponse({
          candidates: 0, labels: 0, events: 0, per_annotator: {},
          accepted: 0, rejected: 0, pending: 0,
        });
      }
      if (path.endsWith("/api/agreement")) {
        return jsonResponse({ kappa: null, items: 0, raters: 6 });
      }
      if (path.endsWith("/api/export")) {
        return jsonResponse({
          instances: [makeCandidate("c-1")],
          matrix: { categories: ["1", "2", "neither", "unclear"], rows: [] },
          counts: { accepted: 0, rejected: 0, pending: 0 },
        });
      }
      throw new Error(`unexpected path ${path}`);
    });
    const client = clientWith(fetchImpl as typeof fetch);
    await client.progress();
    await client.agreement();
    const exported = await client.exportCorpus();
    expect(exported.instances[0]!.id).toBe("c-1");
    expect(fetchImpl).toHaveBeenCalledTimes(3);
  });
});

describe("ApiClient error mapping", () => {
  it("turns HTTP errors into ApiError with the service detail", async () => {
    const fetchImpl = vi.fn(async () => jsonResponse({ detail: "unknown candidate 'x'" }, 404));
    const attempt = clientWith(fetchImpl).submitLabel("x", "1");
    await expect(attempt).rejects.toBeInstanceOf(ApiError);
    await expect(attempt).rejects.toThrow(/404.*unknown candidate/);
  });

  it("keeps the status text when the error body is not JSON", async () => {
    const broken = {
      ok: false,
      status: 502,
      statusText: "Bad Gateway",
      json: async () => {
        throw new SyntaxError("not json");
      },
    } as unknown as Response;
    const fetchImpl = vi.fn(async () => broken);
    await expect(clientWith(fetchImpl).progress()).rejects.toThrow(/502.*Bad Gateway/);
  });

  it("turns a refused connection into NetworkError", async () => {
    const fetchImpl = vi.fn(async () => {
      throw new TypeError("fetch failed");
    });
    const attempt = clientWith(fetchImpl).next();
    await expect(attempt).rejects.toBeInstanceOf(NetworkError);
  });
});
