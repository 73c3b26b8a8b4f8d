import { describe, expect, it } from "vitest";

import { Api, ApiError } from "../src/api.js";

function jsonResponse(body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status: 200,
    headers: { "content-type": "application/json" },
  });
}

function ok(data: unknown): Response {
  return jsonResponse({ ok: true, data, serverTimeMs: 1 });
}

function failure(code: string, message: string): Response {
  return jsonResponse({ ok: false, error: { code, message }, serverTimeMs: 1 });
}

function apiWith(reply: Response): { api: Api; requests: { url: string; init?: RequestInit }[] } {
  const requests: { url: string; init?: RequestInit }[] = [];
  const api = new Api("http://svc:8040/", async (url, init) => {
    requests.push({ url, init });
    return reply;
  });
  return { api, requests };
}

describe("Api", () => {
  it("strips trailing slashes and posts JSON bodies", async () => {
    const { api, requests } = apiWith(ok({ sessionId: "s9" }));
    const sid = await api.createSession({ candidateCount: 4 });
    expect(sid).toBe("s9");
    expect(requests[0]?.url).toBe("http://svc:8040/sessions");
    expect(JSON.parse(String(requests[0]?.init?.body))).toEqual({
      config: { candidateCount: 4 },
    });
  });

  it("unwraps the envelope and validates the payload shape", async () => {
    const { api } = apiWith(
      ok({
        utterance: { seq: 3, speaker: "presenter", text: "hi", timestamp: 9 },
      }),
    );
    const utterance = await api.appendUtterance("s1", "presenter", "hi");
    expect(utterance.seq).toBe(3);
  });

  it("raises ApiError with the server's code on ok:false", async () => {
    const { api } = apiWith(failure("UnknownSession", "no session s1"));
    await expect(api.runRound("s1")).rejects.toMatchObject({
      name: "ApiError",
      code: "UnknownSession",
      message: "no session s1",
    });
    try {
      await apiWith(failure("RoundInFlight", "busy")).api.runRound("s1");
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
    }
  });

  it("rejects payloads that do not match the wire shape", async () => {
    const { api } = apiWith(ok({ round: { roundId: 7 } }));
    await expect(api.runRound("s1")).rejects.toThrow();
  });

  it("builds the websocket url from the http base", () => {
    expect(new Api("http://svc:8040").eventsUrl("s1")).toBe("ws://svc:8040/sessions/s1/events");
    expect(new Api("https://svc").eventsUrl("s1")).toBe("wss://svc/sessions/s1/events");
  });

  it("requests dataset slices with a row limit", async () => {
    const { api, requests } = apiWith(
      ok({ rows: [{ year: 1950 }], rowCount: 76, datasetId: "climate" }),
    );
    const rows = await api.datasetRows("climate", 500);
    expect(rows).toEqual([{ year: 1950 }]);
    expect(requests[0]?.url).toContain("/datasets/climate/slice?limit=500");
  });
});
