/**
 * Typed HTTP client for the suggestion service.
 *
 * Every response crosses the boundary through a zod schema, so a malformed
 * server payload fails loudly here instead of half-rendering. The fetch
 * implementation is injected so tests run without a browser or a server.
 */

import { z } from "zod";

// --- wire schemas ---

export const ScoresSchema = z.object({
  relevance: z.number(),
  audienceFit: z.number(),
  dataValidity: z.number(),
});

export const CandidateSchema = z.looseObject({
  candidateId: z.string(),
  index: z.number(),
  chartType: z.string(),
  title: z.string(),
  rationale: z.string(),
  scores: ScoresSchema,
  finalScore: z.number(),
  flags: z.array(z.string()),
  specSource: z.string(),
  spec: z.record(z.string(), z.unknown()).nullable(),
  tableView: z.object({ columns: z.array(z.string()) }).nullable(),
});

export const RoundSchema = z.looseObject({
  roundId: z.string(),
  status: z.string(),
  datasetId: z.string().nullable(),
  ranked: z.array(CandidateSchema),
});

export const ActiveChartSchema = z.looseObject({
  kind: z.string(),
  datasetId: z.string(),
  title: z.string(),
  provenance: z.record(z.string(), z.unknown()),
  spec: z.record(z.string(), z.unknown()).optional(),
  columns: z.array(z.string()).optional(),
});

export const UtteranceSchema = z.object({
  seq: z.number(),
  speaker: z.string(),
  text: z.string(),
  timestamp: z.number(),
});

export const ProfileSchema = z.object({
  expertise: z.string(),
  domainFamiliarity: z.string(),
  interests: z.array(z.string()),
});

export const SessionStateSchema = z.looseObject({
  sessionId: z.string(),
  transcript: z.array(UtteranceSchema),
  profile: ProfileSchema,
  activeChart: ActiveChartSchema.nullable(),
  adoptions: z.array(z.record(z.string(), z.unknown())),
  dismissals: z.array(z.record(z.string(), z.unknown())),
});

const EnvelopeSchema = z.object({
  ok: z.boolean(),
  data: z.unknown().optional(),
  error: z.object({ code: z.string(), message: z.string() }).optional(),
  serverTimeMs: z.number(),
});

export type Scores = z.infer<typeof ScoresSchema>;
export type Candidate = z.infer<typeof CandidateSchema>;
export type Round = z.infer<typeof RoundSchema>;
export type ActiveChart = z.infer<typeof ActiveChartSchema>;
export type Utterance = z.infer<typeof UtteranceSchema>;
export type Profile = z.infer<typeof ProfileSchema>;
export type SessionState = z.infer<typeof SessionStateSchema>;

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class Api {
  private fetchFn: FetchLike;

  constructor(
    public baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    // bind lazily so the browser's fetch keeps its window receiver
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const response = await this.fetchFn(this.baseUrl + path, init);
    const envelope = EnvelopeSchema.parse(await response.json());
    if (!envelope.ok) {
      const err = envelope.error ?? { code: "Unknown", message: "no error detail" };
      throw new ApiError(err.code, err.message);
    }
    return envelope.data;
  }

  async createSession(config?: Record<string, number>): Promise<string> {
    const data = await this.request("POST", "/sessions", config ? { config } : {});
    return z.object({ sessionId: z.string() }).parse(data).sessionId;
  }

  async getSession(sessionId: string): Promise<SessionState> {
    return SessionStateSchema.parse(await this.request("GET", `/sessions/${sessionId}`));
  }

  async appendUtterance(sessionId: string, speaker: string, text: string): Promise<Utterance> {
    const data = await this.request("POST", `/sessions/${sessionId}/utterances`, { speaker, text });
    return z.object({ utterance: UtteranceSchema }).parse(data).utterance;
  }

  async setProfile(sessionId: string, profile: Profile): Promise<Profile> {
    const data = await this.request("PUT", `/sessions/${sessionId}/profile`, profile);
    return z.object({ profile: ProfileSchema }).parse(data).profile;
  }

  async setActiveChart(
    sessionId: string,
    chart: { datasetId: string; title?: string; spec: Record<string, unknown> },
  ): Promise<ActiveChart> {
    const data = await this.request("PUT", `/sessions/${sessionId}/active-chart`, chart);
    return z.object({ activeChart: ActiveChartSchema }).parse(data).activeChart;
  }

  async runRound(sessionId: string): Promise<Round> {
    const data = await this.request("POST", `/sessions/${sessionId}/rounds`);
    return z.object({ round: RoundSchema }).parse(data).round;
  }

  async adopt(sessionId: string, roundId: string, candidateId: string): Promise<ActiveChart> {
    const data = await this.request(
      "POST",
      `/sessions/${sessionId}/rounds/${roundId}/candidates/${candidateId}/adopt`,
    );
    return z.object({ activeChart: ActiveChartSchema }).parse(data).activeChart;
  }

  async dismiss(sessionId: string, roundId: string, candidateId: string): Promise<void> {
    await this.request(
      "POST",
      `/sessions/${sessionId}/rounds/${roundId}/candidates/${candidateId}/dismiss`,
    );
  }

  async datasetRows(datasetId: string, limit = 1000): Promise<Record<string, unknown>[]> {
    const data = await this.request("GET", `/datasets/${datasetId}/slice?limit=${limit}`);
    const shape = z.looseObject({ rows: z.array(z.record(z.string(), z.unknown())) });
    return shape.parse(data).rows;
  }

  eventsUrl(sessionId: string): string {
    return this.baseUrl.replace(/^http/, "ws") + `/sessions/${sessionId}/events`;
  }
}
