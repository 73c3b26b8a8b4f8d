/**
 * Presenter session state machine. Owns everything the view shows and talks
 * to the service through an injected transport, so tests drive it with a fake
 * and the browser hands it the real client.
 *
 * Event handling is idempotent: the round that arrives over the websocket is
 * the same round the POST already returned, keyed by roundId, so applying it
 * twice is a no-op. That keeps the two delivery paths from racing.
 */

import type { ActiveChart, Profile, Round, Utterance } from "./api.js";

export interface Transport {
  createSession(config?: Record<string, number>): Promise<string>;
  appendUtterance(sessionId: string, speaker: string, text: string): Promise<Utterance>;
  setProfile(sessionId: string, profile: Profile): Promise<Profile>;
  runRound(sessionId: string): Promise<Round>;
  adopt(sessionId: string, roundId: string, candidateId: string): Promise<ActiveChart>;
  dismiss(sessionId: string, roundId: string, candidateId: string): Promise<void>;
}

export interface PresenterState {
  sessionId: string | null;
  transcript: Utterance[];
  profile: Profile;
  activeChart: ActiveChart | null;
  round: Round | null;
  roundInFlight: boolean;
  speaker: string;
  adoptedIds: Set<string>;
  dismissedKeys: Set<string>;
  lastError: string | null;
}

const DEFAULT_PROFILE: Profile = {
  expertise: "medium",
  domainFamiliarity: "medium",
  interests: [],
};

type ServerEvent = { type: string; sessionId: string; payload: Record<string, unknown> };

export class Controller {
  state: PresenterState = {
    sessionId: null,
    transcript: [],
    profile: { ...DEFAULT_PROFILE },
    activeChart: null,
    round: null,
    roundInFlight: false,
    speaker: "presenter",
    adoptedIds: new Set(),
    dismissedKeys: new Set(),
    lastError: null,
  };

  // one server-mutating action at a time; a second click waits its turn out
  private pendingAction = false;

  constructor(
    private transport: Transport,
    private onChange: () => void = () => {},
  ) {}

  private notify(): void {
    this.onChange();
  }

  private async guarded(action: () => Promise<void>): Promise<void> {
    if (this.pendingAction) return;
    this.pendingAction = true;
    this.state.lastError = null;
    try {
      await action();
    } catch (err) {
      this.state.lastError = err instanceof Error ? err.message : String(err);
    } finally {
      this.pendingAction = false;
      this.notify();
    }
  }

  async start(config?: Record<string, number>): Promise<void> {
    await this.guarded(async () => {
      this.state.sessionId = await this.transport.createSession(config);
    });
  }

  setSpeaker(speaker: string): void {
    this.state.speaker = speaker;
    this.notify();
  }

  /** Append narration; pasted multi-line text becomes one utterance per line. */
  async sendUtterance(text: string): Promise<void> {
    const sessionId = this.state.sessionId;
    if (!sessionId) return;
    const lines = text
      .split("\n")
      .map((line) => line.trim())
      .filter((line) => line.length > 0);
    if (lines.length === 0) return;
    await this.guarded(async () => {
      for (const line of lines) {
        const utterance = await this.transport.appendUtterance(
          sessionId,
          this.state.speaker,
          line,
        );
        this.appendToTranscript(utterance);
      }
    });
  }

  async saveProfile(profile: Profile): Promise<void> {
    const sessionId = this.state.sessionId;
    if (!sessionId) return;
    await this.guarded(async () => {
      this.state.profile = await this.transport.setProfile(sessionId, profile);
    });
  }

  async runRound(): Promise<void> {
    const sessionId = this.state.sessionId;
    if (!sessionId || this.state.roundInFlight) return;
    if (this.pendingAction) return;
    this.pendingAction = true;
    this.state.roundInFlight = true;
    this.state.lastError = null;
    this.notify();
    try {
      const round = await this.transport.runRound(sessionId);
      this.applyRound(round);
    } catch (err) {
      this.state.lastError = err instanceof Error ? err.message : String(err);
    } finally {
      this.state.roundInFlight = false;
      this.pendingAction = false;
      this.notify();
    }
  }

  async adopt(roundId: string, candidateId: string): Promise<void> {
    const sessionId = this.state.sessionId;
    if (!sessionId) return;
    await this.guarded(async () => {
      this.state.activeChart = await this.transport.adopt(sessionId, roundId, candidateId);
      this.state.adoptedIds.add(candidateId);
    });
  }

  async dismiss(roundId: string, candidateId: string): Promise<void> {
    const sessionId = this.state.sessionId;
    if (!sessionId) return;
    await this.guarded(async () => {
      await this.transport.dismiss(sessionId, roundId, candidateId);
      this.state.dismissedKeys.add(roundId + "/" + candidateId);
    });
  }

  private appendToTranscript(utterance: Utterance): void {
    // websocket echo and POST response both deliver; seq dedupes them
    if (this.state.transcript.some((u) => u.seq === utterance.seq)) return;
    this.state.transcript.push(utterance);
    this.state.transcript.sort((a, b) => a.seq - b.seq);
  }

  private applyRound(round: Round): void {
    if (this.state.round !== null && this.state.round.roundId === round.roundId) return;
    this.state.round = round;
  }

  /** Feed one decoded websocket event through the same state transitions. */
  applyEvent(event: ServerEvent): void {
    const payload = event.payload;
    switch (event.type) {
      case "utterance-appended":
        this.appendToTranscript(payload["utterance"] as Utterance);
        break;
      case "profile-changed":
        this.state.profile = payload["profile"] as Profile;
        break;
      case "round-started":
        this.state.roundInFlight = true;
        break;
      case "round-complete":
        this.applyRound(payload["round"] as Round);
        this.state.roundInFlight = false;
        break;
      case "chart-adopted": {
        this.state.activeChart = payload["activeChart"] as ActiveChart;
        const candidateId = payload["candidateId"];
        if (typeof candidateId === "string") this.state.adoptedIds.add(candidateId);
        break;
      }
      case "chart-set":
        this.state.activeChart = payload["activeChart"] as ActiveChart;
        break;
      case "candidate-dismissed": {
        const roundId = payload["roundId"];
        const candidateId = payload["candidateId"];
        if (typeof roundId === "string" && typeof candidateId === "string") {
          this.state.dismissedKeys.add(roundId + "/" + candidateId);
        }
        break;
      }
      default:
        break;
    }
    this.notify();
  }
}
