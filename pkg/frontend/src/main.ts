/**
 * Browser entry point. Wires the controller to the DOM, streams session
 * events over the websocket, and draws the active chart with vega-embed
 * when the CDN build is present.
 */

import { Api, ApiError } from "./api.js";
import { Controller } from "./controller.js";
import {
  renderActiveChart,
  renderError,
  renderProfile,
  renderRoundButton,
  renderSuggestions,
  renderTranscript,
} from "./render.js";

declare global {
  interface Window {
    vegaEmbed?: (el: Element, spec: unknown, opts?: unknown) => Promise<unknown>;
  }
}

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "http://127.0.0.1:8040";

const api = new Api(baseUrl);
const controller = new Controller(api, render);

// --- DOM handles ---

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

const transcriptEl = el("transcript");
const profileEl = el("profile");
const suggestionsEl = el("suggestions");
const chartEl = el("active-chart");
const roundEl = el("round-controls");
const errorEl = el("errors");
const inputEl = el("utterance-input") as HTMLTextAreaElement;
const speakerEl = el("speaker") as HTMLSelectElement;

// --- rendering ---

const rowCache = new Map<string, Record<string, unknown>[]>();

async function datasetRows(datasetId: string): Promise<Record<string, unknown>[]> {
  const cached = rowCache.get(datasetId);
  if (cached) return cached;
  const rows = await api.datasetRows(datasetId);
  rowCache.set(datasetId, rows);
  return rows;
}

async function drawChart(): Promise<void> {
  const chart = controller.state.activeChart;
  if (!chart || chart.kind !== "vega" || !chart.spec) return;
  const host = document.getElementById("chart-host");
  if (!host) return;
  try {
    const rows = await datasetRows(chart.datasetId);
    const spec = { ...chart.spec, data: { values: rows } };
    if (window.vegaEmbed) {
      await window.vegaEmbed(host, spec, { actions: false });
    } else {
      host.innerHTML = `<pre class="spec-dump">${JSON.stringify(chart.spec, null, 2)
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")}</pre>`;
    }
  } catch (err) {
    host.textContent = `chart render failed: ${err instanceof Error ? err.message : err}`;
  }
}

function render(): void {
  const state = controller.state;
  transcriptEl.innerHTML = renderTranscript(state.transcript);
  profileEl.innerHTML = renderProfile(state.profile);
  suggestionsEl.innerHTML = renderSuggestions(state.round, state.adoptedIds, state.dismissedKeys);
  chartEl.innerHTML = renderActiveChart(state.activeChart);
  roundEl.innerHTML = renderRoundButton(state.roundInFlight);
  errorEl.innerHTML = renderError(state.lastError);
  transcriptEl.scrollTop = transcriptEl.scrollHeight;
  void drawChart();
}

// --- events ---

document.addEventListener("click", (event) => {
  const target = event.target;
  if (!(target instanceof HTMLElement)) return;
  const button = target.closest("button[data-action]");
  if (!(button instanceof HTMLButtonElement) || button.disabled) return;
  const action = button.dataset.action;
  const roundId = button.dataset.roundId ?? "";
  const candidateId = button.dataset.candidateId ?? "";
  if (action === "run-round") void controller.runRound();
  else if (action === "adopt") void controller.adopt(roundId, candidateId);
  else if (action === "dismiss") void controller.dismiss(roundId, candidateId);
});

inputEl.addEventListener("keydown", (event) => {
  if (event.key === "Enter" && !event.shiftKey) {
    event.preventDefault();
    const text = inputEl.value;
    inputEl.value = "";
    void controller.sendUtterance(text);
  }
});

speakerEl.addEventListener("change", () => controller.setSpeaker(speakerEl.value));

profileEl.addEventListener("change", () => {
  const expertise = profileEl.querySelector<HTMLSelectElement>("[data-profile-field=expertise]");
  const familiarity = profileEl.querySelector<HTMLSelectElement>(
    "[data-profile-field=domainFamiliarity]",
  );
  const interests = profileEl.querySelector<HTMLInputElement>("[data-profile-field=interests]");
  void controller.saveProfile({
    expertise: expertise?.value ?? "medium",
    domainFamiliarity: familiarity?.value ?? "medium",
    interests: (interests?.value ?? "")
      .split(",")
      .map((s) => s.trim())
      .filter((s) => s.length > 0),
  });
});

// --- websocket stream ---

function connectEvents(sessionId: string): void {
  const socket = new WebSocket(api.eventsUrl(sessionId));
  socket.onmessage = (message) => {
    try {
      controller.applyEvent(JSON.parse(message.data));
    } catch {
      // a malformed frame is the server's problem, not a reason to crash
    }
  };
  socket.onclose = () => {
    setTimeout(() => connectEvents(sessionId), 2000);
  };
}

// --- boot ---

async function boot(): Promise<void> {
  try {
    await controller.start();
    const sessionId = controller.state.sessionId;
    if (sessionId) {
      el("session-id").textContent = sessionId;
      connectEvents(sessionId);
    }
  } catch (err) {
    errorEl.innerHTML = renderError(
      err instanceof ApiError ? `${err.code}: ${err.message}` : String(err),
    );
  }
  render();
}

void boot();
