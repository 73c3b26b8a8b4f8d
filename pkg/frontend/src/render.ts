/**
 * HTML renderers for the presenter view. Pure string builders, no DOM access,
 * so they test as plain functions.
 */

import type { ActiveChart, Candidate, Profile, Round, Utterance } from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderTranscript(transcript: Utterance[]): string {
  if (transcript.length === 0) {
    return `<p class="empty">No utterances yet. Type below to narrate.</p>`;
  }
  const items = transcript
    .map(
      (u) =>
        `<li class="utterance utterance-${escapeHtml(u.speaker)}">` +
        `<span class="speaker">${escapeHtml(u.speaker)}</span>` +
        `<span class="text">${escapeHtml(u.text)}</span></li>`,
    )
    .join("");
  return `<ol class="transcript">${items}</ol>`;
}

export function renderProfile(profile: Profile): string {
  const levels = ["low", "medium", "high"];
  const select = (name: string, current: string) => {
    const options = levels
      .map(
        (level) =>
          `<option value="${level}"${level === current ? " selected" : ""}>${level}</option>`,
      )
      .join("");
    return `<select name="${name}" data-profile-field="${name}">${options}</select>`;
  };
  return (
    `<label>Expertise ${select("expertise", profile.expertise)}</label>` +
    `<label>Domain familiarity ${select("domainFamiliarity", profile.domainFamiliarity)}</label>` +
    `<input name="interests" data-profile-field="interests" ` +
    `value="${escapeHtml(profile.interests.join(", "))}" placeholder="interests, comma separated">`
  );
}

export function renderCandidateCard(
  candidate: Candidate,
  roundId: string,
  opts: { adopted?: boolean; dismissed?: boolean } = {},
): string {
  const { adopted = false, dismissed = false } = opts;
  const flags = candidate.flags
    .map((f) => `<span class="flag">${escapeHtml(f)}</span>`)
    .join("");
  const badge =
    candidate.specSource === "template"
      ? `<span class="badge badge-template">template</span>`
      : candidate.spec === null
        ? `<span class="badge badge-table">table</span>`
        : "";
  const classes = ["card"];
  if (adopted) classes.push("card-adopted");
  if (dismissed) classes.push("card-dismissed");
  return (
    `<article class="${classes.join(" ")}" data-candidate-id="${escapeHtml(candidate.candidateId)}">` +
    `<header><h3>${escapeHtml(candidate.title)}</h3>` +
    `<span class="score">${candidate.finalScore}</span></header>` +
    `<p class="chart-type">${escapeHtml(candidate.chartType)}${badge}</p>` +
    `<p class="rationale">${escapeHtml(candidate.rationale)}</p>` +
    (flags ? `<p class="flags">${flags}</p>` : "") +
    `<footer>` +
    `<button data-action="adopt" data-round-id="${escapeHtml(roundId)}" ` +
    `data-candidate-id="${escapeHtml(candidate.candidateId)}"` +
    `${adopted || dismissed ? " disabled" : ""}>Adopt</button>` +
    `<button data-action="dismiss" data-round-id="${escapeHtml(roundId)}" ` +
    `data-candidate-id="${escapeHtml(candidate.candidateId)}"` +
    `${adopted || dismissed ? " disabled" : ""}>Dismiss</button>` +
    `</footer></article>`
  );
}

export function renderSuggestions(
  round: Round | null,
  adoptedIds: Set<string>,
  dismissedKeys: Set<string>,
): string {
  if (round === null) {
    return `<p class="empty">No suggestions yet. Run a round when the narration has context.</p>`;
  }
  // server order is the ranking; never reorder client-side
  const cards = round.ranked
    .map((candidate) =>
      renderCandidateCard(candidate, round.roundId, {
        adopted: adoptedIds.has(candidate.candidateId),
        dismissed: dismissedKeys.has(round.roundId + "/" + candidate.candidateId),
      }),
    )
    .join("");
  return `<div class="cards" data-round-id="${escapeHtml(round.roundId)}">${cards}</div>`;
}

export function renderRoundButton(inFlight: boolean): string {
  return (
    `<button id="run-round" data-action="run-round"${inFlight ? " disabled" : ""}>` +
    `${inFlight ? "Running..." : "Suggest charts"}</button>`
  );
}

export function renderActiveChart(chart: ActiveChart | null): string {
  if (chart === null) {
    return `<p class="empty">No active chart.</p>`;
  }
  const origin = typeof chart.provenance["origin"] === "string" ? chart.provenance["origin"] : "";
  const provenance = origin
    ? `<span class="badge badge-provenance">${escapeHtml(origin)}</span>`
    : "";
  const body =
    chart.kind === "table"
      ? `<p class="table-note">Table view: ${escapeHtml((chart.columns ?? []).join(", "))}</p>`
      : `<div id="chart-host" class="chart-host"></div>`;
  return (
    `<header><h3>${escapeHtml(chart.title)}</h3>${provenance}</header>` +
    `<p class="dataset">dataset: ${escapeHtml(chart.datasetId)}</p>` +
    body
  );
}

export function renderError(message: string | null): string {
  if (!message) return "";
  return `<div class="error-card" role="alert">${escapeHtml(message)}</div>`;
}
