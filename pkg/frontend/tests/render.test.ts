import { describe, expect, it } from "vitest";

import type { ActiveChart, Candidate, Round } from "../src/api.js";
import {
  escapeHtml,
  renderActiveChart,
  renderCandidateCard,
  renderRoundButton,
  renderSuggestions,
  renderTranscript,
} from "../src/render.js";

function candidate(overrides: Partial<Candidate> = {}): Candidate {
  return {
    candidateId: "c0",
    index: 0,
    chartType: "line",
    title: "Temperature over time",
    rationale: "Tracks the trend the presenter is describing",
    scores: { relevance: 90, audienceFit: 70, dataValidity: 80 },
    finalScore: 83,
    flags: [],
    specSource: "llm",
    spec: { mark: "line" },
    tableView: null,
    ...overrides,
  };
}

function round(ranked: Candidate[]): Round {
  return { roundId: "r1", status: "complete", datasetId: "climate", ranked };
}

describe("escapeHtml", () => {
  it("neutralizes markup", () => {
    expect(escapeHtml(`<img src="x" & more>`)).toBe(
      "&lt;img src=&quot;x&quot; &amp; more&gt;",
    );
  });
});

describe("renderTranscript", () => {
  it("shows a placeholder when empty", () => {
    expect(renderTranscript([])).toContain("No utterances yet");
  });

  it("renders speaker and escaped text in order", () => {
    const html = renderTranscript([
      { seq: 1, speaker: "presenter", text: "warming <fast>", timestamp: 1 },
      { seq: 2, speaker: "audience", text: "since when?", timestamp: 2 },
    ]);
    expect(html.indexOf("warming &lt;fast&gt;")).toBeLessThan(html.indexOf("since when?"));
    expect(html).toContain("utterance-presenter");
    expect(html).toContain("utterance-audience");
  });
});

describe("renderCandidateCard", () => {
  it("includes title, rationale, score, and wired buttons", () => {
    const html = renderCandidateCard(candidate(), "r1");
    expect(html).toContain("Temperature over time");
    expect(html).toContain("Tracks the trend");
    expect(html).toContain(">83<");
    expect(html).toContain(`data-action="adopt"`);
    expect(html).toContain(`data-action="dismiss"`);
    expect(html).toContain(`data-round-id="r1"`);
    expect(html).toContain(`data-candidate-id="c0"`);
    expect(html).not.toContain("disabled");
  });

  it("marks template fallbacks and table candidates", () => {
    expect(renderCandidateCard(candidate({ specSource: "template" }), "r1")).toContain(
      "badge-template",
    );
    expect(
      renderCandidateCard(candidate({ spec: null, tableView: { columns: ["a"] } }), "r1"),
    ).toContain("badge-table");
  });

  it("disables actions once adopted or dismissed", () => {
    expect(renderCandidateCard(candidate(), "r1", { adopted: true })).toContain("disabled");
    expect(renderCandidateCard(candidate(), "r1", { dismissed: true })).toContain(
      "card-dismissed",
    );
  });
});

describe("renderSuggestions", () => {
  it("keeps server order even when scores disagree", () => {
    // ranking is the server's job; a client re-sort would hide ties broken by index
    const html = renderSuggestions(
      round([
        candidate({ candidateId: "c2", finalScore: 60, title: "first" }),
        candidate({ candidateId: "c0", finalScore: 95, title: "second" }),
      ]),
      new Set(),
      new Set(),
    );
    expect(html.indexOf("first")).toBeLessThan(html.indexOf("second"));
  });

  it("flags dismissed cards by round-scoped key", () => {
    const html = renderSuggestions(
      round([candidate()]),
      new Set(),
      new Set(["r1/c0"]),
    );
    expect(html).toContain("card-dismissed");
  });
});

describe("renderRoundButton", () => {
  it("disables while a round is in flight", () => {
    expect(renderRoundButton(false)).not.toContain("disabled");
    expect(renderRoundButton(true)).toContain("disabled");
    expect(renderRoundButton(true)).toContain("Running");
  });
});

describe("renderActiveChart", () => {
  it("renders a vega host with provenance badge", () => {
    const chart: ActiveChart = {
      kind: "vega",
      datasetId: "climate",
      title: "Adopted view",
      provenance: { origin: "adopted", roundId: "r1", candidateId: "c0" },
      spec: { mark: "line" },
    };
    const html = renderActiveChart(chart);
    expect(html).toContain("Adopted view");
    expect(html).toContain("adopted");
    expect(html).toContain("chart-host");
  });

  it("renders table views as a column note", () => {
    const chart: ActiveChart = {
      kind: "table",
      datasetId: "climate",
      title: "Raw numbers",
      provenance: { origin: "manual" },
      columns: ["year", "temp_anomaly"],
    };
    const html = renderActiveChart(chart);
    expect(html).toContain("year, temp_anomaly");
    expect(html).not.toContain("chart-host");
  });
});
