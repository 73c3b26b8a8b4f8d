/**
 * End-to-end against a real server process running the replay backend on the
 * recorded climate session. Exercises the same controller and renderers the
 * browser uses; only the websocket is skipped because this node runtime has
 * no global WebSocket (the event path is covered in controller.test.ts).
 */

import { type ChildProcess, spawn } from "node:child_process";
import { readFileSync, mkdtempSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Api } from "../src/api.js";
import { Controller } from "../src/controller.js";
import { renderRoundButton, renderSuggestions } from "../src/render.js";

const repoRoot = resolve(dirname(fileURLToPath(import.meta.url)), "../..");
const dataDir = join(repoRoot, "data");
const replayDir = join(repoRoot, "fixtures", "climate", "replies");
const scenarioDir = join(repoRoot, "fixtures", "climate");

let server: ChildProcess;
let serverLog = "";
let logDir: string;
let baseUrl: string;

function freePort(): Promise<number> {
  return new Promise((resolvePort, reject) => {
    const probe = createServer();
    probe.on("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      probe.close(() => resolvePort(address.port));
    });
  });
}

async function waitForHealth(url: string): Promise<void> {
  const deadline = Date.now() + 20_000;
  for (;;) {
    try {
      const response = await fetch(url + "/health");
      if (response.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      throw new Error(`server never became healthy\n${serverLog}`);
    }
    await new Promise((r) => setTimeout(r, 150));
  }
}

beforeAll(async () => {
  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}`;
  logDir = mkdtempSync(join(tmpdir(), "presenter-ui-"));
  server = spawn(
    "chartscout",
    [
      "serve",
      "--data-dir",
      dataDir,
      "--backend",
      "replay",
      "--replay-dir",
      replayDir,
      "--port",
      String(port),
      "--log-dir",
      logDir,
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stdout?.on("data", (chunk) => (serverLog += chunk));
  server.stderr?.on("data", (chunk) => (serverLog += chunk));
  await waitForHealth(baseUrl);
}, 30_000);

afterAll(async () => {
  if (server && server.exitCode === null) {
    server.kill("SIGTERM");
    await new Promise((r) => {
      server.on("exit", r);
      setTimeout(r, 3_000);
    });
  }
});

describe("climate session over the wire", () => {
  it(
    "runs a round, adopts the top card, and the server log records it",
    async () => {
      const api = new Api(baseUrl);
      const buttonStates: string[] = [];
      const controller = new Controller(api, () => {
        buttonStates.push(renderRoundButton(controller.state.roundInFlight));
      });

      await controller.start();
      const sessionId = controller.state.sessionId;
      expect(sessionId).toBeTruthy();
      if (!sessionId) return;

      // seed the recorded session: narration, audience profile, opening chart
      const transcript = readFileSync(join(scenarioDir, "transcript.txt"), "utf-8");
      const lines = transcript
        .split("\n")
        .map((line) => line.trim())
        .filter((line) => line.length > 0)
        .map((line) => {
          const sep = line.indexOf(":");
          return { speaker: line.slice(0, sep).trim(), text: line.slice(sep + 1).trim() };
        });
      for (const { speaker, text } of lines) {
        controller.setSpeaker(speaker);
        await controller.sendUtterance(text);
      }
      expect(controller.state.lastError).toBeNull();
      expect(controller.state.transcript).toHaveLength(lines.length);

      const profile = JSON.parse(readFileSync(join(scenarioDir, "profile.json"), "utf-8"));
      await controller.saveProfile(profile);
      const opening = JSON.parse(readFileSync(join(scenarioDir, "active_chart.json"), "utf-8"));
      controller.state.activeChart = await api.setActiveChart(sessionId, opening);

      // the round: button must read disabled somewhere between start and finish
      await controller.runRound();
      expect(controller.state.lastError).toBeNull();
      expect(buttonStates.some((html) => html.includes("disabled"))).toBe(true);
      expect(buttonStates[buttonStates.length - 1]).not.toContain("disabled");

      const round = controller.state.round;
      expect(round).not.toBeNull();
      if (!round) return;
      expect(round.status).toBe("complete");
      expect(round.ranked).toHaveLength(8);

      // scores must arrive non-increasing and every card must carry a rationale
      const finals = round.ranked.map((c) => c.finalScore);
      for (let i = 1; i < finals.length; i++) {
        expect(finals[i]).toBeLessThanOrEqual(finals[i - 1] ?? Infinity);
      }
      for (const candidate of round.ranked) {
        expect(candidate.rationale.length).toBeGreaterThan(0);
      }

      // the rendered column shows all eight cards in server order
      const html = renderSuggestions(round, controller.state.adoptedIds, new Set());
      const cardOrder = [...html.matchAll(/data-candidate-id="(c\d+)"/g)].map((m) => m[1]);
      expect(new Set(cardOrder).size).toBe(8);
      expect([...new Set(cardOrder)]).toEqual(round.ranked.map((c) => c.candidateId));
      for (const candidate of round.ranked) {
        expect(html).toContain(candidate.rationale);
      }

      // adopt the top card; the active chart swaps to that candidate's spec
      const top = round.ranked[0];
      expect(top).toBeDefined();
      if (!top) return;
      const chartBefore = controller.state.activeChart;
      await controller.adopt(round.roundId, top.candidateId);
      expect(controller.state.lastError).toBeNull();
      const chart = controller.state.activeChart;
      expect(chart).not.toBeNull();
      expect(chart).not.toBe(chartBefore);
      expect(chart?.provenance["origin"]).toBe("adopted");
      expect(chart?.provenance["candidateId"]).toBe(top.candidateId);
      expect(chart?.spec).toEqual(top.spec);

      // and the server's event log holds the adoption with the candidate id
      const logLines = readFileSync(join(logDir, `${sessionId}.jsonl`), "utf-8")
        .split("\n")
        .filter((line) => line.length > 0)
        .map((line) => JSON.parse(line));
      const adopted = logLines.filter((event) => event.type === "chart-adopted");
      expect(adopted).toHaveLength(1);
      expect(adopted[0].payload.candidateId).toBe(top.candidateId);
      expect(adopted[0].payload.roundId).toBe(round.roundId);
      expect(adopted[0].sessionId).toBe(sessionId);
    },
    30_000,
  );

  it("reports server-side refusals without crashing", async () => {
    const api = new Api(baseUrl);
    const controller = new Controller(api);
    await controller.start();
    // a fresh session has nothing to analyze; the server refuses the round
    await controller.runRound();
    expect(controller.state.roundInFlight).toBe(false);
    expect(controller.state.lastError).toContain("nothing to analyze");
    expect(controller.state.round).toBeNull();
  });
});
