"""Suggestion rounds: analysis, selection, generation, then per-candidate
evaluation and chart-document generation in parallel, then ranking.

The first three stages run sequentially and any failure aborts the round
(StageFailed carries which stage). The fan-out degrades per candidate
instead: a candidate whose document cannot be produced is excluded, a
candidate whose evaluation failed keeps a zeroed rubric. The deadline never
raises; an expired round reports status "partial" (something ranked) or
"failed" (nothing ranked).

Parallelism counts candidates in flight. Within one candidate the rubric
call and the document call overlap, except at parallelism 1 where the round
is fully serial so call costs add up predictably.
"""

from __future__ import annotations

import asyncio
import json
import time
import uuid
from dataclasses import dataclass

from ..catalog import load_catalog
from ..errors import ChartScoutError, EmptyCatalog, InsufficientContext, RoundEmpty, RoundInFlight, StageFailed
from ..gateway import BackendConfig, Gateway, build_backend, normalize_text
from ..session import SPEAKERS, SessionConfig, SessionSnapshot, SessionStore, now_ms
from ..stages import (
    DIVERSITY_FLAG,
    SOURCE_NONE,
    ScoredCandidate,
    final_score,
    generate_spec,
    rank_candidates,
    run_analysis,
    run_evaluation,
    run_generation,
    run_selection,
)
from .cache import StageCache, cache_key

STAGES = ("analysis", "selection", "generation", "specgen", "evaluation")

STATUS_COMPLETE = "complete"
STATUS_PARTIAL = "partial"
STATUS_FAILED = "failed"

REASON_DEADLINE = "deadline"
REASON_SPEC_FAILED = "spec-failed"
REASON_ERROR = "error"


@dataclass
class SuggestionRound:
    round_id: str
    session_id: str
    status: str
    dataset_id: str | None
    analysis: dict | None
    selection: dict | None
    ranked: list[dict]
    excluded: list[dict]
    timings: dict
    cache_hits: dict
    prompt_version: str
    created_at: int

    def to_json(self) -> dict:
        return {
            "roundId": self.round_id,
            "sessionId": self.session_id,
            "status": self.status,
            "datasetId": self.dataset_id,
            "analysis": self.analysis,
            "selection": self.selection,
            "ranked": self.ranked,
            "excluded": self.excluded,
            "timings": self.timings,
            "cacheHits": self.cache_hits,
            "promptVersion": self.prompt_version,
            "createdAt": self.created_at,
        }

    def content_view(self) -> dict:
        """The deterministic part: no ids, no timestamps, no timings."""
        return {
            "status": self.status,
            "datasetId": self.dataset_id,
            "analysis": self.analysis,
            "selection": self.selection,
            "ranked": self.ranked,
            "excluded": self.excluded,
            "promptVersion": self.prompt_version,
        }


class _Tracker:
    """First-start to last-end wall window per stage, plus cache hit bits."""

    def __init__(self) -> None:
        self.windows: dict[str, list[float]] = {}
        self.hits: dict[str, list[bool]] = {}

    def note(self, stage: str, start: float, end: float, hit: bool) -> None:
        window = self.windows.get(stage)
        if window is None:
            self.windows[stage] = [start, end]
        else:
            window[0] = min(window[0], start)
            window[1] = max(window[1], end)
        self.hits.setdefault(stage, []).append(hit)

    def timings_ms(self) -> dict:
        out = {}
        for stage in STAGES:
            window = self.windows.get(stage)
            out[stage] = round((window[1] - window[0]) * 1000, 2) if window else 0.0
        return out

    def cache_hits(self) -> dict:
        # a stage that never ran reports False, not a vacuous True
        return {stage: bool(self.hits.get(stage)) and all(self.hits[stage]) for stage in STAGES}


class Orchestrator:
    def __init__(self, store: SessionStore, gateway: Gateway, cache: StageCache | None = None):
        self.store = store
        self.gateway = gateway
        self.cache = cache if cache is not None else StageCache()

    async def run_round(self, session_id: str) -> SuggestionRound:
        session = self.store.get(session_id)
        if session.round_in_flight:
            raise RoundInFlight(f"session {session_id} already has a round running")
        session.round_in_flight = True
        try:
            snapshot = self.store.snapshot(session_id)
            round_id = uuid.uuid4().hex
            self.store.notify(session_id, "round-started", {"roundId": round_id})
            result = await self.run_snapshot(snapshot, round_id)
            self.store.store_round(session_id, result.to_json())
            return result
        finally:
            session.round_in_flight = False

    async def run_snapshot(self, snapshot: SessionSnapshot, round_id: str | None = None) -> SuggestionRound:
        round_id = round_id or uuid.uuid4().hex
        created = now_ms()
        started = time.perf_counter()
        deadline = started + snapshot.config.deadline_ms / 1000.0
        tracker = _Tracker()
        version = snapshot.prompt_version
        fingerprints = snapshot.catalog.fingerprints()

        def remaining() -> float:
            return deadline - time.perf_counter()

        async def staged(stage: str, parts: dict, runner):
            key = cache_key(stage, version, parts)
            t0 = time.perf_counter()
            hit, value = self.cache.lookup(stage, key)
            if not hit:
                budget = remaining()
                if budget <= 0:
                    tracker.note(stage, t0, time.perf_counter(), hit=False)
                    raise asyncio.TimeoutError
                try:
                    value = await asyncio.wait_for(runner(), budget)
                finally:
                    tracker.note(stage, t0, time.perf_counter(), hit=False)
                self.cache.put(stage, key, value)
            else:
                tracker.note(stage, t0, time.perf_counter(), hit=True)
            return value

        def finish(status, selection, analysis, ranked, excluded) -> SuggestionRound:
            timings = tracker.timings_ms()
            timings["total"] = round((time.perf_counter() - started) * 1000, 2)
            return SuggestionRound(
                round_id=round_id,
                session_id=snapshot.session_id,
                status=status,
                dataset_id=selection.dataset_id if selection else None,
                analysis=analysis.to_json() if analysis else None,
                selection=selection.to_json() if selection else None,
                ranked=[c.to_json() for c in ranked],
                excluded=excluded,
                timings=timings,
                cache_hits=tracker.cache_hits(),
                prompt_version=version,
                created_at=created,
            )

        analysis = None
        selection = None

        # stages 1..3: sequential, failure aborts the round
        try:
            analysis = await staged(
                "analysis",
                {
                    "fingerprints": fingerprints,
                    "transcript": [[u.speaker, normalize_text(u.text)] for u in snapshot.transcript_window],
                    "chart": snapshot.active_chart.canonical() if snapshot.active_chart else None,
                    "profile": snapshot.profile.to_json(),
                },
                lambda: run_analysis(self.gateway, snapshot),
            )
            selection = await staged(
                "selection",
                {"fingerprints": fingerprints, "analysis": analysis.to_json()},
                lambda: run_selection(self.gateway, analysis, snapshot.catalog, version),
            )
            dataset = snapshot.catalog.get(selection.dataset_id)
            schema = dataset.table.schema
            n = snapshot.config.candidate_count
            generation = await staged(
                "generation",
                {
                    "fingerprints": fingerprints,
                    "analysis": analysis.to_json(),
                    "selection": selection.to_json(),
                    "n": n,
                },
                lambda: run_generation(self.gateway, analysis, selection, n, schema, version),
            )
        except asyncio.TimeoutError:
            return finish(STATUS_FAILED, selection, analysis, [], [])
        except (InsufficientContext, EmptyCatalog):
            raise  # precondition, not a stage malfunction
        except ChartScoutError as exc:
            stage = "analysis" if analysis is None else ("selection" if selection is None else "generation")
            raise StageFailed(stage, f"{stage}: {exc.code}: {exc}") from exc

        # fan-out: rubric and chart document per candidate
        sem = asyncio.Semaphore(snapshot.config.parallelism)
        serial = snapshot.config.parallelism == 1

        async def process(draft):
            eval_parts = {
                "draft": draft.to_json(),
                "analysis": analysis.to_json(),
                "profile": snapshot.profile.to_json(),
                "selection": selection.to_json(),
            }
            spec_parts = {
                "dataset": selection.dataset_id,
                "fingerprint": dataset.fingerprint,
                "draft": draft.to_json(),
            }
            async with sem:
                eval_coro = staged(
                    "evaluation",
                    eval_parts,
                    lambda: run_evaluation(self.gateway, draft, analysis, snapshot.profile, selection, version),
                )
                spec_coro = staged(
                    "specgen",
                    spec_parts,
                    lambda: generate_spec(self.gateway, draft, schema, selection.dataset_id, version),
                )
                if serial:
                    rubric = await eval_coro
                    spec_result = await spec_coro
                else:
                    results = await asyncio.gather(eval_coro, spec_coro, return_exceptions=True)
                    for item in results:
                        if isinstance(item, BaseException):
                            raise item
                    rubric, spec_result = results
            return rubric, spec_result

        tasks: dict[asyncio.Task, object] = {}
        for draft in generation.drafts:
            tasks[asyncio.create_task(process(draft))] = draft

        pending: set = set()
        if tasks:
            done, pending = await asyncio.wait(tasks.keys(), timeout=max(remaining(), 0.0))
            for task in pending:
                task.cancel()
            if pending:
                await asyncio.gather(*pending, return_exceptions=True)

        deadline_hit = bool(pending)
        excluded: list[dict] = list(generation.dropped)
        included: list[ScoredCandidate] = []
        for task, draft in tasks.items():
            if task in pending:
                excluded.append(
                    {"index": draft.index, "reason": REASON_DEADLINE, "detail": "unfinished at the deadline"}
                )
                continue
            exc = task.exception()
            if isinstance(exc, asyncio.TimeoutError):
                deadline_hit = True
                excluded.append(
                    {"index": draft.index, "reason": REASON_DEADLINE, "detail": "out of time mid-call"}
                )
                continue
            if exc is not None:
                code = exc.code if isinstance(exc, ChartScoutError) else type(exc).__name__
                excluded.append(
                    {"index": draft.index, "reason": REASON_ERROR, "detail": f"{code}: {exc}"}
                )
                continue
            rubric, spec_result = task.result()
            if spec_result.source == SOURCE_NONE and draft.chart_type != "table":
                excluded.append(
                    {"index": draft.index, "reason": REASON_SPEC_FAILED, "detail": spec_result.detail}
                )
                continue
            low = draft.index in generation.flagged_indices
            flags = ([DIVERSITY_FLAG] if low else []) + list(rubric.warnings)
            included.append(
                ScoredCandidate(
                    candidate_id=f"c{draft.index}",
                    index=draft.index,
                    chart_type=draft.chart_type,
                    title=draft.title,
                    rationale=draft.rationale,
                    encoding={ch: f.to_json() for ch, f in draft.encoding.items()},
                    transforms=[t.to_json() for t in draft.transforms],
                    columns=list(draft.columns),
                    scores=rubric,
                    final=final_score(rubric, low_diversity_penalty=low),
                    flags=flags,
                    spec_source=spec_result.source,
                    spec=spec_result.spec,
                    table_view=spec_result.table_view,
                    justification=rubric.justification,
                )
            )

        ranked = rank_candidates(included)
        if not ranked and not deadline_hit:
            details = "; ".join(f"c{e['index']}: {e['reason']}" for e in excluded)
            raise RoundEmpty(f"no candidate survived: {details}")
        if deadline_hit:
            status = STATUS_PARTIAL if ranked else STATUS_FAILED
        else:
            status = STATUS_COMPLETE
        return finish(status, selection, analysis, ranked, excluded)


# ---------------------------------------------------------------------------
# offline entry point
# ---------------------------------------------------------------------------


def read_transcript_file(path: str) -> list[tuple[str, str]]:
    """Lines of "speaker: text"; a line without a known speaker prefix is the
    presenter's."""
    entries: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            speaker, sep, rest = line.partition(":")
            if sep and speaker.strip() in SPEAKERS:
                entries.append((speaker.strip(), rest.strip()))
            else:
                entries.append(("presenter", line))
    return entries


async def run_offline(
    data_dir: str,
    backend_config: BackendConfig,
    transcript_path: str | None = None,
    chart_path: str | None = None,
    profile_path: str | None = None,
    config: SessionConfig | None = None,
    cache: StageCache | None = None,
) -> SuggestionRound:
    """One round over an ephemeral in-memory session; same code path as the
    service, nothing persisted."""
    catalog = load_catalog(data_dir)
    store = SessionStore(catalog, log_dir=None)
    session = store.create_session(config or SessionConfig())
    if transcript_path:
        for speaker, text in read_transcript_file(transcript_path):
            store.append_utterance(session.session_id, speaker, text)
    if profile_path:
        with open(profile_path, encoding="utf-8") as fh:
            store.set_profile(session.session_id, json.load(fh))
    if chart_path:
        with open(chart_path, encoding="utf-8") as fh:
            doc = json.load(fh)
        store.set_active_chart(
            session.session_id, doc["datasetId"], doc["spec"], doc.get("title", "")
        )
    gateway = Gateway(build_backend(backend_config))
    orchestrator = Orchestrator(store, gateway, cache if cache is not None else StageCache())
    return await orchestrator.run_round(session.session_id)
