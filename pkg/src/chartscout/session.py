"""Presentation session state: transcript, audience profile, active chart,
and the suggestion rounds produced so far.

Every mutation appends exactly one JSONL event through the store, and
``replay_events`` can rebuild a session from that log alone. Equality of
``state_json()`` between a live session and its replay is the invariant the
tests lean on, so anything that matters must live in that view.
"""

from __future__ import annotations

import json
import os
import time
import uuid
from dataclasses import dataclass, field, replace
from typing import Callable

from .catalog.model import Catalog
from .errors import (
    CandidateInvalid,
    EmptyUtterance,
    InvalidConfig,
    InvalidProfile,
    SpecInvalid,
    UnknownCandidate,
    UnknownDataset,
    UnknownRound,
    UnknownSession,
)
from .vega import validate_spec

SPEAKERS = ("presenter", "audience")
LEVELS = ("low", "medium", "high")
MAX_INTERESTS = 10

DEFAULT_CANDIDATE_COUNT = 8
DEFAULT_WINDOW_SIZE = 30
DEFAULT_DEADLINE_MS = 10000
DEFAULT_PARALLELISM = 8

PROMPT_VERSION = "v1"


def now_ms() -> int:
    return int(time.time() * 1000)


@dataclass(frozen=True)
class SessionConfig:
    candidate_count: int = DEFAULT_CANDIDATE_COUNT
    window_size: int = DEFAULT_WINDOW_SIZE
    deadline_ms: int = DEFAULT_DEADLINE_MS
    parallelism: int = DEFAULT_PARALLELISM

    def validate(self) -> None:
        for name, value in (
            ("candidateCount", self.candidate_count),
            ("windowSize", self.window_size),
            ("deadlineMs", self.deadline_ms),
            ("parallelism", self.parallelism),
        ):
            if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
                raise InvalidConfig(f"{name} must be a positive integer, got {value!r}")

    def to_json(self) -> dict:
        return {
            "candidateCount": self.candidate_count,
            "windowSize": self.window_size,
            "deadlineMs": self.deadline_ms,
            "parallelism": self.parallelism,
        }

    @staticmethod
    def from_json(obj: dict) -> "SessionConfig":
        return SessionConfig(
            candidate_count=obj.get("candidateCount", DEFAULT_CANDIDATE_COUNT),
            window_size=obj.get("windowSize", DEFAULT_WINDOW_SIZE),
            deadline_ms=obj.get("deadlineMs", DEFAULT_DEADLINE_MS),
            parallelism=obj.get("parallelism", DEFAULT_PARALLELISM),
        )


@dataclass(frozen=True)
class Utterance:
    seq: int
    speaker: str
    text: str
    timestamp: int

    def to_json(self) -> dict:
        return {"seq": self.seq, "speaker": self.speaker, "text": self.text, "timestamp": self.timestamp}


@dataclass(frozen=True)
class AudienceProfile:
    expertise: str = "medium"
    domain_familiarity: str = "medium"
    interests: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "expertise": self.expertise,
            "domainFamiliarity": self.domain_familiarity,
            "interests": list(self.interests),
        }

    @staticmethod
    def parse(obj: dict) -> "AudienceProfile":
        expertise = obj.get("expertise", "medium")
        familiarity = obj.get("domainFamiliarity", "medium")
        if expertise not in LEVELS:
            raise InvalidProfile(f"expertise must be one of {LEVELS}, got {expertise!r}")
        if familiarity not in LEVELS:
            raise InvalidProfile(f"domainFamiliarity must be one of {LEVELS}, got {familiarity!r}")
        raw_interests = obj.get("interests", [])
        if not isinstance(raw_interests, list):
            raise InvalidProfile("interests must be a list of strings")
        interests: list[str] = []
        for item in raw_interests:
            if not isinstance(item, str) or not item.strip():
                raise InvalidProfile(f"interest entries must be non-empty strings, got {item!r}")
            interests.append(item.strip())
        if len(interests) > MAX_INTERESTS:
            raise InvalidProfile(f"at most {MAX_INTERESTS} interests, got {len(interests)}")
        return AudienceProfile(
            expertise=expertise, domain_familiarity=familiarity, interests=tuple(interests)
        )


@dataclass(frozen=True)
class ActiveChart:
    """What the audience currently sees: a chart document or a raw table."""

    kind: str  # "vega" | "table"
    dataset_id: str
    title: str
    provenance: dict
    spec: dict | None = None
    columns: tuple[str, ...] = ()
    transforms: tuple[dict, ...] = ()  # JSON transform forms for table views

    def to_json(self) -> dict:
        out: dict = {
            "kind": self.kind,
            "datasetId": self.dataset_id,
            "title": self.title,
            "provenance": dict(self.provenance),
        }
        if self.kind == "vega":
            out["spec"] = self.spec
        else:
            out["columns"] = list(self.columns)
            out["transforms"] = [dict(t) for t in self.transforms]
        return out

    def canonical(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(obj: dict) -> "ActiveChart":
        return ActiveChart(
            kind=obj["kind"],
            dataset_id=obj["datasetId"],
            title=obj.get("title", ""),
            provenance=dict(obj.get("provenance", {})),
            spec=obj.get("spec"),
            columns=tuple(obj.get("columns", [])),
            transforms=tuple(obj.get("transforms", [])),
        )


@dataclass(frozen=True)
class SessionSnapshot:
    """Immutable view handed to a suggestion round."""

    session_id: str
    config: SessionConfig
    catalog: Catalog
    transcript_window: tuple[Utterance, ...]
    profile: AudienceProfile
    active_chart: ActiveChart | None
    prompt_version: str = PROMPT_VERSION

    def transcript_text(self) -> str:
        lines = [f"{u.speaker}: {u.text}" for u in self.transcript_window]
        return "\n".join(lines)


@dataclass
class Session:
    session_id: str
    config: SessionConfig
    transcript: list[Utterance] = field(default_factory=list)
    profile: AudienceProfile = field(default_factory=AudienceProfile)
    active_chart: ActiveChart | None = None
    rounds: dict[str, dict] = field(default_factory=dict)
    round_order: list[str] = field(default_factory=list)
    adoptions: list[dict] = field(default_factory=list)
    dismissals: list[dict] = field(default_factory=list)
    round_in_flight: bool = False
    next_seq: int = 1

    def transcript_window(self) -> list[Utterance]:
        return self.transcript[-self.config.window_size :]

    def state_json(self) -> dict:
        """Everything event replay must reproduce, in canonical form."""
        return {
            "sessionId": self.session_id,
            "config": self.config.to_json(),
            "transcript": [u.to_json() for u in self.transcript],
            "profile": self.profile.to_json(),
            "activeChart": self.active_chart.to_json() if self.active_chart else None,
            "rounds": {rid: self.rounds[rid] for rid in self.round_order},
            "adoptions": list(self.adoptions),
            "dismissals": list(self.dismissals),
        }


# ---------------------------------------------------------------------------
# store
# ---------------------------------------------------------------------------

EventListener = Callable[[str, dict], None]


class SessionStore:
    """In-memory sessions plus the per-session JSONL event log.

    ``listener`` receives every event (logged and transient alike); the
    HTTP layer uses it to feed WebSocket subscribers.
    """

    def __init__(
        self,
        catalog: Catalog,
        log_dir: str | None = None,
        listener: EventListener | None = None,
    ):
        self.catalog = catalog
        self.log_dir = log_dir
        self.listener = listener
        self.sessions: dict[str, Session] = {}

    # ----- event plumbing -----

    def _emit(self, session_id: str, event_type: str, payload: dict, persist: bool) -> dict:
        event = {"type": event_type, "ts": now_ms(), "sessionId": session_id, "payload": payload}
        if persist and self.log_dir is not None:
            os.makedirs(self.log_dir, exist_ok=True)
            path = f"{self.log_dir}/{session_id}.jsonl"
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, separators=(",", ":")) + "\n")
        if self.listener is not None:
            self.listener(session_id, event)
        return event

    def record(self, session_id: str, event_type: str, payload: dict) -> dict:
        return self._emit(session_id, event_type, payload, persist=True)

    def notify(self, session_id: str, event_type: str, payload: dict) -> dict:
        """Publish without logging; for transient signals like round-started."""
        return self._emit(session_id, event_type, payload, persist=False)

    # ----- session lifecycle -----

    def create_session(self, config: SessionConfig | None = None) -> Session:
        config = config or SessionConfig()
        config.validate()
        session_id = uuid.uuid4().hex
        session = Session(session_id=session_id, config=config)
        self.sessions[session_id] = session
        self.record(session_id, "session-created", {"sessionId": session_id, "config": config.to_json()})
        return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        return session

    # ----- mutations -----

    def append_utterance(self, session_id: str, speaker: str, text: str) -> Utterance:
        session = self.get(session_id)
        if speaker not in SPEAKERS:
            raise EmptyUtterance(f"speaker must be one of {SPEAKERS}, got {speaker!r}")
        trimmed = (text or "").strip()
        if not trimmed:
            raise EmptyUtterance("utterance text is empty after trimming")
        utterance = Utterance(
            seq=session.next_seq, speaker=speaker, text=trimmed, timestamp=now_ms()
        )
        session.next_seq += 1
        session.transcript.append(utterance)
        self.record(session_id, "utterance-appended", {"utterance": utterance.to_json()})
        return utterance

    def set_profile(self, session_id: str, profile_json: dict) -> AudienceProfile:
        session = self.get(session_id)
        profile = AudienceProfile.parse(profile_json)
        session.profile = profile
        self.record(session_id, "profile-changed", {"profile": profile.to_json()})
        return profile

    def set_active_chart(
        self, session_id: str, dataset_id: str, spec: dict, title: str = ""
    ) -> ActiveChart:
        session = self.get(session_id)
        dataset = self.catalog.get(dataset_id)
        if dataset is None:
            raise UnknownDataset(f"no dataset {dataset_id!r}")
        report = validate_spec(spec, dataset.schema)
        if not report.valid:
            first = report.errors[0]
            raise SpecInvalid(f"{first.code} at {first.path}: {first.message}")
        chart = ActiveChart(
            kind="vega",
            dataset_id=dataset_id,
            title=title or str(spec.get("title", "")),
            provenance={"origin": "prepared"},
            spec=spec,
        )
        session.active_chart = chart
        self.record(session_id, "chart-set", {"activeChart": chart.to_json()})
        return chart

    def store_round(self, session_id: str, round_json: dict) -> None:
        session = self.get(session_id)
        round_id = round_json["roundId"]
        session.rounds[round_id] = round_json
        session.round_order.append(round_id)
        self.record(session_id, "round-complete", {"round": round_json})

    def _find_candidate(self, session: Session, round_id: str, candidate_id: str) -> tuple[dict, dict]:
        round_json = session.rounds.get(round_id)
        if round_json is None:
            raise UnknownRound(f"no round {round_id!r}")
        for candidate in round_json.get("ranked", []):
            if candidate.get("candidateId") == candidate_id:
                return round_json, candidate
        raise UnknownCandidate(f"no candidate {candidate_id!r} in round {round_id!r}")

    @staticmethod
    def _chart_for_candidate(round_json: dict, candidate: dict) -> ActiveChart:
        provenance = {
            "origin": "adopted",
            "roundId": round_json["roundId"],
            "candidateId": candidate["candidateId"],
        }
        dataset_id = round_json.get("datasetId", "")
        if candidate.get("spec") is not None:
            return ActiveChart(
                kind="vega",
                dataset_id=dataset_id,
                title=candidate.get("title", ""),
                provenance=provenance,
                spec=candidate["spec"],
            )
        table_view = candidate.get("tableView")
        if table_view:
            return ActiveChart(
                kind="table",
                dataset_id=dataset_id,
                title=candidate.get("title", ""),
                provenance=provenance,
                columns=tuple(table_view.get("columns", [])),
                transforms=tuple(candidate.get("transforms", [])),
            )
        raise CandidateInvalid(
            f"candidate {candidate.get('candidateId')!r} has no usable chart or table form"
        )

    def set_chart_from_candidate(self, session_id: str, round_id: str, candidate_id: str) -> ActiveChart:
        """Re-show a candidate without recording an adoption."""
        session = self.get(session_id)
        round_json, candidate = self._find_candidate(session, round_id, candidate_id)
        chart = self._chart_for_candidate(round_json, candidate)
        session.active_chart = chart
        self.record(session_id, "chart-set", {"activeChart": chart.to_json()})
        return chart

    def adopt_candidate(self, session_id: str, round_id: str, candidate_id: str) -> ActiveChart:
        """Idempotent: the same (round, candidate) pair yields the same value."""
        session = self.get(session_id)
        round_json, candidate = self._find_candidate(session, round_id, candidate_id)
        chart = self._chart_for_candidate(round_json, candidate)
        ts = now_ms()
        session.active_chart = chart
        session.adoptions.append({"roundId": round_id, "candidateId": candidate_id, "ts": ts})
        self.record(
            session_id,
            "chart-adopted",
            {
                "roundId": round_id,
                "candidateId": candidate_id,
                "ts": ts,
                "activeChart": chart.to_json(),
            },
        )
        return chart

    def dismiss_candidate(self, session_id: str, round_id: str, candidate_id: str) -> None:
        """Logged for later analysis; the candidate is not suppressed."""
        session = self.get(session_id)
        self._find_candidate(session, round_id, candidate_id)
        ts = now_ms()
        session.dismissals.append({"roundId": round_id, "candidateId": candidate_id, "ts": ts})
        self.record(
            session_id,
            "candidate-dismissed",
            {"roundId": round_id, "candidateId": candidate_id, "ts": ts},
        )

    # ----- snapshot -----

    def snapshot(self, session_id: str) -> SessionSnapshot:
        session = self.get(session_id)
        chart = session.active_chart
        return SessionSnapshot(
            session_id=session.session_id,
            config=session.config,
            catalog=self.catalog,
            transcript_window=tuple(session.transcript_window()),
            profile=replace(session.profile),
            active_chart=chart,
        )


# ---------------------------------------------------------------------------
# event replay
# ---------------------------------------------------------------------------


def replay_events(events: list[dict]) -> Session:
    """Rebuild a session from its event log."""
    session: Session | None = None
    for event in events:
        etype = event["type"]
        payload = event.get("payload", {})
        if etype == "session-created":
            session = Session(
                session_id=payload["sessionId"],
                config=SessionConfig.from_json(payload.get("config", {})),
            )
            continue
        if session is None:
            raise UnknownSession("event log does not start with session-created")
        if etype == "utterance-appended":
            u = payload["utterance"]
            session.transcript.append(
                Utterance(seq=u["seq"], speaker=u["speaker"], text=u["text"], timestamp=u["timestamp"])
            )
            session.next_seq = u["seq"] + 1
        elif etype == "profile-changed":
            p = payload["profile"]
            session.profile = AudienceProfile(
                expertise=p["expertise"],
                domain_familiarity=p["domainFamiliarity"],
                interests=tuple(p.get("interests", [])),
            )
        elif etype == "chart-set":
            session.active_chart = ActiveChart.from_json(payload["activeChart"])
        elif etype == "round-complete":
            round_json = payload["round"]
            session.rounds[round_json["roundId"]] = round_json
            session.round_order.append(round_json["roundId"])
        elif etype == "chart-adopted":
            session.active_chart = ActiveChart.from_json(payload["activeChart"])
            session.adoptions.append(
                {
                    "roundId": payload["roundId"],
                    "candidateId": payload["candidateId"],
                    "ts": payload.get("ts", event["ts"]),
                }
            )
        elif etype == "candidate-dismissed":
            session.dismissals.append(
                {
                    "roundId": payload["roundId"],
                    "candidateId": payload["candidateId"],
                    "ts": payload.get("ts", event["ts"]),
                }
            )
        # unknown event types are skipped so old logs stay readable
    if session is None:
        raise UnknownSession("empty event log")
    return session


def replay_log_file(path: str) -> Session:
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(json.loads(line))
    return replay_events(events)
