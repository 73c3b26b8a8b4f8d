"""Shared fixtures: real catalog, demo schema, scenario session builders."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from chartscout.catalog import load_catalog
from chartscout.catalog.model import (
    GRAIN_YEAR,
    ROLE_NOMINAL,
    ROLE_QUANTITATIVE,
    ROLE_TEMPORAL,
    ColumnDescriptor,
    TableSchema,
)
from chartscout.gateway import BackendConfig, Gateway, build_backend
from chartscout.pipeline import Orchestrator, StageCache, read_transcript_file
from chartscout.session import SessionConfig, SessionStore

ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = ROOT / "data"
SCENARIO_DIR = ROOT / "fixtures" / "climate"
REPLIES_DIR = SCENARIO_DIR / "replies"
INVALID_SPECS_DIR = Path(__file__).resolve().parent / "data" / "invalid_specs"

# frozen sha256 of data/climate.csv; any byte change must show up here
CLIMATE_FINGERPRINT = "086cd9fb5b10af9726a8f8bbd8dccd55b701df4a9a23d4352783b6252dafb1cd"

GARBAGE_REPLY = {"content": "%%% decidedly not json %%%"}


@pytest.fixture(scope="session")
def catalog():
    return load_catalog(DATA_DIR)


@pytest.fixture
def climate(catalog):
    return catalog.get("climate")


@pytest.fixture
def demo_schema():
    """Schema the packaged exemplar documents are written against."""
    return TableSchema(
        columns=(
            ColumnDescriptor("category", ROLE_NOMINAL),
            ColumnDescriptor("amount", ROLE_QUANTITATIVE),
            ColumnDescriptor("units", ROLE_QUANTITATIVE),
            ColumnDescriptor("year", ROLE_TEMPORAL, granularity=GRAIN_YEAR),
        )
    )


def populate_climate_session(store: SessionStore, config: SessionConfig | None = None) -> str:
    """Create a session loaded with the packaged demo scenario; returns its id."""
    session = store.create_session(config or SessionConfig())
    sid = session.session_id
    for speaker, text in read_transcript_file(str(SCENARIO_DIR / "transcript.txt")):
        store.append_utterance(sid, speaker, text)
    store.set_profile(sid, json.loads((SCENARIO_DIR / "profile.json").read_text("utf-8")))
    doc = json.loads((SCENARIO_DIR / "active_chart.json").read_text("utf-8"))
    store.set_active_chart(sid, doc["datasetId"], doc["spec"], doc.get("title", ""))
    return sid


def make_orchestrator(
    catalog,
    replay_dir: Path | str = REPLIES_DIR,
    delay_ms: float | None = None,
    log_dir: str | None = None,
):
    """Store + gateway + orchestrator over a replay (or simulated) backend."""
    store = SessionStore(catalog, log_dir=log_dir)
    if delay_ms is None:
        config = BackendConfig(kind="replay", replay_dir=str(replay_dir))
    else:
        config = BackendConfig(
            kind="simulated", replay_dir=str(replay_dir), per_call_delay_ms=delay_ms
        )
    gateway = Gateway(build_backend(config))
    orchestrator = Orchestrator(store, gateway, StageCache())
    return store, gateway, orchestrator


def copy_replies(tmp_path: Path) -> Path:
    """Private copy of the scenario fixtures, safe to corrupt."""
    target = tmp_path / "replies"
    shutil.copytree(REPLIES_DIR, target)
    return target


def corrupt_reply(replay_dir: Path, stage: str, index: int) -> None:
    """Overwrite one recorded reply with non-JSON chatter.

    The file itself stays valid JSON so the backend serves it; extraction
    then fails and the repair round re-serves the same garbage.
    """
    path = replay_dir / f"{stage}_{index:03d}.json"
    path.write_text(json.dumps(GARBAGE_REPLY), "utf-8")
