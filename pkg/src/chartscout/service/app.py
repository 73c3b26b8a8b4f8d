"""HTTP and WebSocket surface over the suggestion engine.

Every response is wrapped in the same envelope: {"ok": true, "data": ...}
or {"ok": false, "error": {"code", "message"}}, plus serverTimeMs. Error
codes are the package error codes, mapped onto 404/409/422; nothing modeled
surfaces as a bare 500.
"""

from __future__ import annotations

import asyncio
import json

from fastapi import FastAPI, Query, WebSocket
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel
from starlette.websockets import WebSocketDisconnect

from ..catalog import apply_transforms, load_catalog, parse_transforms
from ..errors import (
    ChartScoutError,
    MalformedInput,
    RoundInFlight,
    UnknownCandidate,
    UnknownDataset,
    UnknownRound,
    UnknownSession,
)
from ..gateway import BackendConfig, Gateway, build_backend
from ..pipeline import Orchestrator, StageCache
from ..session import SessionConfig, SessionStore, now_ms

_NOT_FOUND = {
    UnknownSession.code,
    UnknownRound.code,
    UnknownCandidate.code,
    UnknownDataset.code,
}


def _status_for(exc: ChartScoutError) -> int:
    if exc.code in _NOT_FOUND:
        return 404
    if exc.code == RoundInFlight.code:
        return 409
    return 422


def _ok(data) -> dict:
    return {"ok": True, "data": data, "serverTimeMs": now_ms()}


def _err(code: str, message: str) -> dict:
    return {"ok": False, "error": {"code": code, "message": message}, "serverTimeMs": now_ms()}


class EventHub:
    """Fans store events out to per-connection queues."""

    def __init__(self) -> None:
        self._subscribers: dict[str, set[asyncio.Queue]] = {}

    def publish(self, session_id: str, event: dict) -> None:
        for queue in tuple(self._subscribers.get(session_id, ())):
            queue.put_nowait(event)

    def subscribe(self, session_id: str) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue()
        self._subscribers.setdefault(session_id, set()).add(queue)
        return queue

    def unsubscribe(self, session_id: str, queue: asyncio.Queue) -> None:
        group = self._subscribers.get(session_id)
        if group is not None:
            group.discard(queue)
            if not group:
                self._subscribers.pop(session_id, None)


# ----- request bodies -----


class SessionConfigBody(BaseModel):
    candidateCount: int | None = None
    windowSize: int | None = None
    deadlineMs: int | None = None
    parallelism: int | None = None

    def overrides(self) -> dict:
        return {k: v for k, v in self.model_dump().items() if v is not None}


class CreateSessionBody(BaseModel):
    config: SessionConfigBody | None = None


class UtteranceBody(BaseModel):
    speaker: str
    text: str


class ProfileBody(BaseModel):
    expertise: str = "medium"
    domainFamiliarity: str = "medium"
    interests: list[str] = []


class CandidateRefBody(BaseModel):
    roundId: str
    candidateId: str


class ActiveChartBody(BaseModel):
    datasetId: str | None = None
    title: str = ""
    spec: dict | None = None
    candidateRef: CandidateRefBody | None = None


SLICE_ROW_LIMIT = 1000


def create_app(
    data_dir: str,
    backend: BackendConfig,
    log_dir: str | None = None,
    session_defaults: SessionConfig | None = None,
) -> FastAPI:
    catalog = load_catalog(data_dir)
    hub = EventHub()
    store = SessionStore(catalog, log_dir=log_dir, listener=hub.publish)
    gateway = Gateway(build_backend(backend))
    orchestrator = Orchestrator(store, gateway, StageCache())
    defaults = (session_defaults or SessionConfig()).to_json()

    app = FastAPI(title="chartscout")
    # the presenter frontend is served as static files from whatever port is
    # handy; the service carries no credentials, so wide-open CORS is fine
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store
    app.state.gateway = gateway
    app.state.orchestrator = orchestrator
    app.state.hub = hub

    @app.exception_handler(ChartScoutError)
    async def _domain_error(_request, exc: ChartScoutError):
        return JSONResponse(status_code=_status_for(exc), content=_err(exc.code, str(exc)))

    @app.exception_handler(RequestValidationError)
    async def _body_error(_request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content=_err("ValidationError", str(exc)))

    # ----- datasets -----

    @app.get("/health")
    async def health():
        return _ok({"status": "up", "datasets": store.catalog.ids()})

    @app.get("/datasets")
    async def list_datasets():
        return _ok([store.catalog.datasets[did].summary_json() for did in store.catalog.ids()])

    @app.get("/datasets/{dataset_id}")
    async def get_dataset(dataset_id: str):
        dataset = store.catalog.get(dataset_id)
        if dataset is None:
            raise UnknownDataset(f"no dataset {dataset_id!r}")
        return _ok(dataset.summary_json())

    @app.get("/datasets/{dataset_id}/slice")
    async def get_slice(
        dataset_id: str,
        transforms: str | None = Query(default=None),
        limit: int = Query(default=SLICE_ROW_LIMIT, ge=1),
    ):
        dataset = store.catalog.get(dataset_id)
        if dataset is None:
            raise UnknownDataset(f"no dataset {dataset_id!r}")
        chain = []
        if transforms:
            try:
                raw = json.loads(transforms)
            except json.JSONDecodeError as exc:
                raise MalformedInput(f"transforms query is not JSON: {exc}") from exc
            chain = parse_transforms(raw)
        table = apply_transforms(dataset.table, chain)
        return _ok(
            {
                "datasetId": dataset_id,
                "schema": table.schema.to_json(),
                "rows": table.rows[:limit],
                "rowCount": table.row_count,
            }
        )

    # ----- sessions -----

    @app.post("/sessions")
    async def create_session(body: CreateSessionBody | None = None):
        merged = dict(defaults)
        if body is not None and body.config is not None:
            merged.update(body.config.overrides())
        session = store.create_session(SessionConfig.from_json(merged))
        return _ok({"sessionId": session.session_id, "config": session.config.to_json()})

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return _ok(store.get(session_id).state_json())

    @app.post("/sessions/{session_id}/utterances")
    async def post_utterance(session_id: str, body: UtteranceBody):
        utterance = store.append_utterance(session_id, body.speaker, body.text)
        return _ok({"utterance": utterance.to_json()})

    @app.put("/sessions/{session_id}/profile")
    async def put_profile(session_id: str, body: ProfileBody):
        profile = store.set_profile(session_id, body.model_dump())
        return _ok({"profile": profile.to_json()})

    @app.put("/sessions/{session_id}/active-chart")
    async def put_active_chart(session_id: str, body: ActiveChartBody):
        if body.candidateRef is not None:
            chart = store.set_chart_from_candidate(
                session_id, body.candidateRef.roundId, body.candidateRef.candidateId
            )
        elif body.spec is not None and body.datasetId:
            chart = store.set_active_chart(session_id, body.datasetId, body.spec, body.title)
        else:
            raise MalformedInput("provide either candidateRef or datasetId plus spec")
        return _ok({"activeChart": chart.to_json()})

    # ----- rounds -----

    @app.post("/sessions/{session_id}/rounds")
    async def post_round(session_id: str):
        result = await orchestrator.run_round(session_id)
        return _ok({"round": result.to_json()})

    @app.get("/sessions/{session_id}/rounds/{round_id}")
    async def get_round(session_id: str, round_id: str):
        session = store.get(session_id)
        round_json = session.rounds.get(round_id)
        if round_json is None:
            raise UnknownRound(f"no round {round_id!r}")
        return _ok({"round": round_json})

    @app.post("/sessions/{session_id}/rounds/{round_id}/candidates/{candidate_id}/adopt")
    async def adopt(session_id: str, round_id: str, candidate_id: str):
        chart = store.adopt_candidate(session_id, round_id, candidate_id)
        return _ok({"activeChart": chart.to_json()})

    @app.post("/sessions/{session_id}/rounds/{round_id}/candidates/{candidate_id}/dismiss")
    async def dismiss(session_id: str, round_id: str, candidate_id: str):
        store.dismiss_candidate(session_id, round_id, candidate_id)
        return _ok({"dismissed": {"roundId": round_id, "candidateId": candidate_id}})

    # ----- events -----

    @app.websocket("/sessions/{session_id}/events")
    async def events(websocket: WebSocket, session_id: str):
        try:
            store.get(session_id)
        except UnknownSession:
            await websocket.close(code=4404)
            return
        await websocket.accept()
        queue = hub.subscribe(session_id)

        async def pump():
            while True:
                event = await queue.get()
                await websocket.send_json(event)

        async def drain():
            while True:
                await websocket.receive_text()

        sender = asyncio.create_task(pump())
        receiver = asyncio.create_task(drain())
        try:
            done, _ = await asyncio.wait(
                {sender, receiver}, return_when=asyncio.FIRST_COMPLETED
            )
            for task in done:
                if task.cancelled():
                    continue
                exc = task.exception()
                if exc is not None and not isinstance(exc, WebSocketDisconnect):
                    raise exc
        except WebSocketDisconnect:
            pass
        finally:
            hub.unsubscribe(session_id, queue)
            for task in (sender, receiver):
                task.cancel()
            # reap with wait, not gather: gather over cancelled children replaces
            # an incoming host cancellation with the child's bare CancelledError,
            # which strips the cancel-scope marker the server runtime matches on
            await asyncio.wait({sender, receiver})

    return app
