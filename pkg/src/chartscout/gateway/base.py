"""Gateway between pipeline stages and whatever produces completions.

Stages never talk to a backend directly. They hand the gateway a
StagePrompt and a parser; the gateway runs the call, extracts JSON, and on a
shape failure issues exactly one repair follow-up before giving up. That
bounds every stage invocation at two backend calls, and the call counter
makes the bound testable.
"""

from __future__ import annotations

import asyncio
import hashlib
import re
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

from ..errors import BackendTimeout, ChartScoutError, StageOutputInvalid
from .jsontools import extract_json

_WS_RE = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Collapse runs of whitespace; case is preserved."""
    return _WS_RE.sub(" ", text).strip()


@dataclass(frozen=True)
class StagePrompt:
    stage: str  # analysis | selection | generation | specgen | evaluation
    system: str
    user: str
    prompt_version: str
    call_index: int = 0  # candidate index for fan-out stages, else 0
    repair: bool = False
    temperature: float = 0.0
    max_tokens: int = 3000

    @property
    def prompt_hash(self) -> str:
        payload = "\x00".join((self.stage, normalize_text(self.system), normalize_text(self.user)))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class Completion:
    text: str
    backend: str
    latency_ms: float
    prompt_hash: str


class Backend(Protocol):
    kind: str

    async def complete(self, prompt: StagePrompt) -> str: ...


_REPAIR_INSTRUCTIONS = (
    "Your previous reply could not be used. Reason: {error}\n"
    "Reply again with ONLY the corrected JSON, no prose, no code fences.\n"
    "Previous reply follows between the markers.\n"
    "<<<PREVIOUS\n{previous}\nPREVIOUS>>>"
)


def build_repair_prompt(prompt: StagePrompt, bad_text: str, error: str) -> StagePrompt:
    return StagePrompt(
        stage=prompt.stage,
        system=prompt.system,
        user=prompt.user + "\n\n" + _REPAIR_INSTRUCTIONS.format(error=error, previous=bad_text),
        prompt_version=prompt.prompt_version,
        call_index=prompt.call_index,
        repair=True,
        temperature=prompt.temperature,
        max_tokens=prompt.max_tokens,
    )


class Gateway:
    """Counts calls, enforces the per-call timeout, runs the repair loop."""

    def __init__(self, backend: Backend, call_timeout_s: float | None = 60.0):
        self.backend = backend
        self.call_timeout_s = call_timeout_s
        self.total_calls = 0
        self.calls_by_stage: dict[str, int] = {}

    def reset_counters(self) -> None:
        self.total_calls = 0
        self.calls_by_stage = {}

    async def complete(self, prompt: StagePrompt) -> Completion:
        self.total_calls += 1
        self.calls_by_stage[prompt.stage] = self.calls_by_stage.get(prompt.stage, 0) + 1
        started = time.perf_counter()
        if self.call_timeout_s is None:
            text = await self.backend.complete(prompt)
        else:
            try:
                text = await asyncio.wait_for(self.backend.complete(prompt), self.call_timeout_s)
            except asyncio.TimeoutError:
                raise BackendTimeout(
                    f"{prompt.stage} call exceeded {self.call_timeout_s}s"
                ) from None
        latency_ms = (time.perf_counter() - started) * 1000.0
        return Completion(
            text=text,
            backend=self.backend.kind,
            latency_ms=latency_ms,
            prompt_hash=prompt.prompt_hash,
        )

    async def complete_structured(
        self, prompt: StagePrompt, parse: Callable[[Any], Any]
    ) -> Any:
        """Call, extract JSON, parse; one repair round on shape failure.

        ``parse`` raises StageOutputInvalid (or any package error) to signal
        a shape problem. After a failed repair the last error propagates as
        StageOutputInvalid.
        """
        completion = await self.complete(prompt)
        try:
            return parse(extract_json(completion.text))
        except ChartScoutError as first_error:
            # shape failure; transport errors from complete() are not caught
            repair = build_repair_prompt(prompt, completion.text, str(first_error))
            retry = await self.complete(repair)
            try:
                return parse(extract_json(retry.text))
            except ChartScoutError as second_error:
                raise StageOutputInvalid(
                    f"{prompt.stage}: unusable output after repair ({second_error})"
                ) from second_error


@dataclass
class BackendConfig:
    """Declarative backend choice; see build_backend."""

    kind: str  # live | replay | simulated
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4o"
    api_key_env: str = "OPENAI_API_KEY"
    timeout_s: float = 60.0
    replay_dir: str | None = None
    per_call_delay_ms: float = 500.0
    inner: "BackendConfig | None" = field(default=None)
