"""The three backend implementations.

live      talks to any chat-completions compatible HTTP endpoint
replay    serves recorded fixture files, for tests and offline demos
simulated wraps another backend and adds a fixed per-call delay

Replay fixture layout: one JSON file per response inside a scenario
directory. Lookup tries the normalized-prompt hash name first
("<stage>_<hash16>.json"), then the ordered name
("<stage>_<index padded to 3>.json"), which is how scenario fixtures are
usually written. A repair call prefers "<stage>_<index>_repair.json" and
otherwise re-serves the base recording, so an intentionally corrupted
fixture stays corrupted through the repair round instead of being invented.
"""

from __future__ import annotations

import asyncio
import json
import os
from pathlib import Path

import httpx

from ..errors import BackendTimeout, BackendUnavailable, FixtureMissing, MalformedInput
from .base import Backend, BackendConfig, StagePrompt


class LiveBackend:
    kind = "live"

    def __init__(self, config: BackendConfig):
        self.config = config
        self._client: httpx.AsyncClient | None = None

    def _client_or_create(self) -> httpx.AsyncClient:
        if self._client is None:
            self._client = httpx.AsyncClient(
                base_url=self.config.base_url.rstrip("/"),
                timeout=self.config.timeout_s,
            )
        return self._client

    async def complete(self, prompt: StagePrompt) -> str:
        api_key = os.environ.get(self.config.api_key_env, "")
        if not api_key:
            raise BackendUnavailable(
                f"environment variable {self.config.api_key_env} is not set"
            )
        payload = {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
            "temperature": prompt.temperature,
            "max_tokens": prompt.max_tokens,
        }
        client = self._client_or_create()
        try:
            response = await client.post(
                "/chat/completions",
                json=payload,
                headers={"Authorization": f"Bearer {api_key}"},
            )
        except httpx.TimeoutException as exc:
            raise BackendTimeout(f"completion request timed out: {exc}") from exc
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"completion request failed: {exc}") from exc
        if response.status_code != 200:
            raise BackendUnavailable(
                f"completion endpoint returned {response.status_code}: {response.text[:200]}"
            )
        try:
            body = response.json()
            content = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"malformed completion response: {exc}") from exc
        if not isinstance(content, str):
            raise BackendUnavailable("completion content is not text")
        return content

    async def aclose(self) -> None:
        if self._client is not None:
            await self._client.aclose()
            self._client = None


class ReplayBackend:
    kind = "replay"

    def __init__(self, fixture_dir: str | Path):
        self.fixture_dir = Path(fixture_dir)

    def _fixture_path(self, prompt: StagePrompt) -> Path:
        hashed = self.fixture_dir / f"{prompt.stage}_{prompt.prompt_hash[:16]}.json"
        if hashed.is_file():
            return hashed
        base = self.fixture_dir / f"{prompt.stage}_{prompt.call_index:03d}.json"
        if prompt.repair:
            repair = self.fixture_dir / f"{prompt.stage}_{prompt.call_index:03d}_repair.json"
            if repair.is_file():
                return repair
            if base.is_file():
                return base  # replay the recorded reply again; never invent one
            raise FixtureMissing(
                f"no fixture for repair of {prompt.stage} call {prompt.call_index} in {self.fixture_dir}"
            )
        if base.is_file():
            return base
        raise FixtureMissing(
            f"no fixture for {prompt.stage} call {prompt.call_index} in {self.fixture_dir}"
        )

    async def complete(self, prompt: StagePrompt) -> str:
        path = self._fixture_path(prompt)
        try:
            document = json.loads(path.read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedInput(f"fixture {path.name} unreadable: {exc}") from exc
        if isinstance(document, dict) and "content" in document:
            content = document["content"]
        else:
            content = document
        if isinstance(content, str):
            return content
        return json.dumps(content)


class SimulatedBackend:
    kind = "simulated"

    def __init__(self, inner: Backend, per_call_delay_ms: float):
        self.inner = inner
        self.per_call_delay_ms = per_call_delay_ms

    async def complete(self, prompt: StagePrompt) -> str:
        await asyncio.sleep(self.per_call_delay_ms / 1000.0)
        return await self.inner.complete(prompt)


def build_backend(config: BackendConfig) -> Backend:
    if config.kind == "live":
        return LiveBackend(config)
    if config.kind == "replay":
        if not config.replay_dir:
            raise MalformedInput("replay backend needs a fixture directory")
        return ReplayBackend(config.replay_dir)
    if config.kind == "simulated":
        inner_config = config.inner
        if inner_config is None:
            inner_config = BackendConfig(kind="replay", replay_dir=config.replay_dir)
        return SimulatedBackend(build_backend(inner_config), config.per_call_delay_ms)
    raise MalformedInput(f"unknown backend kind {config.kind!r}")
