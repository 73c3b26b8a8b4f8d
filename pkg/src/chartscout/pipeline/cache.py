"""Per-stage LRU cache keyed by content hashes.

A stage key folds together everything that could change the stage's output:
prompt version, dataset fingerprints, the normalized transcript window, the
active chart, the audience profile, and upstream stage outputs in canonical
JSON. Keys never include timestamps or ids, so an unchanged session replays
entirely from cache.
"""

from __future__ import annotations

import hashlib
import json
from collections import OrderedDict
from typing import Any

DEFAULT_CAPACITY = 256

_MISS = object()


def cache_key(stage: str, prompt_version: str, parts: dict) -> str:
    payload = json.dumps(
        {"stage": stage, "promptVersion": prompt_version, "parts": parts},
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class StageCache:
    """Independent LRU store per stage; least recently used entry falls out."""

    def __init__(self, per_stage_capacity: int = DEFAULT_CAPACITY):
        self.capacity = per_stage_capacity
        self._stores: dict[str, OrderedDict[str, Any]] = {}
        self.hits = 0
        self.misses = 0

    def lookup(self, stage: str, key: str) -> tuple[bool, Any]:
        store = self._stores.get(stage)
        if store is None:
            self.misses += 1
            return False, None
        value = store.get(key, _MISS)
        if value is _MISS:
            self.misses += 1
            return False, None
        store.move_to_end(key)
        self.hits += 1
        return True, value

    def put(self, stage: str, key: str, value: Any) -> None:
        store = self._stores.setdefault(stage, OrderedDict())
        store[key] = value
        store.move_to_end(key)
        while len(store) > self.capacity:
            store.popitem(last=False)

    def size(self, stage: str) -> int:
        return len(self._stores.get(stage, ()))

    def clear(self) -> None:
        self._stores.clear()
        self.hits = 0
        self.misses = 0
