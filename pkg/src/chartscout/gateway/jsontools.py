"""Pulling a JSON value out of model chatter.

Models wrap payloads in code fences, prefix them with prose, or append
commentary. The extractor is forgiving about all of that but never repairs
the JSON itself; a truncated document stays broken and the caller decides
whether to ask for a repair.
"""

from __future__ import annotations

import json

from ..errors import NoJsonFound

_FENCE_MARKERS = ("```json", "```JSON", "```")


def _scan_balanced(text: str, start: int) -> str | None:
    """Return the balanced object/array starting at ``start``, if any."""
    opener = text[start]
    closer = "}" if opener == "{" else "]"
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch in "{[":
            depth += 1
        elif ch in "}]":
            depth -= 1
            if depth == 0:
                candidate = text[start : i + 1]
                if candidate[-1] != closer:
                    return None  # mismatched bracket kinds
                return candidate
    return None


def extract_json(text: str):
    """Return the first embedded JSON value in ``text``.

    The whole payload is tried first, so a bare scalar document round-trips.
    Inside prose, only objects and arrays are considered.
    Raises NoJsonFound when nothing parses.
    """
    if not isinstance(text, str):
        raise NoJsonFound("completion is not text")

    stripped = text.strip()
    if stripped:
        try:
            return json.loads(stripped)
        except json.JSONDecodeError:
            pass

    # prefer fenced blocks; models usually put the payload there
    search_spaces = []
    remaining = stripped
    for marker in _FENCE_MARKERS:
        idx = remaining.find(marker)
        if idx != -1:
            body = remaining[idx + len(marker):]
            end = body.find("```")
            if end != -1:
                search_spaces.append(body[:end])
            else:
                search_spaces.append(body)
            break
    search_spaces.append(stripped)

    for space in search_spaces:
        i = 0
        while i < len(space):
            ch = space[i]
            if ch in "{[":
                candidate = _scan_balanced(space, i)
                if candidate is not None:
                    try:
                        return json.loads(candidate)
                    except json.JSONDecodeError:
                        pass
            i += 1

    raise NoJsonFound("no parseable JSON object or array in completion")
