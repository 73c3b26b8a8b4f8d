from .backends import LiveBackend, ReplayBackend, SimulatedBackend, build_backend
from .base import (
    Backend,
    BackendConfig,
    Completion,
    Gateway,
    StagePrompt,
    build_repair_prompt,
    normalize_text,
)
from .jsontools import extract_json

__all__ = [
    "Backend",
    "BackendConfig",
    "Completion",
    "Gateway",
    "LiveBackend",
    "ReplayBackend",
    "SimulatedBackend",
    "StagePrompt",
    "build_backend",
    "build_repair_prompt",
    "extract_json",
    "normalize_text",
]
