from .cache import StageCache, cache_key
from .orchestrator import (
    Orchestrator,
    SuggestionRound,
    read_transcript_file,
    run_offline,
)

__all__ = [
    "Orchestrator",
    "StageCache",
    "SuggestionRound",
    "cache_key",
    "read_transcript_file",
    "run_offline",
]
