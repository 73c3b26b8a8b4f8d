from .analysis import ContextAnalysis, parse_analysis, run_analysis
from .evaluation import (
    EVAL_FAILED_FLAG,
    RubricScores,
    ScoredCandidate,
    final_score,
    parse_rubric,
    rank_candidates,
    run_evaluation,
)
from .generation import (
    DIVERSITY_FLAG,
    GenerationResult,
    dedupe_drafts,
    enforce_diversity,
    parse_draft_list,
    run_generation,
)
from .selection import (
    ColumnRange,
    DataSelection,
    parse_selection,
    run_selection,
    validate_selection,
)
from .specgen import SOURCE_LLM, SOURCE_NONE, SOURCE_TEMPLATE, SpecResult, generate_spec

__all__ = [
    "DIVERSITY_FLAG",
    "EVAL_FAILED_FLAG",
    "ColumnRange",
    "ContextAnalysis",
    "DataSelection",
    "GenerationResult",
    "RubricScores",
    "SOURCE_LLM",
    "SOURCE_NONE",
    "SOURCE_TEMPLATE",
    "ScoredCandidate",
    "SpecResult",
    "dedupe_drafts",
    "enforce_diversity",
    "final_score",
    "parse_analysis",
    "parse_draft_list",
    "parse_rubric",
    "parse_selection",
    "rank_candidates",
    "run_analysis",
    "run_evaluation",
    "run_generation",
    "run_selection",
    "validate_selection",
]
