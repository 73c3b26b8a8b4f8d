import json
from importlib import resources

from .compiler import compile_template, compile_transforms
from .validator import (
    CODE_FIELD_UNRESOLVED,
    CODE_MALFORMED_DOCUMENT,
    CODE_UNKNOWN_CHANNEL,
    CODE_UNSUPPORTED_MARK,
    CODE_UNSUPPORTED_TRANSFORM,
    ValidationIssue,
    ValidationReport,
    resolved_scope,
    validate_spec,
)

EXEMPLAR_NAMES = ("line", "pie", "bar", "scatter")


def load_exemplars() -> dict[str, dict]:
    """The packaged few-shot documents, keyed by chart type."""
    out = {}
    for name in EXEMPLAR_NAMES:
        text = resources.files(__package__).joinpath(f"exemplars/{name}.json").read_text("utf-8")
        out[name] = json.loads(text)
    return out


__all__ = [
    "CODE_FIELD_UNRESOLVED",
    "CODE_MALFORMED_DOCUMENT",
    "CODE_UNKNOWN_CHANNEL",
    "CODE_UNSUPPORTED_MARK",
    "CODE_UNSUPPORTED_TRANSFORM",
    "EXEMPLAR_NAMES",
    "ValidationIssue",
    "ValidationReport",
    "compile_template",
    "compile_transforms",
    "load_exemplars",
    "resolved_scope",
    "validate_spec",
]
