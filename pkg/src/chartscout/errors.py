"""Shared error hierarchy.

Every failure mode the package can signal is a subclass of :class:`ChartScoutError`
carrying a stable ``code`` string. The HTTP layer maps codes to status codes
one to one, so new error cases must be added here rather than raised ad hoc.
"""

from __future__ import annotations


class ChartScoutError(Exception):
    """Base class; ``code`` defaults to the subclass name."""

    code: str = "InternalError"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


def _define(name: str, doc: str = "") -> type[ChartScoutError]:
    cls = type(name, (ChartScoutError,), {"code": name, "__doc__": doc or None})
    return cls


# ----- data catalog -----

EmptyDataset = _define("EmptyDataset", "Dataset has no rows or no columns.")
MalformedInput = _define("MalformedInput", "Unparseable file content; message carries the line or record index.")
DuplicateColumn = _define("DuplicateColumn", "Two columns share a name after normalization.")
UnknownColumn = _define("UnknownColumn", "A referenced column does not exist in the current schema.")
TransformSchemaMismatch = _define("TransformSchemaMismatch", "A transform is invalid against the schema it would run on.")
UnsupportedTransform = _define("UnsupportedTransform", "Transform kind or parameter outside the fixed vocabulary.")
UnknownDataset = _define("UnknownDataset", "No dataset with the given id in the catalog.")

# ----- session context -----

UnknownSession = _define("UnknownSession")
EmptyUtterance = _define("EmptyUtterance", "Utterance text empty after trimming.")
UnknownRound = _define("UnknownRound")
UnknownCandidate = _define("UnknownCandidate")
CandidateInvalid = _define("CandidateInvalid", "Candidate has no displayable form; cannot adopt.")
InvalidProfile = _define("InvalidProfile")
InvalidConfig = _define("InvalidConfig")
SpecInvalid = _define("SpecInvalid", "Chart document rejected by the subset validator.")

# ----- llm gateway -----

BackendTimeout = _define("BackendTimeout")
BackendUnavailable = _define("BackendUnavailable")
FixtureMissing = _define("FixtureMissing", "Replay backend has no recorded response for the requested call.")
NoJsonFound = _define("NoJsonFound", "Completion text contains no JSON value.")

# ----- pipeline stages -----

StageOutputInvalid = _define("StageOutputInvalid", "Model output failed shape validation after one repair attempt.")
InsufficientContext = _define("InsufficientContext", "No utterances and no displayed chart to analyze.")
EmptyCatalog = _define("EmptyCatalog")
NoValidColumns = _define("NoValidColumns", "Selection kept zero known columns.")
UnsupportedChartType = _define("UnsupportedChartType")

# ----- orchestrator -----

RoundInFlight = _define("RoundInFlight", "Session already has a suggestion round running.")
RoundEmpty = _define("RoundEmpty", "Every candidate was excluded; nothing to rank.")


class StageFailed(ChartScoutError):
    """A required pipeline stage failed; the round is aborted."""

    code = "StageFailed"

    def __init__(self, stage: str, message: str = ""):
        super().__init__(message or f"stage {stage} failed")
        self.stage = stage
