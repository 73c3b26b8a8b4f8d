"""Stage 4b: score one draft against the context, and the ranking rules.

Evaluation runs in parallel with specification generation and is handed the
draft only, never the rendered document; the function signature makes that
impossible to violate. A candidate whose evaluation fails ends up with a
zero rubric and the evalFailed flag instead of sinking the round.

finalScore = round(0.5 * relevance + 0.3 * audienceFit + 0.2 * dataValidity),
half up, minus 10 when the low-diversity penalty applies, floored at 0.
Ranking is by descending finalScore with ties broken by ascending
generation index, which keeps ranking deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..candidates import CandidateDraft
from ..errors import StageOutputInvalid
from ..gateway import Gateway, StagePrompt
from ..session import AudienceProfile
from .analysis import ContextAnalysis
from .selection import DataSelection

STAGE = "evaluation"

EVAL_FAILED_FLAG = "evalFailed"
SCORE_MIN = 0
SCORE_MAX = 100
DIVERSITY_PENALTY = 10

_SYSTEM = """You judge one proposed chart for a live presentation. Score three
dimensions from 0 to 100:

relevance: does this chart speak to the current conversation and objectives?
audienceFit: will this audience read it comfortably?
dataValidity: is the underlying data use sound (sensible transforms,
  meaningful encodings, honest framing)?

Reply with ONLY a JSON object:
{"relevance": int, "audienceFit": int, "dataValidity": int, "justification": string}"""


@dataclass(frozen=True)
class RubricScores:
    relevance: int
    audience_fit: int
    data_validity: int
    justification: str = ""
    warnings: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "relevance": self.relevance,
            "audienceFit": self.audience_fit,
            "dataValidity": self.data_validity,
        }


def _clamp_score(value: object, name: str, warnings: list[str]) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise StageOutputInvalid(f"{name} must be a number, got {value!r}")
    number = int(round(value))
    if number < SCORE_MIN:
        warnings.append(f"{name}Clamped")
        return SCORE_MIN
    if number > SCORE_MAX:
        warnings.append(f"{name}Clamped")
        return SCORE_MAX
    return number


def parse_rubric(value: object) -> RubricScores:
    if not isinstance(value, dict):
        raise StageOutputInvalid("rubric must be a JSON object")
    warnings: list[str] = []
    relevance = _clamp_score(value.get("relevance"), "relevance", warnings)
    audience_fit = _clamp_score(value.get("audienceFit"), "audienceFit", warnings)
    data_validity = _clamp_score(value.get("dataValidity"), "dataValidity", warnings)
    justification = value.get("justification", "")
    if not isinstance(justification, str):
        justification = str(justification)
    return RubricScores(
        relevance=relevance,
        audience_fit=audience_fit,
        data_validity=data_validity,
        justification=justification,
        warnings=tuple(warnings),
    )


def build_evaluation_prompt(
    draft: CandidateDraft,
    analysis: ContextAnalysis,
    profile: AudienceProfile,
    selection: DataSelection,
    prompt_version: str,
) -> StagePrompt:
    user = f"""Context analysis:
{json.dumps(analysis.to_json(), indent=2)}

Audience: expertise {profile.expertise}, domain familiarity {profile.domain_familiarity}, interests: {', '.join(profile.interests) or '(none given)'}

Data in play: dataset {selection.dataset_id}, columns {', '.join(selection.columns)}

Candidate to judge:
{json.dumps(draft.to_json(), indent=2)}"""
    return StagePrompt(
        stage=STAGE,
        system=_SYSTEM,
        user=user,
        prompt_version=prompt_version,
        call_index=draft.index,
    )


async def run_evaluation(
    gateway: Gateway,
    draft: CandidateDraft,
    analysis: ContextAnalysis,
    profile: AudienceProfile,
    selection: DataSelection,
    prompt_version: str,
) -> RubricScores:
    prompt = build_evaluation_prompt(draft, analysis, profile, selection, prompt_version)
    try:
        return await gateway.complete_structured(prompt, parse_rubric)
    except StageOutputInvalid:
        # degrade this candidate, not the round
        return RubricScores(
            relevance=0,
            audience_fit=0,
            data_validity=0,
            justification="",
            warnings=(EVAL_FAILED_FLAG,),
        )


def final_score(scores: RubricScores, low_diversity_penalty: bool = False) -> int:
    # weighted sum scaled by 10 so the 0.5/0.3/0.2 weights stay exact;
    # float accumulation misrounds half cases like (0, 31, 1)
    weighted10 = 5 * scores.relevance + 3 * scores.audience_fit + 2 * scores.data_validity
    value = (weighted10 + 5) // 10  # floor(weighted + 0.5), half always up
    if low_diversity_penalty:
        value -= DIVERSITY_PENALTY
    return max(value, SCORE_MIN)


@dataclass
class ScoredCandidate:
    candidate_id: str
    index: int
    chart_type: str
    title: str
    rationale: str
    encoding: dict
    transforms: list[dict]
    columns: list[str]
    scores: RubricScores
    final: int
    flags: list[str] = field(default_factory=list)
    spec_source: str = "none"
    spec: dict | None = None
    table_view: dict | None = None
    justification: str = ""

    def to_json(self) -> dict:
        return {
            "candidateId": self.candidate_id,
            "index": self.index,
            "chartType": self.chart_type,
            "title": self.title,
            "rationale": self.rationale,
            "encoding": self.encoding,
            "transforms": self.transforms,
            "columns": self.columns,
            "scores": self.scores.to_json(),
            "finalScore": self.final,
            "flags": list(self.flags),
            "specSource": self.spec_source,
            "spec": self.spec,
            "tableView": self.table_view,
            "justification": self.justification,
        }


def rank_candidates(candidates: list[ScoredCandidate]) -> list[ScoredCandidate]:
    return sorted(candidates, key=lambda c: (-c.final, c.index))
