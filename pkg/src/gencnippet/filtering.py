"""Select questions that genuinely require code snippets and apply quality gates.

The code-need decision comes from a parameter-file-driven logistic
classifier over a small documented feature set, so the shipped default
weights can be swapped for externally trained ones without code changes.
Quality gates then keep questions with a strictly positive score and exactly
one code block (training path) or no code block at all (generation path).
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .ingest import DatasetSummary, QuestionPost, StageFlags, summarize


class ModelConfigError(ValueError):
    """Classifier parameters are malformed or inconsistent."""


class FilterMode(str, Enum):
    TRAINING = "training"
    GENERATION = "generation"


# Rejection reason codes carried on FilterDecision.
NEEDS_CODE_BELOW_THRESHOLD = "NEEDS_CODE_BELOW_THRESHOLD"
NON_POSITIVE_SCORE = "NON_POSITIVE_SCORE"
MULTI_SNIPPET = "MULTI_SNIPPET"
NO_SNIPPET = "NO_SNIPPET"
HAS_SNIPPET = "HAS_SNIPPET"


@dataclass(frozen=True)
class CodeNeedModel:
    feature_names: tuple[str, ...]
    weights: tuple[float, ...]
    bias: float
    threshold: float

    def validate(self) -> None:
        if len(self.weights) != len(self.feature_names):
            raise ModelConfigError(
                f"{len(self.weights)} weights for {len(self.feature_names)} features"
            )
        if not 0.0 < self.threshold < 1.0:
            raise ModelConfigError(f"threshold must be in (0, 1), got {self.threshold}")
        unknown = [name for name in self.feature_names if name not in FEATURE_FUNCTIONS]
        if unknown:
            raise ModelConfigError(f"unknown feature names: {unknown}")


@dataclass(frozen=True)
class FilterDecision:
    question_id: int
    needs_code: bool
    need_score: float
    passed_quality: bool
    reasons: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "needs_code": self.needs_code,
            "need_score": self.need_score,
            "passed_quality": self.passed_quality,
            "reasons": list(self.reasons),
        }


# ---------------------------------------------------------------------------
# Feature extraction
# ---------------------------------------------------------------------------

_ERROR_LEXICON = (
    "error", "exception", "traceback", "stack trace", "stacktrace",
    "crash", "fails", "failed", "failure", "segfault", "warning",
)
_INTERROGATIVES = ("how do i", "how can i", "how to", "how should i")
_CAMEL_CASE = re.compile(r"\b[a-z]+[A-Z][A-Za-z0-9]*\b")
_SNAKE_CASE = re.compile(r"\b[a-z0-9]+_[a-z0-9_]+\b")


def _log_prose_chars(question: QuestionPost) -> float:
    return math.log10(1 + len(question.prose))


def _error_lexicon(question: QuestionPost) -> float:
    lowered = question.prose.lower()
    return 1.0 if any(term in lowered for term in _ERROR_LEXICON) else 0.0


def _interrogative(question: QuestionPost) -> float:
    lowered = question.prose.lower()
    return 1.0 if any(phrase in lowered for phrase in _INTERROGATIVES) else 0.0


def _api_identifier(question: QuestionPost) -> float:
    text = question.prose
    return 1.0 if _CAMEL_CASE.search(text) or _SNAKE_CASE.search(text) else 0.0


def _lang_java(question: QuestionPost) -> float:
    return 1.0 if question.language.value == "java" else 0.0


def _lang_python(question: QuestionPost) -> float:
    return 1.0 if question.language.value == "python" else 0.0


FEATURE_FUNCTIONS: dict[str, Callable[[QuestionPost], float]] = {
    "log_prose_chars": _log_prose_chars,
    "error_lexicon": _error_lexicon,
    "interrogative": _interrogative,
    "api_identifier": _api_identifier,
    "lang_java": _lang_java,
    "lang_python": _lang_python,
}

DEFAULT_FEATURES: tuple[str, ...] = tuple(FEATURE_FUNCTIONS)

#: Replaceable default parameters; hand-set, not trained.
DEFAULT_MODEL = CodeNeedModel(
    feature_names=DEFAULT_FEATURES,
    weights=(0.25, 1.5, 0.8, 0.7, 0.0, 0.0),
    bias=-0.6,
    threshold=0.5,
)


def featurize(
    question: QuestionPost,
    feature_names: Sequence[str] = DEFAULT_FEATURES,
) -> list[float]:
    """Deterministic feature vector over the named features (default: all)."""
    try:
        return [FEATURE_FUNCTIONS[name](question) for name in feature_names]
    except KeyError as exc:
        raise ModelConfigError(f"unknown feature name: {exc.args[0]!r}") from None


def _logistic(x: float) -> float:
    if x < -700:
        return 0.0
    return 1.0 / (1.0 + math.exp(-x))


def needs_code(question: QuestionPost, model: CodeNeedModel) -> tuple[bool, float]:
    """Classifier decision: logistic(weights . features + bias) against threshold."""
    model.validate()
    features = featurize(question, model.feature_names)
    margin = sum(w * f for w, f in zip(model.weights, features)) + model.bias
    score = _logistic(margin)
    return score >= model.threshold, score


def apply_quality_gates(
    question: QuestionPost,
    mode: FilterMode = FilterMode.TRAINING,
    allow_multi_snippet: bool = False,
) -> tuple[bool, tuple[str, ...]]:
    """Gate outcomes for one question: (passed, rejection reasons).

    Training mode keeps questions with a strictly positive score and exactly
    one code block (or at least one when multi-snippet records are allowed).
    Generation mode keeps questions that lack code entirely; drafts have no
    meaningful score yet, so no score gate applies there.
    """
    reasons: list[str] = []
    blocks = len(question.code_blocks)
    if mode is FilterMode.TRAINING:
        if question.score <= 0:
            reasons.append(NON_POSITIVE_SCORE)
        if blocks == 0:
            reasons.append(NO_SNIPPET)
        elif blocks > 1 and not allow_multi_snippet:
            reasons.append(MULTI_SNIPPET)
    else:
        if blocks > 0:
            reasons.append(HAS_SNIPPET)
    return not reasons, tuple(reasons)


def run_filter(
    questions: Iterable[QuestionPost],
    model: CodeNeedModel = DEFAULT_MODEL,
    mode: FilterMode = FilterMode.TRAINING,
    allow_multi_snippet: bool = False,
) -> tuple[list[QuestionPost], list[FilterDecision], DatasetSummary]:
    """Run the full funnel: classifier, then gates, then the stage summary.

    Order-preserving and deterministic; the summary's first stage is
    "has code" in training mode and "lacks code" in generation mode.
    """
    model.validate()
    selected: list[QuestionPost] = []
    decisions: list[FilterDecision] = []
    flags: dict[int, StageFlags] = {}
    kept: list[QuestionPost] = []
    for question in questions:
        needed, score = needs_code(question, model)
        gates_ok, gate_reasons = apply_quality_gates(question, mode, allow_multi_snippet)
        reasons = list(gate_reasons)
        if not needed:
            reasons.insert(0, NEEDS_CODE_BELOW_THRESHOLD)
        passed = needed and gates_ok
        decisions.append(
            FilterDecision(
                question_id=question.id,
                needs_code=needed,
                need_score=score,
                passed_quality=passed,
                reasons=() if passed else tuple(reasons),
            )
        )
        if passed:
            selected.append(question)
        if mode is FilterMode.TRAINING:
            stage_one = len(question.code_blocks) > 0
        else:
            stage_one = len(question.code_blocks) == 0
        flags[question.id] = StageFlags(
            has_code=stage_one,
            needs_code=needed,
            passed_quality=passed,
        )
        kept.append(question)
    return selected, decisions, summarize(kept, flags)


# ---------------------------------------------------------------------------
# Parameter files
# ---------------------------------------------------------------------------

def load_model(path: str | Path) -> CodeNeedModel:
    """Load classifier parameters from a JSON file.

    Expected keys: feature_names (list of str), weights (list of float),
    bias (float), threshold (float in (0, 1)).
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelConfigError(f"{path}: invalid JSON ({exc})") from exc
    missing = {"feature_names", "weights", "bias", "threshold"} - set(data)
    if missing:
        raise ModelConfigError(f"{path}: missing keys {sorted(missing)}")
    model = CodeNeedModel(
        feature_names=tuple(data["feature_names"]),
        weights=tuple(float(w) for w in data["weights"]),
        bias=float(data["bias"]),
        threshold=float(data["threshold"]),
    )
    model.validate()
    return model


def save_model(model: CodeNeedModel, path: str | Path) -> None:
    payload = {
        "feature_names": list(model.feature_names),
        "weights": list(model.weights),
        "bias": model.bias,
        "threshold": model.threshold,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def write_decisions(decisions: Iterable[FilterDecision], path: str | Path) -> int:
    count = 0
    with Path(path).open("w", encoding="utf-8") as out:
        for decision in decisions:
            out.write(json.dumps(decision.to_dict(), ensure_ascii=False) + "\n")
            count += 1
    return count
