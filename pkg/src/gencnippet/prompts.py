"""Prompt construction for snippet generation.

Two named profiles cover the two backend families: "instruct" renders the
bracketed-section template for instruction-following models, "finetuned"
renders the bare input format the fine-tuned models were trained on.
"""

from __future__ import annotations

import random
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from datetime import date
from enum import Enum

from .dataset import TrainingRecord
from .ingest import Language

DEFAULT_MAX_EXEMPLARS = 3

PREAMBLE = (
    "I am working on a programming problem and need help generating a "
    "representative code example to demonstrate my programming issue."
)
HEADER_DESCRIPTION = "[Problem Description]:"
HEADER_LANGUAGE = "[Programming Language]:"
HEADER_CONSTRAINTS = "[Constraints and Requirements]:"
HEADER_OBJECTIVE = "[Objective]:"
OBJECTIVE_TEXT = (
    "Generate a code example that aligns with the provided details, "
    "demonstrates the problem clearly, and contains intentional faults "
    "related to the described issue. Keep the example concise and focused "
    "to ensure clarity for troubleshooting."
)


class PromptError(ValueError):
    """Raised for invalid prompt specifications or exemplar requests."""


class PromptProfile(str, Enum):
    INSTRUCT = "instruct"
    FINETUNED = "finetuned"


@dataclass(frozen=True)
class Exemplar:
    description: str
    code: str


@dataclass(frozen=True)
class PromptSpec:
    problem_description: str
    language: Language
    constraints: str | None = None
    exemplars: tuple[Exemplar, ...] = ()
    # Date stamp for the finetuned profile; defaults to today when absent.
    as_of: date | None = None

    def validate(self, max_exemplars: int = DEFAULT_MAX_EXEMPLARS) -> None:
        if not self.problem_description.strip():
            raise PromptError("problem description is empty")
        if len(self.exemplars) > max_exemplars:
            raise PromptError(
                f"{len(self.exemplars)} exemplars exceed the maximum of {max_exemplars}"
            )


@dataclass(frozen=True)
class PromptSections:
    description: str
    language: str
    constraints: str
    objective: str


def build_prompt(
    spec: PromptSpec, max_exemplars: int = DEFAULT_MAX_EXEMPLARS
) -> str:
    """Render the bracketed-section prompt, optionally with Example blocks."""
    spec.validate(max_exemplars)
    parts = [PREAMBLE]
    for index, exemplar in enumerate(spec.exemplars, start=1):
        parts.append(
            f"[Example {index}]:\n"
            f"Problem: {exemplar.description}\n"
            f"Code: {exemplar.code}"
        )
    constraints = spec.constraints if spec.constraints else "None"
    parts.append(f"{HEADER_DESCRIPTION} {spec.problem_description}")
    parts.append(f"{HEADER_LANGUAGE} {spec.language.display_name}")
    parts.append(f"{HEADER_CONSTRAINTS} {constraints}")
    parts.append(f"{HEADER_OBJECTIVE} {OBJECTIVE_TEXT}")
    return "\n\n".join(parts)


def build_finetuned_input(
    spec: PromptSpec, max_exemplars: int = DEFAULT_MAX_EXEMPLARS
) -> str:
    """Render the bare training-time input format; exemplars do not apply."""
    spec.validate(max_exemplars)
    day = (spec.as_of or date.today()).isoformat()
    return (
        f"Question: {spec.problem_description} "
        f"Language: [{spec.language.display_name}] "
        f"Date: [{day}]"
    )


PROMPT_PROFILES = {
    PromptProfile.INSTRUCT: build_prompt,
    PromptProfile.FINETUNED: build_finetuned_input,
}


def render_prompt(
    spec: PromptSpec,
    profile: PromptProfile | str = PromptProfile.INSTRUCT,
    max_exemplars: int = DEFAULT_MAX_EXEMPLARS,
) -> str:
    return PROMPT_PROFILES[PromptProfile(profile)](spec, max_exemplars)


# Non-greedy section bodies delimited by the literal next header; bodies
# containing a header sequence themselves fall outside the grammar.
_SECTIONS_RE = re.compile(
    re.escape(HEADER_DESCRIPTION) + r" (?P<description>.*?)\n\n"
    + re.escape(HEADER_LANGUAGE) + r" (?P<language>.*?)\n\n"
    + re.escape(HEADER_CONSTRAINTS) + r" (?P<constraints>.*?)\n\n"
    + re.escape(HEADER_OBJECTIVE) + r" (?P<objective>.*)\Z",
    re.DOTALL,
)

_EXAMPLE_LABEL_RE = re.compile(r"^\[Example \d+\]:", re.MULTILINE)


def parse_prompt_sections(text: str) -> PromptSections:
    """Parse a rendered prompt back into its four sections."""
    match = _SECTIONS_RE.search(text)
    if match is None:
        raise PromptError("text does not contain the four prompt sections")
    return PromptSections(
        description=match.group("description"),
        language=match.group("language"),
        constraints=match.group("constraints"),
        objective=match.group("objective"),
    )


def count_example_blocks(text: str) -> int:
    return len(_EXAMPLE_LABEL_RE.findall(text))


_TRAINING_INPUT_RE = re.compile(
    r"\AQuestion: (?P<prose>.*) Language: \[(?P<language>Java|Python)\] "
    r"Date: \[\d{4}-\d{2}-\d{2}\]\Z",
    re.DOTALL,
)
_OUTPUT_PREFIX = "Code: "


def exemplar_from_record(record: TrainingRecord) -> Exemplar:
    match = _TRAINING_INPUT_RE.match(record.input_text)
    if match is None:
        raise PromptError(
            f"record {record.question_id} input does not match the training template"
        )
    code = record.output_text
    if not code.startswith(_OUTPUT_PREFIX):
        raise PromptError(
            f"record {record.question_id} output lacks the {_OUTPUT_PREFIX!r} prefix"
        )
    code = code[len(_OUTPUT_PREFIX):]
    if code.endswith("\n"):
        code = code[:-1]
    return Exemplar(description=match.group("prose"), code=code)


def extract_problem_description(prompt: str) -> str:
    """Best-effort recovery of the problem description from a rendered prompt.

    Understands both prompt profiles; anything else is returned verbatim.
    """
    try:
        return parse_prompt_sections(prompt).description
    except PromptError:
        pass
    match = _TRAINING_INPUT_RE.match(prompt)
    if match is not None:
        return match.group("prose")
    return prompt


def select_exemplars(
    pool: Sequence[TrainingRecord],
    spec: PromptSpec,
    k: int,
    seed: int,
    exclude_ids: Iterable[int] = (),
) -> list[Exemplar]:
    """Pick k language-matched exemplars by seeded sampling over the pool."""
    if k < 0:
        raise PromptError("exemplar count must be non-negative")
    if k == 0:
        return []
    excluded = set(exclude_ids)
    candidates = sorted(
        (
            record
            for record in pool
            if record.language is spec.language and record.question_id not in excluded
        ),
        key=lambda record: record.question_id,
    )
    if k > len(candidates):
        raise PromptError(
            f"requested {k} exemplars but only {len(candidates)} "
            f"{spec.language.value} records are available"
        )
    chosen = random.Random(seed).sample(candidates, k)
    return [exemplar_from_record(record) for record in chosen]
