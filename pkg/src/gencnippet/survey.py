"""Survey response analysis: validation, WNPS, descriptive statistics.

Responses arrive as one JSON record per line.  Records failing consent or
prerequisites are excluded with explicit reasons; the rest feed frequency
tables, the weighted NPS, utility cross-tabs by experience bracket, and a
verbatim export of open-ended answers.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from scipy.stats import chi2_contingency

NO_CONSENT = "NO_CONSENT"
PREREQ_FAIL = "PREREQ_FAIL"
INVALID_ANSWER = "INVALID_ANSWER"
MALFORMED = "MALFORMED"


class NpsAnswer(str, Enum):
    DEFINITELY = "Definitely"
    PROBABLY = "Probably"
    NEUTRAL = "Neutral"
    PROBABLY_NOT = "Probably not"
    DEFINITELY_NOT = "Definitely not"


NPS_SCORES: dict[NpsAnswer, int] = {
    NpsAnswer.DEFINITELY: 2,
    NpsAnswer.PROBABLY: 1,
    NpsAnswer.NEUTRAL: 0,
    NpsAnswer.PROBABLY_NOT: -1,
    NpsAnswer.DEFINITELY_NOT: -2,
}

AGREEMENT_SCALE = ("Strongly agree", "Agree", "Neutral", "Disagree", "Strongly disagree")


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    options: tuple[str, ...] | None  # None marks an open-ended question


EASE_QUESTIONS = (
    Question(
        "ease_install",
        "How easy was it to install and set up GENCNIPPET on your browser?",
        ("Very easy", "Easy", "Neutral", "Difficult", "Very difficult"),
    ),
    Question(
        "ease_issues",
        "Did you encounter any technical issues while using GENCNIPPET?",
        ("No issues", "Minor issues", "Moderate issues", "Major issues"),
    ),
    Question(
        "ease_latency",
        "How would you rate the response time (latency) of GENCNIPPET in "
        "generating code snippets?",
        ("Very fast", "Fast", "Acceptable", "Slow", "Very slow"),
    ),
)

NPS_QUESTION = Question(
    "nps_recommend",
    "Would you recommend GENCNIPPET to other SO users?",
    tuple(answer.value for answer in NpsAnswer),
)

UTILITY_QUESTIONS = (
    Question(
        "utility_time_saved",
        "The code snippet generation feature saved your time during question "
        "submission",
        AGREEMENT_SCALE,
    ),
    Question(
        "utility_relevance",
        "The generated code snippets were relevant to the problem descriptions "
        "in your questions",
        AGREEMENT_SCALE,
    ),
    Question(
        "utility_clarity",
        "The generated code snippets were clear, concise, and appropriately "
        "tailored to the intent of my questions",
        AGREEMENT_SCALE,
    ),
    Question(
        "utility_confidence",
        "Using GENCNIPPET made you feel more confident about receiving timely "
        "answers to my questions",
        AGREEMENT_SCALE,
    ),
    Question(
        "utility_effort",
        "GENCNIPPET reduced the effort required to create high-quality questions",
        AGREEMENT_SCALE,
    ),
    Question(
        "utility_experience",
        "GENCNIPPET improved my overall experience of submitting questions on SO",
        AGREEMENT_SCALE,
    ),
)

OPEN_QUESTIONS = (
    Question(
        "ease_comments",
        "Please provide any additional comments or suggestions for improving "
        "the ease of use of GENCNIPPET",
        None,
    ),
    Question("nps_reason", "What is the primary reason for the score you gave?", None),
    Question(
        "nps_improvements",
        "What improvements would make you more likely to recommend GENCNIPPET "
        "to others?",
        None,
    ),
    Question(
        "utility_comments",
        "Please share any additional thoughts or suggestions about the utility "
        "of GENCNIPPET",
        None,
    ),
)

CLOSED_QUESTIONS = EASE_QUESTIONS + (NPS_QUESTION,) + UTILITY_QUESTIONS

EXPERIENCE_BRACKETS = ("<2", "2-5", "6-10", ">10")


def experience_bracket(years: float) -> str:
    if years < 2:
        return "<2"
    if years < 6:
        return "2-5"
    if years < 11:
        return "6-10"
    return ">10"


@dataclass(frozen=True)
class Demographics:
    experience_years: float
    profession: str
    country: str
    so_profile: str | None = None


@dataclass(frozen=True)
class SurveyResponse:
    respondent_id: str
    consent: bool
    prerequisites_met: bool
    demographics: Demographics
    ease_items: Mapping[str, str] = field(default_factory=dict)
    nps_answer: NpsAnswer | None = None
    utility_items: Mapping[str, str] = field(default_factory=dict)
    open_texts: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Exclusion:
    respondent_id: str
    reason: str
    detail: str = ""


def wnps(responses: Sequence[SurveyResponse]) -> float:
    """Weighted NPS: sum of answer scores over the count of respondents
    who answered the NPS item."""
    scores = [NPS_SCORES[r.nps_answer] for r in responses if r.nps_answer is not None]
    if not scores:
        raise ValueError("no NPS answers; WNPS is undefined")
    return sum(scores) / len(scores)


_OPTION_SETS = {q.id: set(q.options) for q in CLOSED_QUESTIONS if q.options}


def _parse_record(record: Mapping) -> SurveyResponse:
    demographics = record.get("demographics") or {}
    ease = dict(record.get("ease") or {})
    utility = dict(record.get("utility") or {})
    open_texts = dict(record.get("open_texts") or {})

    for question_id, answer in list(ease.items()) + list(utility.items()):
        allowed = _OPTION_SETS.get(question_id)
        if allowed is None:
            raise ValueError(f"unknown question id {question_id!r}")
        if answer not in allowed:
            raise ValueError(f"answer {answer!r} not valid for {question_id}")

    raw_nps = record.get("nps")
    nps_answer = None
    if raw_nps is not None:
        try:
            nps_answer = NpsAnswer(raw_nps)
        except ValueError:
            raise ValueError(f"answer {raw_nps!r} not valid for {NPS_QUESTION.id}")

    return SurveyResponse(
        respondent_id=str(record["respondent_id"]),
        consent=bool(record.get("consent", False)),
        prerequisites_met=bool(record.get("prerequisites_met", False)),
        demographics=Demographics(
            experience_years=float(demographics.get("experience_years", 0)),
            profession=str(demographics.get("profession", "")),
            country=str(demographics.get("country", "")),
            so_profile=demographics.get("so_profile"),
        ),
        ease_items=ease,
        nps_answer=nps_answer,
        utility_items=utility,
        open_texts=open_texts,
    )


def validate_responses(
    records: Iterable[Mapping],
) -> tuple[list[SurveyResponse], list[Exclusion]]:
    """Split raw records into included responses and reasoned exclusions."""
    included: list[SurveyResponse] = []
    excluded: list[Exclusion] = []
    for record in records:
        respondent_id = str(record.get("respondent_id", "?"))
        try:
            response = _parse_record(record)
        except (ValueError, KeyError, TypeError) as exc:
            reason = INVALID_ANSWER if "not valid" in str(exc) else MALFORMED
            excluded.append(Exclusion(respondent_id, reason, str(exc)))
            continue
        if not response.consent:
            excluded.append(Exclusion(response.respondent_id, NO_CONSENT))
        elif not response.prerequisites_met:
            excluded.append(Exclusion(response.respondent_id, PREREQ_FAIL))
        else:
            included.append(response)
    return included, excluded


def load_raw_responses(path: str | Path) -> list[dict]:
    records = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                records.append(json.loads(line))
    return records


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    p_value: float
    dof: int


@dataclass(frozen=True)
class SurveyReport:
    respondent_count: int
    frequencies: dict[str, dict[str, int]]
    wnps: float | None
    cross_tabs: dict[str, dict[str, dict[str, int]]]
    chi_square: dict[str, ChiSquareResult | None]
    open_texts: dict[str, list[str]]

    def to_dict(self) -> dict:
        return {
            "respondent_count": self.respondent_count,
            "frequencies": self.frequencies,
            "wnps": self.wnps,
            "cross_tabs": self.cross_tabs,
            "chi_square": {
                key: vars(value) if value else None
                for key, value in self.chi_square.items()
            },
            "open_texts": self.open_texts,
        }


def _answer_for(response: SurveyResponse, question_id: str) -> str | None:
    if question_id == NPS_QUESTION.id:
        return response.nps_answer.value if response.nps_answer else None
    if question_id in response.ease_items:
        return response.ease_items[question_id]
    return response.utility_items.get(question_id)


def _exploratory_chi_square(table: dict[str, dict[str, int]]) -> ChiSquareResult | None:
    # Drop empty rows/columns; the test needs at least a 2x2 table.
    rows = [list(counts.values()) for counts in table.values() if sum(counts.values())]
    if len(rows) < 2:
        return None
    keep = [i for i in range(len(rows[0])) if any(row[i] for row in rows)]
    if len(keep) < 2:
        return None
    trimmed = [[row[i] for i in keep] for row in rows]
    statistic, p_value, dof, _ = chi2_contingency(trimmed)
    return ChiSquareResult(statistic=float(statistic), p_value=float(p_value), dof=int(dof))


def summarize_survey(included: Sequence[SurveyResponse]) -> SurveyReport:
    """Frequencies for every closed question, WNPS, utility-by-experience
    cross-tabs with exploratory chi-square, and verbatim open texts."""
    frequencies: dict[str, dict[str, int]] = {}
    for question in CLOSED_QUESTIONS:
        counts = {option: 0 for option in question.options}
        for response in included:
            answer = _answer_for(response, question.id)
            if answer is not None:
                counts[answer] += 1
        frequencies[question.id] = counts

    try:
        score = wnps(included)
    except ValueError:
        score = None

    cross_tabs: dict[str, dict[str, dict[str, int]]] = {}
    chi_square: dict[str, ChiSquareResult | None] = {}
    for question in UTILITY_QUESTIONS:
        table = {
            bracket: {option: 0 for option in question.options}
            for bracket in EXPERIENCE_BRACKETS
        }
        for response in included:
            answer = response.utility_items.get(question.id)
            if answer is not None:
                bracket = experience_bracket(response.demographics.experience_years)
                table[bracket][answer] += 1
        cross_tabs[question.id] = table
        chi_square[question.id] = _exploratory_chi_square(table)

    open_texts: dict[str, list[str]] = {q.id: [] for q in OPEN_QUESTIONS}
    for response in included:
        for question in OPEN_QUESTIONS:
            text = response.open_texts.get(question.id)
            if text:
                open_texts[question.id].append(text)

    return SurveyReport(
        respondent_count=len(included),
        frequencies=frequencies,
        wnps=score,
        cross_tabs=cross_tabs,
        chi_square=chi_square,
        open_texts=open_texts,
    )


def render_survey_report(report: SurveyReport) -> str:
    lines = [f"respondents included: {report.respondent_count}"]
    if report.wnps is None:
        lines.append("WNPS: no data")
    else:
        lines.append(f"WNPS: {report.wnps:+.4f}")
    question_text = {q.id: q.text for q in CLOSED_QUESTIONS}
    for question_id, counts in report.frequencies.items():
        lines.append("")
        lines.append(f"[{question_id}] {question_text[question_id]}")
        total = sum(counts.values())
        if total == 0:
            lines.append("  no data")
            continue
        width = max(len(option) for option in counts)
        for option, count in counts.items():
            lines.append(f"  {option.ljust(width)}  {count}")
    for question_id, table in report.cross_tabs.items():
        lines.append("")
        lines.append(f"[{question_id}] by experience bracket")
        options = list(next(iter(table.values())))
        header = "  bracket".ljust(10) + "  " + "  ".join(o[:12].rjust(12) for o in options)
        lines.append(header)
        for bracket, counts in table.items():
            row = f"  {bracket.ljust(8)}  " + "  ".join(
                str(counts[o]).rjust(12) for o in options
            )
            lines.append(row)
        result = report.chi_square.get(question_id)
        if result is None:
            lines.append("  chi-square (exploratory): no data")
        else:
            lines.append(
                f"  chi-square (exploratory): stat={result.statistic:.4f} "
                f"p={result.p_value:.4f} dof={result.dof}"
            )
    for question_id, texts in report.open_texts.items():
        lines.append("")
        lines.append(f"[{question_id}] open answers ({len(texts)})")
        if not texts:
            lines.append("  no data")
        for text in texts:
            lines.append(f"  - {text}")
    return "\n".join(lines) + "\n"
