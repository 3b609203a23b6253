"""Automatic relevance metrics and study math.

BLEU, ROUGE-L, and the embedding-based score are implemented directly from
their definitions so results do not depend on third-party metric packages.
Also here: Cochran sample-size math, Likert aggregation for the expert
review, corpus-level reporting, and the wild-test export.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import statistics
import warnings
from collections import Counter
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import httpx
import numpy as np

from .ingest import QuestionPost

TokenSequence = Sequence[str]
Embedder = Callable[[TokenSequence], np.ndarray]

EPSILON = 1e-9
DEFAULT_MAX_N = 4
STACKOVERFLOW_QUESTION_URL = "https://stackoverflow.com/questions/{id}"

# Two-sided normal critical values for the supported confidence levels.
Z_TABLE = {0.90: 1.645, 0.95: 1.96, 0.99: 2.576}


class EmbedderError(Exception):
    """The embedder returned unusable vectors or failed outright."""


# ---------------------------------------------------------------------------
# tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"[A-Za-z_][A-Za-z0-9_]*"  # identifiers and keywords
    r"|\d+\.\d+|\d+"  # numeric literals
    r"|==|!=|<=|>=|->|=>|\+\+|--|&&|\|\||<<|>>|::|\+=|-=|\*=|/=|%=|\*\*|//"
    r"|\S"  # any other single non-space character
)


def tokenize_code(text: str) -> list[str]:
    """Language-agnostic lexical split; identifiers and numbers stay whole,
    multi-character operators stay together, case is preserved."""
    return _TOKEN_RE.findall(text)


# ---------------------------------------------------------------------------
# BLEU
# ---------------------------------------------------------------------------

class Smoothing(str, Enum):
    NONE = "none"
    ADD_EPSILON = "add_epsilon"


def _ngram_counts(tokens: TokenSequence, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(
    candidate: TokenSequence,
    reference: TokenSequence,
    max_n: int = DEFAULT_MAX_N,
    smoothing: Smoothing = Smoothing.ADD_EPSILON,
) -> float:
    """Sentence-level BLEU: geometric mean of modified n-gram precisions
    up to max_n, times the brevity penalty exp(min(0, 1 - |r|/|c|)).

    The order is capped at the shorter sequence length so that precisions
    stay defined on short pairs; identical sequences always score 1.
    """
    if not reference:
        raise ValueError("reference token sequence is empty")
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    if not candidate:
        warnings.warn("BLEU candidate is empty; scoring 0", RuntimeWarning, stacklevel=2)
        return 0.0
    smoothing = Smoothing(smoothing)

    effective_n = min(max_n, len(candidate), len(reference))
    log_sum = 0.0
    for n in range(1, effective_n + 1):
        cand_counts = _ngram_counts(candidate, n)
        total = sum(cand_counts.values())
        ref_counts = _ngram_counts(reference, n)
        matched = sum(
            min(count, ref_counts[gram]) for gram, count in cand_counts.items()
        )
        if matched == 0 or total == 0:
            if smoothing is Smoothing.NONE:
                return 0.0
            precision = EPSILON
        else:
            precision = matched / total
        log_sum += math.log(precision)

    brevity = math.exp(min(0.0, 1.0 - len(reference) / len(candidate)))
    return brevity * math.exp(log_sum / effective_n)


# ---------------------------------------------------------------------------
# ROUGE-L
# ---------------------------------------------------------------------------

class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _lcs_length(a: TokenSequence, b: TokenSequence) -> int:
    # Two rows suffice; LCS is symmetric so keep the inner row short.
    if len(b) > len(a):
        a, b = b, a
    previous = [0] * (len(b) + 1)
    for token in a:
        current = [0]
        for j, other in enumerate(b, start=1):
            if token == other:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_l(candidate: TokenSequence, reference: TokenSequence) -> PRF:
    """ROUGE-L with symmetric F: P = LCS/|c|, R = LCS/|r|."""
    if not candidate or not reference:
        raise ValueError("ROUGE-L requires nonempty candidate and reference")
    lcs = _lcs_length(candidate, reference)
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    return PRF(precision, recall, _f1(precision, recall))


# ---------------------------------------------------------------------------
# embedding score
# ---------------------------------------------------------------------------

def _unit_rows(tokens: TokenSequence, embedder: Embedder, side: str) -> np.ndarray:
    try:
        vectors = np.asarray(embedder(list(tokens)), dtype=float)
    except EmbedderError:
        raise
    except Exception as exc:
        raise EmbedderError(f"embedder failed on {side} tokens: {exc}") from exc
    if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
        raise EmbedderError(
            f"embedder returned shape {vectors.shape} for {len(tokens)} {side} tokens"
        )
    norms = np.linalg.norm(vectors, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise EmbedderError(f"embedder produced a zero vector for {side} token {zero[0]}")
    return vectors / norms[:, None]


def embedding_score(
    candidate: TokenSequence, reference: TokenSequence, embedder: Embedder
) -> PRF:
    """Greedy max-cosine matching; negative similarities count as 0."""
    if not candidate or not reference:
        raise ValueError("embedding score requires nonempty candidate and reference")
    cand = _unit_rows(candidate, embedder, "candidate")
    ref = _unit_rows(reference, embedder, "reference")
    similarity = np.clip(cand @ ref.T, 0.0, None)
    precision = float(similarity.max(axis=1).mean())
    recall = float(similarity.max(axis=0).mean())
    return PRF(precision, recall, _f1(precision, recall))


class HashingEmbedder:
    """Deterministic offline embedder: each token seeds a fixed gaussian."""

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def __call__(self, tokens: TokenSequence) -> np.ndarray:
        rows = np.empty((len(tokens), self.dim))
        for i, token in enumerate(tokens):
            digest = hashlib.blake2b(
                f"{self.seed}:{token}".encode("utf-8"), digest_size=8
            ).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "big"))
            rows[i] = rng.standard_normal(self.dim)
        return rows


class OneHotEmbedder:
    """Orthogonal embeddings over an explicit vocabulary."""

    def __init__(self, vocabulary: Sequence[str]):
        self.index = {token: i for i, token in enumerate(dict.fromkeys(vocabulary))}

    @classmethod
    def for_pair(cls, candidate: TokenSequence, reference: TokenSequence) -> OneHotEmbedder:
        return cls(list(candidate) + list(reference))

    def __call__(self, tokens: TokenSequence) -> np.ndarray:
        rows = np.zeros((len(tokens), max(len(self.index), 1)))
        for i, token in enumerate(tokens):
            if token not in self.index:
                raise EmbedderError(f"token {token!r} not in the one-hot vocabulary")
            rows[i, self.index[token]] = 1.0
        return rows


class RemoteEmbedder:
    """Adapter for an embeddings endpoint speaking the common JSON shape."""

    def __init__(
        self,
        endpoint_url: str,
        model_id: str,
        api_key: str | None = None,
        timeout: float = 30.0,
        client: httpx.Client | None = None,
    ):
        self.endpoint_url = endpoint_url
        self.model_id = model_id
        self.api_key = api_key
        self._client = client or httpx.Client(timeout=timeout)

    def __call__(self, tokens: TokenSequence) -> np.ndarray:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = self._client.post(
                self.endpoint_url,
                json={"model": self.model_id, "input": list(tokens)},
                headers=headers,
            )
        except httpx.HTTPError as exc:
            raise EmbedderError(f"embedding request failed: {exc}") from exc
        if response.status_code != 200:
            raise EmbedderError(
                f"embedding endpoint returned {response.status_code}: "
                f"{response.text[:200]}"
            )
        try:
            data = response.json()["data"]
            return np.asarray([item["embedding"] for item in data], dtype=float)
        except (ValueError, LookupError, TypeError) as exc:
            raise EmbedderError(f"malformed embedding payload: {exc}") from exc

    def close(self) -> None:
        self._client.close()


# ---------------------------------------------------------------------------
# study math
# ---------------------------------------------------------------------------

def required_sample_size(
    confidence: float, margin: float, population: int | None = None
) -> int:
    """Cochran sample size at p=0.5, with finite-population correction."""
    if confidence not in Z_TABLE:
        raise ValueError(
            f"confidence must be one of {sorted(Z_TABLE)}, got {confidence}"
        )
    if not 0 < margin < 1:
        raise ValueError(f"margin must be in (0, 1), got {margin}")
    z = Z_TABLE[confidence]
    n0 = z * z * 0.25 / (margin * margin)
    if population is not None:
        if population < 1:
            raise ValueError("population must be >= 1")
        n0 = n0 / (1 + (n0 - 1) / population)
    return math.ceil(n0)


@dataclass(frozen=True)
class LikertRating:
    sample_id: str
    rater_id: str
    clarity: int
    relevance: int

    def __post_init__(self):
        for name in ("clarity", "relevance"):
            value = getattr(self, name)
            if value not in (1, 2, 3, 4, 5):
                raise ValueError(f"{name} must be an integer 1..5, got {value!r}")


LIKERT_DIMENSIONS = ("clarity", "relevance")


@dataclass(frozen=True)
class DimensionStats:
    mean: float
    median: float
    distribution: dict[int, int]


@dataclass(frozen=True)
class AgreementStats:
    exact_pct: float
    within_one_pct: float
    shared_samples: int


@dataclass(frozen=True)
class LikertSummary:
    stats: dict[str, DimensionStats]
    agreement: dict[str, AgreementStats | None]
    rating_count: int


def aggregate_likert(ratings: Sequence[LikertRating]) -> LikertSummary:
    """Per-dimension stats plus inter-rater agreement over shared samples."""
    stats: dict[str, DimensionStats] = {}
    agreement: dict[str, AgreementStats | None] = {}
    for dimension in LIKERT_DIMENSIONS:
        values = [getattr(r, dimension) for r in ratings]
        if values:
            distribution = {level: values.count(level) for level in range(1, 6)}
            stats[dimension] = DimensionStats(
                mean=statistics.fmean(values),
                median=statistics.median(values),
                distribution=distribution,
            )
        else:
            stats[dimension] = DimensionStats(0.0, 0.0, {level: 0 for level in range(1, 6)})

        by_sample: dict[str, list[int]] = {}
        for rating in ratings:
            by_sample.setdefault(rating.sample_id, []).append(getattr(rating, dimension))
        exact = within = pairs = 0
        shared = 0
        for values in by_sample.values():
            if len(values) < 2:
                continue
            shared += 1
            for i in range(len(values)):
                for j in range(i + 1, len(values)):
                    pairs += 1
                    if values[i] == values[j]:
                        exact += 1
                    if abs(values[i] - values[j]) <= 1:
                        within += 1
        if pairs:
            agreement[dimension] = AgreementStats(
                exact_pct=100.0 * exact / pairs,
                within_one_pct=100.0 * within / pairs,
                shared_samples=shared,
            )
        else:
            agreement[dimension] = None
    return LikertSummary(stats=stats, agreement=agreement, rating_count=len(ratings))


# ---------------------------------------------------------------------------
# corpus evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvalPair:
    id: str
    candidate: str
    reference: str


@dataclass(frozen=True)
class EvalConfig:
    max_n: int = DEFAULT_MAX_N
    smoothing: Smoothing = Smoothing.ADD_EPSILON
    embedder: Embedder | None = None

    def resolve_embedder(self) -> Embedder:
        return self.embedder if self.embedder is not None else HashingEmbedder()

    def describe(self) -> dict:
        embedder = self.resolve_embedder()
        return {
            "max_n": self.max_n,
            "smoothing": self.smoothing.value,
            "embedder": type(embedder).__name__,
        }


PAIR_COLUMNS = ("bleu", "rouge_l_p", "rouge_l_r", "rouge_l_f", "emb_p", "emb_r", "emb_f")


@dataclass(frozen=True)
class PairScores:
    id: str
    bleu: float
    rouge_l_p: float
    rouge_l_r: float
    rouge_l_f: float
    emb_p: float
    emb_r: float
    emb_f: float


@dataclass(frozen=True)
class PairFailure:
    id: str
    reason: str


@dataclass(frozen=True)
class MetricReport:
    per_pair: list[PairScores]
    corpus: dict[str, float] | None
    config: dict
    failures: list[PairFailure] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "per_pair": [vars(row) for row in self.per_pair],
            "corpus": self.corpus,
            "config": self.config,
            "failures": [vars(f) for f in self.failures],
            "excluded": len(self.failures),
        }


def score_pair(pair: EvalPair, config: EvalConfig) -> PairScores:
    candidate = tokenize_code(pair.candidate)
    reference = tokenize_code(pair.reference)
    if not reference:
        raise ValueError("reference has no tokens")
    if not candidate:
        raise ValueError("candidate has no tokens")
    bleu_score = bleu(candidate, reference, config.max_n, config.smoothing)
    rouge = rouge_l(candidate, reference)
    emb = embedding_score(candidate, reference, config.resolve_embedder())
    return PairScores(
        id=pair.id,
        bleu=bleu_score,
        rouge_l_p=rouge.precision,
        rouge_l_r=rouge.recall,
        rouge_l_f=rouge.f1,
        emb_p=emb.precision,
        emb_r=emb.recall,
        emb_f=emb.f1,
    )


def evaluate_corpus(pairs: Sequence[EvalPair], config: EvalConfig | None = None) -> MetricReport:
    """Score every pair; failures are recorded and excluded from the means.

    Corpus values are macro averages (arithmetic mean of per-pair scores).
    """
    config = config or EvalConfig()
    rows: list[PairScores] = []
    failures: list[PairFailure] = []
    for pair in pairs:
        try:
            rows.append(score_pair(pair, config))
        except (ValueError, EmbedderError) as exc:
            failures.append(PairFailure(id=pair.id, reason=str(exc)))
    corpus = None
    if rows:
        corpus = {
            column: statistics.fmean(getattr(row, column) for row in rows)
            for column in PAIR_COLUMNS
        }
    return MetricReport(
        per_pair=rows, corpus=corpus, config=config.describe(), failures=failures
    )


def render_metric_report(report: MetricReport) -> str:
    """Aligned text table with one row per pair and a corpus mean row."""
    if not report.per_pair:
        return "no data (0 pairs scored)"
    id_width = max(len("id"), *(len(row.id) for row in report.per_pair), len("MEAN"))
    header = " | ".join(["id".ljust(id_width)] + [c.rjust(9) for c in PAIR_COLUMNS])
    lines = [header, "-" * len(header)]
    for row in report.per_pair:
        cells = [row.id.ljust(id_width)]
        cells += [f"{getattr(row, column):9.6f}" for column in PAIR_COLUMNS]
        lines.append(" | ".join(cells))
    mean_cells = ["MEAN".ljust(id_width)]
    mean_cells += [f"{report.corpus[column]:9.6f}" for column in PAIR_COLUMNS]
    lines.append("-" * len(header))
    lines.append(" | ".join(mean_cells))
    if report.failures:
        lines.append(f"excluded {len(report.failures)} pair(s) with errors")
    return "\n".join(lines)


def load_pairs(path: str | Path) -> list[EvalPair]:
    pairs = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            payload = json.loads(line)
            pairs.append(
                EvalPair(
                    id=str(payload["id"]),
                    candidate=payload["candidate"],
                    reference=payload["reference"],
                )
            )
    return pairs


# ---------------------------------------------------------------------------
# wild-test export
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DraftSnippet:
    snippet: str
    prompt: str


@dataclass(frozen=True)
class WildEntry:
    question_id: int
    url: str
    snippet: str
    prompt: str


def export_wild_test_batch(
    questions: Sequence[QuestionPost],
    drafts: Mapping[int, DraftSnippet],
    destination: str | Path,
    k: int = 50,
) -> list[WildEntry]:
    """Write a reviewable batch of suggested edits; no network access."""
    for question in questions:
        if question.code_blocks:
            raise ValueError(f"question {question.id} already contains code")
    eligible = [q for q in questions if q.id in drafts]
    if len(eligible) < k:
        warnings.warn(
            f"only {len(eligible)} eligible questions for a batch of {k}",
            RuntimeWarning,
            stacklevel=2,
        )
    entries = [
        WildEntry(
            question_id=question.id,
            url=STACKOVERFLOW_QUESTION_URL.format(id=question.id),
            snippet=drafts[question.id].snippet,
            prompt=drafts[question.id].prompt,
        )
        for question in eligible[:k]
    ]
    with Path(destination).open("w", encoding="utf-8") as handle:
        for entry in entries:
            handle.write(json.dumps(vars(entry)) + "\n")
    return entries


def load_wild_batch(path: str | Path) -> list[WildEntry]:
    entries = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                entries.append(WildEntry(**json.loads(line)))
    return entries
