"""Stream-parse Stack Exchange data-dump Posts files into question records.

A dump Posts file is a single top-level element whose children are
self-closing ``row`` elements carrying the post as XML attributes
(``Id``, ``PostTypeId``, ``Score``, ``CreationDate``, ``Tags``, ``Title``,
``Body``).  Dump files are multi-gigabyte, so parsing is incremental: the
file is fed to expat in fixed-size chunks and rows are handed to the caller
as soon as a chunk is digested.  At most ``buffered_rows_bound(chunk_size)``
rows are ever held in memory, independent of file size.

The ``Body`` attribute is XML-escaped HTML; expat undoes the attribute
escaping, and :func:`extract_code_blocks` then separates the HTML into plain
prose and displayed code blocks (``<pre>`` containers only; inline
``<code>`` spans stay in the prose).
"""

from __future__ import annotations

import bz2
import gzip
import json
import re
import xml.parsers.expat
from collections import deque
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from html.parser import HTMLParser
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, Mapping, Sequence

DEFAULT_CHUNK_SIZE = 64 * 1024

# The smallest input that can complete a row element is "<row/>" (6 bytes),
# so one fed chunk can finish at most chunk_size // 6 buffered rows.
MIN_ROW_WIRE_BYTES = 6

_TAG_RE = re.compile(r"<([^<>]+)>")

# Tags that imply a rendering break; their boundaries become whitespace in
# the extracted prose.  Inline tags (b, i, code, a, ...) contribute nothing.
_BLOCK_TAGS = frozenset(
    {"p", "div", "br", "hr", "li", "ul", "ol", "blockquote", "pre",
     "table", "tr", "td", "th", "h1", "h2", "h3", "h4", "h5", "h6"}
)


class Language(str, Enum):
    JAVA = "java"
    PYTHON = "python"

    @property
    def display_name(self) -> str:
        """Capitalized form used in model-facing templates ("Java", "Python")."""
        return self.value.capitalize()


#: Question tags that select a supported language, in default precedence order.
LANGUAGE_BY_TAG: dict[str, Language] = {
    "java": Language.JAVA,
    "python": Language.PYTHON,
}

DEFAULT_LANGUAGES: tuple[str, ...] = ("java", "python")


class DumpParseError(Exception):
    """Malformed XML in a dump file; carries the failure position."""

    def __init__(self, message: str, byte_offset: int, line: int) -> None:
        super().__init__(f"{message} (byte offset {byte_offset}, line {line})")
        self.byte_offset = byte_offset
        self.line = line


@dataclass(frozen=True)
class RawPostRow:
    """One dump row, attributes decoded but body still HTML."""

    id: int
    post_type: int
    score: int
    creation_date: datetime
    tags: list[str]
    title: str | None
    body_html: str


@dataclass(frozen=True)
class RowError:
    """A row that could not be turned into a :class:`RawPostRow`."""

    reason: str
    line: int
    detail: str = ""


@dataclass(frozen=True)
class QuestionPost:
    id: int
    title: str
    prose: str
    code_blocks: tuple[str, ...]
    language: Language
    score: int
    creation_date: datetime
    language_ambiguous: bool = False


@dataclass
class StreamStats:
    rows: int = 0
    errors: int = 0
    peak_buffered: int = 0


def buffered_rows_bound(chunk_size: int = DEFAULT_CHUNK_SIZE) -> int:
    """Upper bound on rows held in memory while streaming with this chunk size."""
    return chunk_size // MIN_ROW_WIRE_BYTES + 1


_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def _parse_creation_date(value: str | None) -> datetime:
    if not value:
        return _EPOCH
    parsed = datetime.fromisoformat(value)
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed


def _row_from_attrs(attrs: Mapping[str, str], line: int) -> RawPostRow | RowError:
    raw_id = attrs.get("Id")
    if raw_id is None:
        return RowError(reason="MISSING_ID", line=line)
    raw_type = attrs.get("PostTypeId")
    if raw_type is None:
        return RowError(reason="MISSING_POST_TYPE", line=line, detail=f"Id={raw_id}")
    try:
        post_id = int(raw_id)
        post_type = int(raw_type)
    except ValueError:
        return RowError(reason="BAD_INTEGER", line=line, detail=f"Id={raw_id!r}")
    if post_id <= 0:
        return RowError(reason="NON_POSITIVE_ID", line=line, detail=f"Id={raw_id}")
    try:
        score = int(attrs.get("Score", "0"))
    except ValueError:
        score = 0
    tags = [t.lower() for t in _TAG_RE.findall(attrs.get("Tags", ""))]
    return RawPostRow(
        id=post_id,
        post_type=post_type,
        score=score,
        creation_date=_parse_creation_date(attrs.get("CreationDate")),
        tags=tags,
        title=attrs.get("Title"),
        body_html=attrs.get("Body", ""),
    )


class PostStream:
    """Iterable over a dump Posts byte stream.

    Yields :class:`RawPostRow` for every parseable ``row`` element in file
    order (all post types; filtering is the caller's job) and
    :class:`RowError` for rows missing mandatory attributes.  Raises
    :class:`DumpParseError` on malformed XML.  ``stats.peak_buffered`` records
    the largest number of rows held between chunk feeds.
    """

    def __init__(self, source: BinaryIO, chunk_size: int = DEFAULT_CHUNK_SIZE) -> None:
        self._source = source
        self._chunk_size = chunk_size
        self.stats = StreamStats()

    def __iter__(self) -> Iterator[RawPostRow | RowError]:
        parser = xml.parsers.expat.ParserCreate()
        pending: deque[RawPostRow | RowError] = deque()

        def handle_start(name: str, attrs: dict[str, str]) -> None:
            if name == "row":
                pending.append(_row_from_attrs(attrs, parser.CurrentLineNumber))

        parser.StartElementHandler = handle_start

        while True:
            chunk = self._source.read(self._chunk_size)
            try:
                parser.Parse(chunk, not chunk)
            except xml.parsers.expat.ExpatError as exc:
                raise DumpParseError(
                    str(exc),
                    byte_offset=parser.ErrorByteIndex,
                    line=parser.ErrorLineNumber,
                ) from exc
            if len(pending) > self.stats.peak_buffered:
                self.stats.peak_buffered = len(pending)
            while pending:
                item = pending.popleft()
                if isinstance(item, RowError):
                    self.stats.errors += 1
                else:
                    self.stats.rows += 1
                yield item
            if not chunk:
                return


def stream_posts(source: BinaryIO, chunk_size: int = DEFAULT_CHUNK_SIZE) -> PostStream:
    return PostStream(source, chunk_size=chunk_size)


def open_posts_source(path: str | Path) -> BinaryIO:
    """Open a Posts file, transparently decompressing .gz/.bz2 members."""
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rb")  # type: ignore[return-value]
    if path.suffix == ".bz2":
        return bz2.open(path, "rb")  # type: ignore[return-value]
    return path.open("rb")


class _BodySplitter(HTMLParser):
    """Separates an HTML post body into prose text and <pre> code blocks."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.prose_parts: list[str] = []
        self.code_blocks: list[str] = []
        self.warnings: list[str] = []
        self._pre_depth = 0
        self._code_parts: list[str] = []

    def _break(self) -> None:
        if self._pre_depth > 0:
            self._code_parts.append("\n")
        else:
            self.prose_parts.append("\n")

    def handle_starttag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        if tag == "pre":
            if self._pre_depth == 0:
                self._code_parts = []
            self._pre_depth += 1
        elif tag in ("br", "hr"):
            self._break()
        elif tag in _BLOCK_TAGS and self._pre_depth == 0:
            self.prose_parts.append("\n")

    def handle_startendtag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        if tag in _BLOCK_TAGS:
            self._break()

    def handle_endtag(self, tag: str) -> None:
        if tag == "pre":
            if self._pre_depth == 0:
                self.warnings.append("unmatched </pre>")
                self.prose_parts.append("\n")
                return
            self._pre_depth -= 1
            if self._pre_depth == 0:
                self.code_blocks.append("".join(self._code_parts))
        elif tag in _BLOCK_TAGS and self._pre_depth == 0:
            self.prose_parts.append("\n")

    def handle_data(self, data: str) -> None:
        if self._pre_depth > 0:
            self._code_parts.append(data)
        else:
            self.prose_parts.append(data)

    def finish(self) -> None:
        self.close()
        if self._pre_depth > 0:
            # Unclosed <pre>: keep what was captured rather than dropping it.
            self.warnings.append("unclosed <pre>")
            self.code_blocks.append("".join(self._code_parts))
            self._pre_depth = 0


@dataclass(frozen=True)
class ExtractedBody:
    prose: str
    code_blocks: tuple[str, ...]
    warnings: tuple[str, ...]


def extract_code_blocks(body_html: str) -> ExtractedBody:
    """Split an HTML body into whitespace-normalized prose and ordered code blocks.

    Code blocks are the text contents of ``<pre>`` containers (HTML entities
    decoded); everything else, inline ``<code>`` spans included, becomes
    prose.  Unbalanced markup is extracted best-effort and reported in
    ``warnings``.
    """
    splitter = _BodySplitter()
    splitter.feed(body_html)
    splitter.finish()
    prose = " ".join("".join(splitter.prose_parts).split())
    return ExtractedBody(
        prose=prose,
        code_blocks=tuple(splitter.code_blocks),
        warnings=tuple(splitter.warnings),
    )


def parse_question(
    row: RawPostRow,
    languages: Sequence[str] = DEFAULT_LANGUAGES,
) -> QuestionPost | None:
    """Turn a raw row into a QuestionPost, or None if it is not a question
    in one of the requested languages.

    ``languages`` is an ordered sequence of tag names; when a post carries
    more than one of them the earliest entry wins and the result is flagged
    ambiguous.
    """
    for tag in languages:
        if tag not in LANGUAGE_BY_TAG:
            raise ValueError(f"unsupported language tag: {tag!r}")
    if row.post_type != 1:
        return None
    present = [tag for tag in languages if tag in row.tags]
    if not present:
        return None
    matched = {LANGUAGE_BY_TAG[tag] for tag in present}
    extracted = extract_code_blocks(row.body_html)
    return QuestionPost(
        id=row.id,
        title=row.title or "",
        prose=extracted.prose,
        code_blocks=extracted.code_blocks,
        language=LANGUAGE_BY_TAG[present[0]],
        score=row.score,
        creation_date=row.creation_date,
        language_ambiguous=len(matched) > 1,
    )


# --------------------------------------------------------------------------
# Funnel summary
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StageFlags:
    """Per-question funnel outcomes; later stages only count when nested in
    the earlier ones."""

    has_code: bool
    needs_code: bool = False
    passed_quality: bool = False


@dataclass(frozen=True)
class StageCounts:
    with_code: int = 0
    needing_code: int = 0
    final_selected: int = 0

    def __add__(self, other: "StageCounts") -> "StageCounts":
        return StageCounts(
            self.with_code + other.with_code,
            self.needing_code + other.needing_code,
            self.final_selected + other.final_selected,
        )


@dataclass
class DatasetSummary:
    """Per-language funnel counts plus derived totals."""

    per_language: dict[Language, StageCounts] = field(
        default_factory=lambda: {lang: StageCounts() for lang in Language}
    )

    @property
    def totals(self) -> StageCounts:
        total = StageCounts()
        for counts in self.per_language.values():
            total = total + counts
        return total

    def merge(self, other: "DatasetSummary") -> "DatasetSummary":
        merged = {}
        for lang in Language:
            merged[lang] = self.per_language.get(lang, StageCounts()) + other.per_language.get(
                lang, StageCounts()
            )
        return DatasetSummary(per_language=merged)

    def to_dict(self) -> dict[str, dict[str, int]]:
        out: dict[str, dict[str, int]] = {}
        for lang in Language:
            counts = self.per_language.get(lang, StageCounts())
            out[lang.value] = {
                "with_code": counts.with_code,
                "needing_code": counts.needing_code,
                "final_selected": counts.final_selected,
            }
        totals = self.totals
        out["total"] = {
            "with_code": totals.with_code,
            "needing_code": totals.needing_code,
            "final_selected": totals.final_selected,
        }
        return out


def summarize(
    questions: Iterable[QuestionPost],
    flags: Mapping[int, StageFlags],
) -> DatasetSummary:
    """Accumulate funnel counts per language; every question must have flags."""
    buckets = {lang: [0, 0, 0] for lang in Language}
    for question in questions:
        try:
            stage = flags[question.id]
        except KeyError:
            raise ValueError(f"no stage flags for question {question.id}") from None
        counts = buckets[question.language]
        if stage.has_code:
            counts[0] += 1
            if stage.needs_code:
                counts[1] += 1
                if stage.passed_quality:
                    counts[2] += 1
    return DatasetSummary(
        per_language={lang: StageCounts(*counts) for lang, counts in buckets.items()}
    )


SUMMARY_HEADERS: tuple[tuple[str, str], ...] = (
    ("Questions with", "Code Snippets"),
    ("Questions Needing", "Code Snippets"),
    ("Questions with Positive Score", "and Single Code Snippet"),
)

GENERATION_SUMMARY_HEADERS: tuple[tuple[str, str], ...] = (
    ("Questions without", "Code Snippets"),
    ("Questions Needing", "Code Snippets"),
    ("Questions Selected", "for Generation"),
)


def render_summary_table(
    summary: DatasetSummary,
    headers: tuple[tuple[str, str], ...] = SUMMARY_HEADERS,
) -> str:
    """Render the funnel as an aligned three-column text table."""
    rows: list[tuple[str, StageCounts]] = [
        (lang.display_name, summary.per_language.get(lang, StageCounts()))
        for lang in Language
    ]
    rows.append(("Total", summary.totals))

    label_width = max(len(label) for label, _ in rows)
    formatted = [
        (label, [f"{c:,}" for c in (counts.with_code, counts.needing_code, counts.final_selected)])
        for label, counts in rows
    ]
    widths = [
        max(len(headers[i][0]), len(headers[i][1]), max(len(r[1][i]) for r in formatted))
        for i in range(3)
    ]
    lines = [
        " " * label_width + " | " + " | ".join(h[0].ljust(widths[i]) for i, h in enumerate(headers)),
        " " * label_width + " | " + " | ".join(h[1].ljust(widths[i]) for i, h in enumerate(headers)),
        "-" * label_width + "-+-" + "-+-".join("-" * w for w in widths),
    ]
    for label, cells in formatted:
        lines.append(
            label.ljust(label_width) + " | " + " | ".join(c.rjust(widths[i]) for i, c in enumerate(cells))
        )
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Question record files (one JSON object per line)
# --------------------------------------------------------------------------

def question_to_dict(question: QuestionPost) -> dict:
    return {
        "id": question.id,
        "title": question.title,
        "prose": question.prose,
        "code_blocks": list(question.code_blocks),
        "language": question.language.value,
        "score": question.score,
        "creation_date": question.creation_date.isoformat(),
        "language_ambiguous": question.language_ambiguous,
    }


def question_from_dict(data: Mapping) -> QuestionPost:
    return QuestionPost(
        id=int(data["id"]),
        title=data.get("title", ""),
        prose=data["prose"],
        code_blocks=tuple(data.get("code_blocks", ())),
        language=Language(data["language"]),
        score=int(data.get("score", 0)),
        creation_date=_parse_creation_date(data.get("creation_date")),
        language_ambiguous=bool(data.get("language_ambiguous", False)),
    )


def write_questions(questions: Iterable[QuestionPost], path: str | Path) -> int:
    count = 0
    with Path(path).open("w", encoding="utf-8") as out:
        for question in questions:
            out.write(json.dumps(question_to_dict(question), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_questions(path: str | Path) -> Iterator[QuestionPost]:
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield question_from_dict(json.loads(line))


def with_language(question: QuestionPost, language: Language) -> QuestionPost:
    """Copy of the question with a different language label."""
    return replace(question, language=language)
