from __future__ import annotations

from datetime import datetime, timezone
from xml.sax.saxutils import quoteattr

import pytest

from gencnippet.ingest import Language, QuestionPost


def dump_xml(rows: list[dict]) -> bytes:
    """Serialize attribute dicts as a dump Posts document."""
    parts = ['<?xml version="1.0" encoding="utf-8"?>', "<posts>"]
    for attrs in rows:
        attr_str = " ".join(f"{key}={quoteattr(str(value))}" for key, value in attrs.items())
        parts.append(f"  <row {attr_str} />")
    parts.append("</posts>")
    return "\n".join(parts).encode("utf-8")


def make_question(
    id: int = 1,
    title: str = "How to sort?",
    prose: str = "How to sort?",
    code_blocks: tuple[str, ...] = ("x = 1",),
    language: Language = Language.JAVA,
    score: int = 5,
    creation_date: datetime | None = None,
    language_ambiguous: bool = False,
) -> QuestionPost:
    return QuestionPost(
        id=id,
        title=title,
        prose=prose,
        code_blocks=code_blocks,
        language=language,
        score=score,
        creation_date=creation_date or datetime(2023, 6, 1, 12, 0, tzinfo=timezone.utc),
        language_ambiguous=language_ambiguous,
    )


@pytest.fixture
def question_factory():
    return make_question
