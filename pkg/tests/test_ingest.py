from __future__ import annotations

import gzip
import io
from collections import Counter
from datetime import datetime, timezone
from html import escape

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gencnippet.ingest import (
    DatasetSummary,
    DumpParseError,
    Language,
    RawPostRow,
    RowError,
    StageCounts,
    StageFlags,
    buffered_rows_bound,
    extract_code_blocks,
    open_posts_source,
    parse_question,
    question_from_dict,
    question_to_dict,
    read_questions,
    render_summary_table,
    stream_posts,
    summarize,
    write_questions,
)

from .conftest import dump_xml, make_question


def _question_row(id: int, tags: str = "<java>", **extra) -> dict:
    row = {
        "Id": id,
        "PostTypeId": 1,
        "Score": 3,
        "CreationDate": "2023-06-01T12:00:00.000",
        "Tags": tags,
        "Title": f"Question {id}",
        "Body": "<p>Hi</p><pre><code>x = 1</code></pre>",
    }
    row.update(extra)
    return row


# ---------------------------------------------------------------------------
# stream_posts
# ---------------------------------------------------------------------------

def test_stream_posts_yields_all_rows_in_order():
    rows = [
        _question_row(1),
        {"Id": 2, "PostTypeId": 2, "Score": 1, "Body": "<p>an answer</p>"},
        _question_row(3, tags="<python>"),
        _question_row(4),
        {"Id": 5, "PostTypeId": 2, "Score": 0, "Body": "<p>another answer</p>"},
        _question_row(6, tags="<python><pandas>"),
    ]
    stream = stream_posts(io.BytesIO(dump_xml(rows)))
    parsed = list(stream)
    assert [r.id for r in parsed] == [1, 2, 3, 4, 5, 6]
    assert all(isinstance(r, RawPostRow) for r in parsed)
    assert [r.post_type for r in parsed] == [1, 2, 1, 1, 2, 1]
    assert stream.stats.rows == 6
    assert stream.stats.errors == 0


def test_stream_posts_empty_document():
    assert list(stream_posts(io.BytesIO(b"<posts></posts>"))) == []


def test_stream_posts_missing_id_becomes_error_record():
    rows = [_question_row(1), _question_row(2), _question_row(3)]
    doc = dump_xml(rows).replace(b'<row Id="2" ', b"<row ", 1)
    items = list(stream_posts(io.BytesIO(doc)))
    good = [i for i in items if isinstance(i, RawPostRow)]
    bad = [i for i in items if isinstance(i, RowError)]
    assert [r.id for r in good] == [1, 3]
    assert len(bad) == 1
    assert bad[0].reason == "MISSING_ID"


def test_stream_posts_missing_post_type_becomes_error_record():
    doc = b'<posts><row Id="9" Score="1" /></posts>'
    items = list(stream_posts(io.BytesIO(doc)))
    assert len(items) == 1
    assert isinstance(items[0], RowError)
    assert items[0].reason == "MISSING_POST_TYPE"


def test_stream_posts_malformed_xml_reports_offset():
    doc = b'<posts><row Id="1" PostTypeId="1" /><row Id=oops /></posts>'
    with pytest.raises(DumpParseError) as excinfo:
        list(stream_posts(io.BytesIO(doc)))
    assert excinfo.value.byte_offset > 0
    assert excinfo.value.line == 1


def test_stream_posts_decodes_attribute_escaping():
    rows = [_question_row(1, Body="<pre><code>if (a &lt; b) {}</code></pre>")]
    (row,) = list(stream_posts(io.BytesIO(dump_xml(rows))))
    # quoteattr escaped the body once more; expat undoes exactly that layer.
    assert row.body_html == "<pre><code>if (a &lt; b) {}</code></pre>"


def test_stream_posts_parses_tags_and_date():
    rows = [_question_row(1, Tags="<java><arraylist>")]
    (row,) = list(stream_posts(io.BytesIO(dump_xml(rows))))
    assert row.tags == ["java", "arraylist"]
    assert row.creation_date == datetime(2023, 6, 1, 12, 0, tzinfo=timezone.utc)
    assert row.score == 3


def test_streaming_bound_holds_on_large_fixture():
    rows = [_question_row(i) for i in range(1, 10_001)]
    stream = stream_posts(io.BytesIO(dump_xml(rows)))
    count = sum(1 for _ in stream)
    assert count == 10_000
    assert 0 < stream.stats.peak_buffered <= buffered_rows_bound()


def test_open_posts_source_gzip(tmp_path):
    raw = dump_xml([_question_row(1)])
    path = tmp_path / "posts.xml.gz"
    path.write_bytes(gzip.compress(raw))
    with open_posts_source(path) as source:
        rows = list(stream_posts(source))
    assert [r.id for r in rows] == [1]


# ---------------------------------------------------------------------------
# parse_question
# ---------------------------------------------------------------------------

def _raw_row(post_type: int = 1, tags: tuple[str, ...] = ("python",), **extra) -> RawPostRow:
    defaults = dict(
        id=7,
        post_type=post_type,
        score=2,
        creation_date=datetime(2024, 1, 31, tzinfo=timezone.utc),
        tags=list(tags),
        title="t",
        body_html="<p>Hello</p><pre><code>x = 1</code></pre>",
    )
    defaults.update(extra)
    return RawPostRow(**defaults)


def test_parse_question_python_tag():
    question = parse_question(_raw_row())
    assert question is not None
    assert question.language is Language.PYTHON
    assert question.prose == "Hello"
    assert question.code_blocks == ("x = 1",)


def test_parse_question_rejects_answers():
    assert parse_question(_raw_row(post_type=2)) is None


def test_parse_question_rejects_out_of_scope_tags():
    assert parse_question(_raw_row(tags=("c#",))) is None


def test_parse_question_dual_tag_precedence_and_flag():
    row = _raw_row(tags=("python", "java"))
    by_default = parse_question(row)
    assert by_default is not None
    assert by_default.language is Language.JAVA
    assert by_default.language_ambiguous
    python_first = parse_question(row, languages=("python", "java"))
    assert python_first.language is Language.PYTHON
    assert python_first.language_ambiguous


def test_parse_question_rejects_unknown_language_argument():
    with pytest.raises(ValueError):
        parse_question(_raw_row(), languages=("rust",))


def test_parse_question_deterministic():
    row = _raw_row()
    assert parse_question(row) == parse_question(row)


# ---------------------------------------------------------------------------
# extract_code_blocks
# ---------------------------------------------------------------------------

def test_extract_simple_body():
    result = extract_code_blocks("<p>Hi</p><pre><code>x = 1</code></pre>")
    assert result.prose == "Hi"
    assert result.code_blocks == ("x = 1",)
    assert result.warnings == ()


def test_extract_no_code():
    result = extract_code_blocks("<p>no code here</p>")
    assert result.prose == "no code here"
    assert result.code_blocks == ()


def test_extract_two_blocks_in_document_order():
    body = "<p>first</p><pre><code>a()</code></pre><p>mid</p><pre><code>b()</code></pre>"
    result = extract_code_blocks(body)
    assert result.code_blocks == ("a()", "b()")
    assert result.prose == "first mid"


def test_extract_decodes_entities():
    result = extract_code_blocks("<pre><code>if (a &lt; b &amp;&amp; c &gt; d) {}</code></pre>")
    assert result.code_blocks == ("if (a < b && c > d) {}",)


def test_extract_inline_code_stays_in_prose():
    result = extract_code_blocks("<p>use <code>len(x)</code> here</p>")
    assert result.code_blocks == ()
    assert result.prose == "use len(x) here"


def test_extract_multiline_code_preserved():
    body = "<pre><code>def f():\n    return 1\n</code></pre>"
    result = extract_code_blocks(body)
    assert result.code_blocks == ("def f():\n    return 1\n",)


def test_extract_unclosed_pre_is_flagged_best_effort():
    result = extract_code_blocks("<p>text</p><pre><code>x = 1")
    assert result.code_blocks == ("x = 1",)
    assert "unclosed <pre>" in result.warnings


def test_extract_unmatched_close_is_flagged():
    result = extract_code_blocks("text</pre>more")
    assert "unmatched </pre>" in result.warnings
    assert result.prose == "text more"


_WORD = st.text(
    alphabet=st.characters(whitelist_categories=("Ll", "Lu", "Nd")),
    min_size=1,
    max_size=8,
)


@settings(max_examples=60)
@given(
    paragraphs=st.lists(st.lists(_WORD, min_size=0, max_size=8), min_size=0, max_size=4),
    codes=st.lists(
        st.text(min_size=1, max_size=40).filter(lambda s: s.strip()),
        min_size=0,
        max_size=3,
    ),
)
def test_extraction_round_trip_preserves_tokens(paragraphs, codes):
    segments = []
    expected = Counter()
    for words in paragraphs:
        segments.append("<p>" + escape(" ".join(words)) + "</p>")
        expected.update(words)
    for code in codes:
        segments.append("<pre><code>" + escape(code) + "</code></pre>")
        expected.update(code.split())
    result = extract_code_blocks("".join(segments))
    got = Counter(result.prose.split())
    for block in result.code_blocks:
        got.update(block.split())
    assert got == expected


# ---------------------------------------------------------------------------
# summarize
# ---------------------------------------------------------------------------

def test_summary_table_renders_reference_counts():
    summary = DatasetSummary(
        per_language={
            Language.JAVA: StageCounts(1_432_458, 1_295_213, 242_494),
            Language.PYTHON: StageCounts(1_939_742, 1_781_793, 316_058),
        }
    )
    table = render_summary_table(summary)
    lines = table.splitlines()
    java_row = next(line for line in lines if line.startswith("Java"))
    assert java_row == "Java   |      1,432,458 |         1,295,213 |                       242,494"
    total_row = next(line for line in lines if line.startswith("Total"))
    for value in ("3,372,200", "3,077,006", "558,552"):
        assert value in total_row
    assert summary.totals == StageCounts(3_372_200, 3_077_006, 558_552)


def test_summarize_empty_corpus_is_all_zero():
    summary = summarize([], {})
    assert summary.totals == StageCounts(0, 0, 0)
    for counts in summary.per_language.values():
        assert counts == StageCounts(0, 0, 0)


def test_summarize_matches_hand_tally():
    questions = []
    flags = {}
    # 10 questions: 6 java, 4 python with hand-assigned stage outcomes.
    outcomes = [
        (1, Language.JAVA, StageFlags(True, True, True)),
        (2, Language.JAVA, StageFlags(True, True, False)),
        (3, Language.JAVA, StageFlags(True, False, False)),
        (4, Language.JAVA, StageFlags(False, False, False)),
        (5, Language.JAVA, StageFlags(True, True, True)),
        (6, Language.JAVA, StageFlags(True, True, True)),
        (7, Language.PYTHON, StageFlags(True, True, False)),
        (8, Language.PYTHON, StageFlags(True, False, False)),
        (9, Language.PYTHON, StageFlags(True, True, True)),
        (10, Language.PYTHON, StageFlags(False, False, False)),
    ]
    for qid, lang, flag in outcomes:
        questions.append(make_question(id=qid, language=lang))
        flags[qid] = flag
    summary = summarize(questions, flags)
    assert summary.per_language[Language.JAVA] == StageCounts(5, 4, 3)
    assert summary.per_language[Language.PYTHON] == StageCounts(3, 2, 1)
    assert summary.totals == StageCounts(8, 6, 4)


def test_summarize_requires_flags_for_every_question():
    with pytest.raises(ValueError):
        summarize([make_question(id=1)], {})


def test_summarize_nested_stages_never_exceed_earlier_ones():
    # passed_quality without needs_code must not count beyond the funnel.
    questions = [make_question(id=1)]
    flags = {1: StageFlags(has_code=True, needs_code=False, passed_quality=True)}
    summary = summarize(questions, flags)
    assert summary.per_language[Language.JAVA] == StageCounts(1, 0, 0)


@given(
    st.lists(
        st.tuples(st.sampled_from(list(Language)), st.booleans(), st.booleans(), st.booleans()),
        max_size=40,
    )
)
def test_summary_totals_equal_columnwise_sums(rows):
    questions = [make_question(id=i + 1, language=lang) for i, (lang, *_rest) in enumerate(rows)]
    flags = {
        i + 1: StageFlags(has_code=a, needs_code=b, passed_quality=c)
        for i, (_lang, a, b, c) in enumerate(rows)
    }
    summary = summarize(questions, flags)
    totals = summary.totals
    assert totals.with_code == sum(c.with_code for c in summary.per_language.values())
    assert totals.needing_code == sum(c.needing_code for c in summary.per_language.values())
    assert totals.final_selected == sum(c.final_selected for c in summary.per_language.values())
    counts = summary.per_language
    for lang in Language:
        assert counts[lang].final_selected <= counts[lang].needing_code <= counts[lang].with_code


def test_summary_merge_is_associative_accumulation():
    a = DatasetSummary(per_language={Language.JAVA: StageCounts(2, 1, 1)})
    b = DatasetSummary(per_language={Language.PYTHON: StageCounts(3, 2, 0)})
    merged = a.merge(b)
    assert merged.per_language[Language.JAVA] == StageCounts(2, 1, 1)
    assert merged.per_language[Language.PYTHON] == StageCounts(3, 2, 0)
    assert merged.totals == StageCounts(5, 3, 1)


# ---------------------------------------------------------------------------
# question record files
# ---------------------------------------------------------------------------

def test_question_records_round_trip(tmp_path):
    questions = [
        make_question(id=1),
        make_question(id=2, language=Language.PYTHON, code_blocks=("a\nb", "c"), score=-1),
        make_question(id=3, prose="unicode ☃ body", language_ambiguous=True),
    ]
    path = tmp_path / "questions.ndjson"
    assert write_questions(questions, path) == 3
    assert list(read_questions(path)) == questions


def test_question_dict_round_trip():
    question = make_question(id=42, code_blocks=("x = 1\n",))
    assert question_from_dict(question_to_dict(question)) == question
