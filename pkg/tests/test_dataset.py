from __future__ import annotations

import hashlib
import json
import math
import random
from datetime import date, datetime, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gencnippet.dataset import (
    DEFAULT_RATIOS,
    Split,
    TrainingConfig,
    TrainingRecord,
    build_records,
    emit_training_config,
    export_jsonl,
    format_input,
    format_output,
    load_training_records,
    record_from_dict,
    record_to_dict,
    render_training_config,
    split_records,
)
from gencnippet.ingest import Language

from .conftest import make_question


def make_record(qid, language=Language.JAVA, split=None):
    return TrainingRecord(
        question_id=qid,
        input_text=f"Question: q{qid} Language: [Java] Date: [2023-06-01]",
        output_text="Code: x = 1\n",
        language=language,
        creation_date=date(2023, 6, 1),
        split=split,
    )


def oracle_assignments(ids, seed, ratios=DEFAULT_RATIOS):
    """Independent restatement of the id-hash split rule."""
    ordered = sorted(
        ids, key=lambda q: (hashlib.blake2b(f"{seed}:{q}".encode()).hexdigest(), q)
    )
    exact = [len(ids) * r for r in ratios]
    counts = [math.floor(x) for x in exact]
    leftover = len(ids) - sum(counts)
    ranked = sorted(range(3), key=lambda i: (exact[i] - counts[i], -i), reverse=True)
    for i in ranked[:leftover]:
        counts[i] += 1
    labels = {}
    position = 0
    for name, count in zip(("train", "validation", "test"), counts):
        for qid in ordered[position : position + count]:
            labels[qid] = name
        position += count
    return labels


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------

def test_format_input_java_example():
    question = make_question()
    assert (
        format_input(question)
        == "Question: How to sort? Language: [Java] Date: [2023-06-01]"
    )


def test_format_input_python_date():
    question = make_question(
        language=Language.PYTHON,
        creation_date=datetime(2024, 1, 31, 12, 30, tzinfo=timezone.utc),
    )
    assert format_input(question).endswith("Language: [Python] Date: [2024-01-31]")


def test_format_input_deterministic():
    question = make_question()
    assert format_input(question) == format_input(question)


def test_format_input_rejects_empty_prose():
    with pytest.raises(ValueError):
        format_input(make_question(prose="   "))


def test_format_output_adds_single_trailing_newline():
    assert format_output("x = 1") == "Code: x = 1\n"
    assert format_output("x = 1\n\n") == "Code: x = 1\n"


def test_format_output_preserves_body_bytes():
    body = "def f():\n    return 1  # tab\t end"
    assert format_output(body) == f"Code: {body}\n"


def test_format_output_rejects_blank_code():
    with pytest.raises(ValueError):
        format_output(" \n ")


@given(st.text(min_size=1).filter(lambda s: s.strip()))
def test_distinct_prose_yields_distinct_inputs(prose):
    base = make_question(prose="How to sort?")
    other = make_question(prose=" ".join(prose.split()) or "alt")
    if base.prose != other.prose:
        assert format_input(base) != format_input(other)


def test_build_records_single_block():
    records = build_records([make_question()])
    assert records[0].output_text == "Code: x = 1\n"
    assert records[0].split is None
    assert records[0].creation_date == date(2023, 6, 1)


def test_build_records_joins_multiple_blocks():
    question = make_question(code_blocks=("a = 1\n", "b = 2"))
    records = build_records([question])
    assert records[0].output_text == "Code: a = 1\n\nb = 2\n"


def test_build_records_requires_code():
    with pytest.raises(ValueError):
        build_records([make_question(code_blocks=())])


# ---------------------------------------------------------------------------
# splitting
# ---------------------------------------------------------------------------

def test_split_exact_quotas_for_divisible_count():
    records = [make_record(i) for i in range(1, 1001)]
    labelled = split_records(records, seed=42)
    counts = {split: 0 for split in Split}
    for record in labelled:
        counts[record.split] += 1
    assert counts[Split.TRAIN] == 800
    assert counts[Split.VALIDATION] == 100
    assert counts[Split.TEST] == 100


def test_split_is_order_independent():
    records = [make_record(i) for i in range(1, 201)]
    shuffled = records[:]
    random.Random(7).shuffle(shuffled)
    direct = {r.question_id: r.split for r in split_records(records, seed=11)}
    again = {r.question_id: r.split for r in split_records(shuffled, seed=11)}
    assert direct == again


def test_split_matches_independent_hash_oracle():
    records = [make_record(i) for i in (3, 14, 15, 92, 65, 35, 89, 79, 32, 38)]
    labelled = split_records(records, seed=5)
    expected = oracle_assignments([r.question_id for r in records], seed=5)
    assert {r.question_id: r.split.value for r in labelled} == expected


def test_split_rejects_duplicate_ids():
    with pytest.raises(ValueError):
        split_records([make_record(1), make_record(1)], seed=0)


def test_split_rejects_bad_ratios():
    with pytest.raises(ValueError):
        split_records([make_record(1)], seed=0, ratios=(0.5, 0.2, 0.2))


def test_split_stratum_unaffected_by_other_language():
    java = [make_record(i) for i in range(1, 51)]
    python = [make_record(i, language=Language.PYTHON) for i in range(1000, 1030)]
    before = {r.question_id: r.split for r in split_records(java, seed=9)}
    merged = split_records(java + python, seed=9)
    after = {r.question_id: r.split for r in merged if r.language is Language.JAVA}
    assert before == after


@given(st.integers(min_value=0, max_value=300), st.integers(min_value=0, max_value=2**32))
def test_split_partitions_within_one_of_quota(count, seed):
    records = [make_record(i + 1) for i in range(count)]
    labelled = split_records(records, seed=seed)
    assert len(labelled) == count
    tally = {split: 0 for split in Split}
    for record in labelled:
        assert record.split is not None
        tally[record.split] += 1
    for split, ratio in zip((Split.TRAIN, Split.VALIDATION, Split.TEST), DEFAULT_RATIOS):
        assert abs(tally[split] - count * ratio) <= 1 + 1e-9


def test_split_changes_with_seed():
    records = [make_record(i) for i in range(1, 101)]
    one = {r.question_id: r.split for r in split_records(records, seed=1)}
    two = {r.question_id: r.split for r in split_records(records, seed=2)}
    assert one != two


# ---------------------------------------------------------------------------
# export and load
# ---------------------------------------------------------------------------

def test_export_round_trips(tmp_path):
    records = split_records([make_record(i) for i in range(1, 4)], seed=3)
    manifest = export_jsonl(records, tmp_path)
    assert manifest["total"] == 3
    assert sum(manifest["counts"].values()) == 3
    loaded = []
    for name in ("train", "validation", "test"):
        loaded.extend(load_training_records(tmp_path / f"{name}.jsonl"))
    assert sorted(loaded, key=lambda r: r.question_id) == records


def test_export_escapes_embedded_newlines(tmp_path):
    record = TrainingRecord(
        question_id=1,
        input_text="Question: q Language: [Java] Date: [2023-06-01]",
        output_text="Code: line1\nline2\n",
        language=Language.JAVA,
        creation_date=date(2023, 6, 1),
        split=Split.TRAIN,
    )
    export_jsonl([record], tmp_path)
    raw = (tmp_path / "train.jsonl").read_text(encoding="utf-8")
    assert raw.count("\n") == 1
    assert load_training_records(tmp_path / "train.jsonl") == [record]


def test_export_empty_records(tmp_path):
    manifest = export_jsonl([], tmp_path)
    assert manifest["counts"] == {"train": 0, "validation": 0, "test": 0}
    assert (tmp_path / "validation.jsonl").read_text() == ""
    on_disk = json.loads((tmp_path / "manifest.json").read_text())
    assert on_disk == manifest


def test_export_rejects_unlabelled_records(tmp_path):
    with pytest.raises(ValueError):
        export_jsonl([make_record(1)], tmp_path)


@given(st.text(min_size=1).filter(lambda s: s.strip()))
def test_record_dict_round_trip_arbitrary_code(code):
    record = TrainingRecord(
        question_id=7,
        input_text="Question: q Language: [Python] Date: [2024-01-31]",
        output_text=format_output(code),
        language=Language.PYTHON,
        creation_date=date(2024, 1, 31),
        split=Split.TEST,
    )
    assert record_from_dict(json.loads(json.dumps(record_to_dict(record)))) == record


# ---------------------------------------------------------------------------
# training configuration
# ---------------------------------------------------------------------------

def test_training_config_defaults():
    config = TrainingConfig()
    assert config.learning_rate == 2e-5
    assert config.batch_size == 32
    assert config.epochs == 3
    assert config.early_stopping is True
    assert config.early_stopping_patience == 1
    assert config.loss == "cross_entropy"
    assert config.adapter == "lora"
    assert (config.adapter_rank, config.adapter_alpha) == (16, 32)


def test_emit_training_config_defaults(tmp_path):
    path = tmp_path / "train.cfg"
    emit_training_config(path)
    text = path.read_text()
    assert "learning_rate = 2e-05" in text
    assert "batch_size = 32" in text
    assert "epochs = 3" in text
    assert "early_stopping = true" in text


def test_emit_training_config_override(tmp_path):
    path = tmp_path / "train.cfg"
    config = emit_training_config(path, epochs=1)
    assert config.epochs == 1
    assert config.batch_size == 32
    assert "epochs = 1" in path.read_text()


def test_emit_training_config_deterministic(tmp_path):
    first = tmp_path / "a.cfg"
    second = tmp_path / "b.cfg"
    emit_training_config(first, base_model="m")
    emit_training_config(second, base_model="m")
    assert first.read_bytes() == second.read_bytes()


def test_training_config_validation():
    with pytest.raises(ValueError):
        render_training_config(TrainingConfig(learning_rate=0.0))
    with pytest.raises(ValueError):
        render_training_config(TrainingConfig(epochs=0))
