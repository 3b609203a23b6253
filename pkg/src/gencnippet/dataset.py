"""Fine-tuning dataset construction: pair formatting, splitting, export.

Questions that survived the training filter become input/output text pairs,
get a deterministic train/validation/test label, and are written out as
JSONL plus a manifest and a flat training-configuration file for an
external trainer.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from datetime import date
from enum import Enum
from pathlib import Path

from .ingest import Language, QuestionPost

DEFAULT_RATIOS = (0.8, 0.1, 0.1)
DEFAULT_BASE_MODEL = "llama-3-8b"
RATIO_TOLERANCE = 1e-9


class Split(str, Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


# Quota order must match ratio order everywhere.
SPLIT_ORDER = (Split.TRAIN, Split.VALIDATION, Split.TEST)


@dataclass(frozen=True)
class TrainingRecord:
    question_id: int
    input_text: str
    output_text: str
    language: Language
    creation_date: date
    split: Split | None = None


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters handed to the external trainer."""

    learning_rate: float = 2e-5
    batch_size: int = 32
    epochs: int = 3
    early_stopping: bool = True
    # Stop after this many validation epochs without improvement.
    early_stopping_patience: int = 1
    loss: str = "cross_entropy"
    adapter: str = "lora"
    adapter_rank: int = 16
    adapter_alpha: int = 32
    base_model: str = DEFAULT_BASE_MODEL

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def format_input(question: QuestionPost) -> str:
    """Render the question into the exact fine-tuning input template."""
    if not question.prose.strip():
        raise ValueError(f"question {question.id} has empty prose")
    day = question.creation_date.date().isoformat()
    return (
        f"Question: {question.prose} "
        f"Language: [{question.language.display_name}] "
        f"Date: [{day}]"
    )


def format_output(code: str) -> str:
    """Render a code block into the output template, one trailing newline."""
    if not code.strip():
        raise ValueError("code block is empty")
    return f"Code: {code.rstrip(chr(10))}\n"


def build_records(questions: Iterable[QuestionPost]) -> list[TrainingRecord]:
    """Turn filtered questions into unlabelled training records.

    Questions normally carry exactly one code block; when the multi-snippet
    filter flag let several through they are joined with a blank line.
    """
    records = []
    for question in questions:
        if not question.code_blocks:
            raise ValueError(f"question {question.id} has no code block")
        code = "\n\n".join(block.rstrip("\n") for block in question.code_blocks)
        records.append(
            TrainingRecord(
                question_id=question.id,
                input_text=format_input(question),
                output_text=format_output(code),
                language=question.language,
                creation_date=question.creation_date.date(),
            )
        )
    return records


def _split_key(seed: int, question_id: int) -> str:
    return hashlib.blake2b(f"{seed}:{question_id}".encode()).hexdigest()


def _quotas(total: int, ratios: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment; each quota within 1 of total*ratio."""
    exact = [total * r for r in ratios]
    counts = [int(x) for x in exact]
    leftover = total - sum(counts)
    by_remainder = sorted(
        range(len(ratios)), key=lambda i: (exact[i] - counts[i], -i), reverse=True
    )
    for i in by_remainder[:leftover]:
        counts[i] += 1
    return counts


def _validate_ratios(ratios: Sequence[float]) -> None:
    if len(ratios) != len(SPLIT_ORDER):
        raise ValueError(f"expected {len(SPLIT_ORDER)} ratios, got {len(ratios)}")
    if any(r < 0 for r in ratios):
        raise ValueError("ratios must be non-negative")
    if abs(sum(ratios) - 1.0) > RATIO_TOLERANCE:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)!r}")


def split_records(
    records: Sequence[TrainingRecord],
    seed: int,
    ratios: Sequence[float] = DEFAULT_RATIOS,
) -> list[TrainingRecord]:
    """Label records with train/validation/test splits.

    The assignment is stratified by language.  Within a stratum, ids are
    ordered by a keyed hash of (seed, id) and sliced into largest-remainder
    quotas, so the outcome depends only on the stratum's id set and the
    seed: reordering the input or adding records of other languages never
    moves an existing record.
    """
    _validate_ratios(ratios)
    seen: set[int] = set()
    for record in records:
        if record.question_id in seen:
            raise ValueError(f"duplicate question id {record.question_id}")
        seen.add(record.question_id)

    assignment: dict[int, Split] = {}
    by_language: dict[Language, list[int]] = {}
    for record in records:
        by_language.setdefault(record.language, []).append(record.question_id)
    for ids in by_language.values():
        ordered = sorted(ids, key=lambda qid: (_split_key(seed, qid), qid))
        quotas = _quotas(len(ordered), ratios)
        start = 0
        for split, quota in zip(SPLIT_ORDER, quotas):
            for qid in ordered[start : start + quota]:
                assignment[qid] = split
            start += quota

    return [
        dataclasses.replace(record, split=assignment[record.question_id])
        for record in records
    ]


def record_to_dict(record: TrainingRecord) -> dict:
    if record.split is None:
        raise ValueError(f"record {record.question_id} is unlabelled")
    return {
        "input": record.input_text,
        "output": record.output_text,
        "meta": {
            "id": record.question_id,
            "language": record.language.value,
            "date": record.creation_date.isoformat(),
            "split": record.split.value,
        },
    }


def record_from_dict(payload: dict) -> TrainingRecord:
    meta = payload["meta"]
    return TrainingRecord(
        question_id=meta["id"],
        input_text=payload["input"],
        output_text=payload["output"],
        language=Language(meta["language"]),
        creation_date=date.fromisoformat(meta["date"]),
        split=Split(meta["split"]),
    )


def export_jsonl(records: Sequence[TrainingRecord], out_dir: str | Path) -> dict:
    """Write one JSONL file per split plus manifest.json; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    buckets: dict[Split, list[TrainingRecord]] = {split: [] for split in SPLIT_ORDER}
    for record in records:
        if record.split is None:
            raise ValueError(f"record {record.question_id} is unlabelled")
        buckets[record.split].append(record)

    files = {}
    for split in SPLIT_ORDER:
        path = out / f"{split.value}.jsonl"
        try:
            with path.open("w", encoding="utf-8") as handle:
                for record in buckets[split]:
                    handle.write(json.dumps(record_to_dict(record)) + "\n")
        except OSError as exc:
            raise OSError(f"failed writing {path}: {exc}") from exc
        files[split.value] = path.name

    languages: dict[str, int] = {}
    for record in records:
        languages[record.language.value] = languages.get(record.language.value, 0) + 1
    manifest = {
        "total": len(records),
        "counts": {split.value: len(buckets[split]) for split in SPLIT_ORDER},
        "languages": dict(sorted(languages.items())),
        "files": files,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    return manifest


def load_training_records(path: str | Path) -> list[TrainingRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                records.append(record_from_dict(json.loads(line)))
    return records


def render_training_config(config: TrainingConfig) -> str:
    """Flat `key = value` lines, sorted by key, for the trainer to consume."""
    config.validate()
    pairs = dataclasses.asdict(config)
    lines = []
    for key in sorted(pairs):
        value = pairs[key]
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def emit_training_config(
    path: str | Path, base_model: str = DEFAULT_BASE_MODEL, **overrides
) -> TrainingConfig:
    """Write the training configuration file and return the config used."""
    config = TrainingConfig(base_model=base_model, **overrides)
    Path(path).write_text(render_training_config(config), encoding="utf-8")
    return config
