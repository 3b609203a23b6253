"""Command line entry point wiring the pipeline modules into subcommands.

Results go to stdout or the requested output files; logs go to stderr.
Exit codes: 0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .backends import (
    BackendConfig,
    BackendError,
    BackendKind,
    GenerationRequest,
    RecordingBackend,
    ReplayStore,
    open_backend,
)
from .config import ConfigError, load_config
from .dataset import (
    build_records,
    emit_training_config,
    export_jsonl,
    load_training_records,
    split_records,
)
from .evaluation import (
    DraftSnippet,
    EvalConfig,
    Smoothing,
    evaluate_corpus,
    export_wild_test_batch,
    load_pairs,
    render_metric_report,
)
from .filtering import (
    DEFAULT_MODEL,
    FilterMode,
    load_model,
    run_filter,
    write_decisions,
)
from .ingest import (
    GENERATION_SUMMARY_HEADERS,
    SUMMARY_HEADERS,
    DumpParseError,
    Language,
    RowError,
    open_posts_source,
    parse_question,
    read_questions,
    render_summary_table,
    stream_posts,
    write_questions,
)
from .prompts import PromptError, PromptSpec, render_prompt, select_exemplars
from .survey import (
    load_raw_responses,
    render_survey_report,
    summarize_survey,
    validate_responses,
)

logger = logging.getLogger("gencnippet.cli")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    """Raised by the parser instead of exiting, so dispatch owns exit codes."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _language(value: str) -> Language:
    try:
        return Language(value.lower())
    except ValueError:
        raise UsageError(f"unsupported language {value!r}; expected java or python") from None


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    languages = tuple(name.strip().lower() for name in args.languages.split(",") if name.strip())
    for name in languages:
        _language(name)
    questions = []
    with open_posts_source(args.posts) as source:
        stream = stream_posts(source, chunk_size=args.chunk_size)
        for item in stream:
            if isinstance(item, RowError):
                logger.warning("row %d skipped: %s", item.line, item.reason)
                continue
            question = parse_question(item, languages)
            if question is not None:
                questions.append(question)
    count = write_questions(questions, args.out)
    per_language = {name: 0 for name in languages}
    for question in questions:
        per_language[question.language.value] += 1
    logger.info("ingest: %d rows, %d row errors, %d questions kept",
                stream.stats.rows, stream.stats.errors, count)
    print(json.dumps({
        "rows": stream.stats.rows,
        "row_errors": stream.stats.errors,
        "questions": count,
        "per_language": per_language,
        "out": str(args.out),
    }))
    return EXIT_OK


def cmd_filter(args) -> int:
    model = load_model(args.model) if args.model else DEFAULT_MODEL
    mode = FilterMode(args.mode)
    questions = list(read_questions(args.infile))
    selected, decisions, summary = run_filter(
        questions, model, mode, allow_multi_snippet=args.allow_multi_snippet
    )
    write_questions(selected, args.out)
    if args.decisions:
        write_decisions(decisions, args.decisions)
    headers = SUMMARY_HEADERS if mode is FilterMode.TRAINING else GENERATION_SUMMARY_HEADERS
    logger.info("filter: %d in, %d selected", len(questions), len(selected))
    print(render_summary_table(summary, headers), end="")
    return EXIT_OK


def cmd_dataset(args) -> int:
    questions = read_questions(args.infile)
    records = build_records(questions)
    labelled = split_records(records, seed=args.seed)
    manifest = export_jsonl(labelled, args.out_dir)
    emit_training_config(Path(args.out_dir) / "training_config.txt")
    logger.info("dataset: %d records split and exported to %s", manifest["total"], args.out_dir)
    print(json.dumps(manifest))
    return EXIT_OK


def _build_spec(args) -> PromptSpec:
    description = _read_text(args.description_file).strip()
    constraints = None
    if getattr(args, "constraints_file", None):
        constraints = _read_text(args.constraints_file).strip() or None
    spec = PromptSpec(
        problem_description=description,
        language=_language(args.language),
        constraints=constraints,
    )
    shots = getattr(args, "shots", 0)
    if shots:
        if not args.pool:
            raise UsageError("--shots requires --pool")
        pool = load_training_records(args.pool)
        exemplars = select_exemplars(pool, spec, k=shots, seed=args.seed)
        spec = dataclasses.replace(spec, exemplars=tuple(exemplars))
    return spec


def cmd_prompt(args) -> int:
    spec = _build_spec(args)
    print(render_prompt(spec, args.profile, max_exemplars=max(args.shots, 3)))
    return EXIT_OK


def cmd_generate(args) -> int:
    config = load_config(args.config)
    backend_config = config.backend
    patch = {}
    if args.backend:
        patch["kind"] = BackendKind(args.backend)
    if args.model_id:
        patch["model_id"] = args.model_id
    if args.endpoint_url:
        patch["endpoint_url"] = args.endpoint_url
    if args.replay_dir:
        patch["replay_dir"] = args.replay_dir
    if patch:
        backend_config = dataclasses.replace(backend_config, **patch)
    backend_config.validate()

    spec = _build_spec(args)
    prompt = render_prompt(spec, args.profile, max_exemplars=max(args.shots, 3))
    backend = open_backend(backend_config)
    if args.record_dir:
        backend = RecordingBackend(backend, ReplayStore(args.record_dir))
    try:
        result = backend.generate(GenerationRequest(prompt=prompt, language=spec.language))
    finally:
        backend.close()
    logger.info(
        "generate: model=%s latency=%.3fs tokens=%s",
        result.model_id,
        result.latency,
        result.token_counts,
    )
    print(result.code)
    return EXIT_OK


_SMOOTHING_ALIASES = {
    "eps": Smoothing.ADD_EPSILON,
    "add_epsilon": Smoothing.ADD_EPSILON,
    "none": Smoothing.NONE,
}


def cmd_eval(args) -> int:
    pairs = load_pairs(args.pairs)
    config = EvalConfig(max_n=args.bleu_n, smoothing=_SMOOTHING_ALIASES[args.smoothing])
    report = evaluate_corpus(pairs, config)
    if args.out:
        Path(args.out).write_text(
            json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        logger.info("eval: wrote %s", args.out)
    for failure in report.failures:
        logger.warning("pair %s not scored: %s", failure.id, failure.reason)
    print(render_metric_report(report))
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import run_server

    config = load_config(args.config)
    if args.port is not None:
        config = dataclasses.replace(
            config, server=dataclasses.replace(config.server, port=args.port)
        )
    logger.info("serving on %s:%d", config.server.host, config.server.port)
    run_server(config)
    return EXIT_OK


def cmd_survey_report(args) -> int:
    records = load_raw_responses(args.responses)
    included, excluded = validate_responses(records)
    report = summarize_survey(included)
    text = render_survey_report(report)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    structured = {
        "report": report.to_dict(),
        "exclusions": [
            {"respondent_id": e.respondent_id, "reason": e.reason, "detail": e.detail}
            for e in excluded
        ],
    }
    (out_dir / "report.json").write_text(
        json.dumps(structured, indent=2) + "\n", encoding="utf-8"
    )
    (out_dir / "report.txt").write_text(text + "\n", encoding="utf-8")
    logger.info(
        "survey-report: %d included, %d excluded, written to %s",
        len(included), len(excluded), out_dir,
    )
    print(text)
    return EXIT_OK


def cmd_wild_export(args) -> int:
    questions = list(read_questions(args.questions))
    drafts = {}
    with Path(args.drafts).open("r", encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            payload = json.loads(line)
            try:
                drafts[int(payload["question_id"])] = DraftSnippet(
                    snippet=payload["snippet"], prompt=payload.get("prompt", "")
                )
            except KeyError as exc:
                raise ValueError(f"draft record missing {exc} field") from None
    entries = export_wild_test_batch(questions, drafts, args.out, k=args.k)
    logger.info("wild-export: %d entries written to %s", len(entries), args.out)
    print(json.dumps({"entries": len(entries), "out": str(args.out)}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="gencnippet", description=__doc__)
    parser.add_argument("--version", action="version", version=f"gencnippet {__version__}")
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="stderr logging level",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("ingest", help="parse a posts dump into question records")
    p.add_argument("--posts", required=True, help="Posts XML file (.xml, .xml.gz, .xml.bz2)")
    p.add_argument("--languages", default="java,python", help="comma-separated tag list")
    p.add_argument("--out", required=True, help="question records file (JSONL)")
    p.add_argument("--chunk-size", type=int, default=64 * 1024)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("filter", help="run the code-need classifier and quality gates")
    p.add_argument("--in", dest="infile", required=True, help="question records file")
    p.add_argument("--model", help="classifier parameter file; default built-in weights")
    p.add_argument("--mode", choices=[m.value for m in FilterMode], default="training")
    p.add_argument("--out", required=True, help="selected question records file")
    p.add_argument("--decisions", help="per-question decision log (JSONL)")
    p.add_argument("--allow-multi-snippet", action="store_true")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("dataset", help="format, split, and export training records")
    p.add_argument("--in", dest="infile", required=True, help="filtered question records")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_dataset)

    def add_prompt_args(p):
        p.add_argument("--description-file", required=True)
        p.add_argument("--language", required=True)
        p.add_argument("--constraints-file")
        p.add_argument("--shots", type=int, default=0)
        p.add_argument("--pool", help="training records used as exemplars (JSONL)")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--profile", choices=["instruct", "finetuned"], default="instruct")

    p = sub.add_parser("prompt", help="print the generation prompt")
    add_prompt_args(p)
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("generate", help="generate a snippet through a backend")
    add_prompt_args(p)
    p.add_argument("--config", help="pipeline config file")
    p.add_argument("--backend", choices=[k.value for k in BackendKind])
    p.add_argument("--model-id")
    p.add_argument("--endpoint-url")
    p.add_argument("--replay-dir")
    p.add_argument("--record-dir", help="record responses for later replay")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="score candidate/reference pairs")
    p.add_argument("--pairs", required=True, help="JSONL of {id, candidate, reference}")
    p.add_argument("--bleu-n", type=int, default=4)
    p.add_argument("--smoothing", choices=sorted(_SMOOTHING_ALIASES), default="eps")
    p.add_argument("--out", help="structured report file (JSON)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the generation HTTP service")
    p.add_argument("--config", help="pipeline config file")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("survey-report", help="validate and summarize survey responses")
    p.add_argument("--responses", required=True, help="raw responses (JSONL)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_survey_report)

    p = sub.add_parser("wild-export", help="export a suggested-edit review batch")
    p.add_argument("--questions", required=True, help="code-lacking question records")
    p.add_argument("--drafts", required=True, help="JSONL of {question_id, snippet, prompt}")
    p.add_argument("--out", required=True, help="batch file (JSONL)")
    p.add_argument("--k", type=int, default=50)
    p.set_defaults(func=cmd_wild_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"gencnippet: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, args.log_level),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        logger.error("%s", exc)
        return EXIT_VALIDATION
    except (ConfigError, PromptError, DumpParseError) as exc:
        logger.error("%s", exc)
        return EXIT_VALIDATION
    except ValueError as exc:
        logger.error("invalid input: %s", exc)
        return EXIT_VALIDATION
    except BackendError as exc:
        logger.error("backend failure: %s", exc)
        return EXIT_RUNTIME
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
