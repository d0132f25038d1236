"""Command-line entry point: ingest -> stats -> filter -> split -> postprocess -> evaluate.

Exit codes: 0 success, 1 data/validation error, 2 usage error. Diagnostics
go to stderr; data goes to files or stdout. Configuration precedence is
flags > environment (network settings only) > config file > defaults, and
the effective configuration is echoed into JSON outputs for provenance.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from fractions import Fraction
from pathlib import Path

from . import ingest, tagged
from .finetune import write_finetune_dataset
from .ingest import (
    CorpusLoadError,
    DEFAULT_LINK_RULES,
    FetchError,
    SplitSpec,
    StatusError,
    corpus_stats,
    export_corpus,
    filter_training_notes,
    import_corpus,
    load_link_rules,
    parse_note_html,
    split_train_val,
    stats_to_dict,
)
from .model import Corpus, CorpusError, EntityType, dedupe_predictions
from .scoring import MatchMode, evaluate, render_report, report_to_dict
from .tagged import postprocess_answer, read_raw_answers, write_diagnostics, write_predictions

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://digitalzibaldone.net/node/"
DEFAULT_DELAY_MS = 1000
DEFAULT_RETRIES = 3

_PAGE_ID_RE = re.compile(r"^p\d+(_\d+)?$")


class UsageError(ValueError):
    pass


def parse_page_spec(spec: str) -> list[tuple[str, bool]]:
    """Expand a page spec into (note id, required) pairs.

    Accepts comma-separated note ids (p2721_1) and inclusive ranges over
    page numbers (p2700_1..p3000, expanded as p<n>_1). Range-derived ids
    are not required to exist: a 404 skips them with a warning, whereas a
    missing explicitly listed id is an error. Ids mentioned more than
    once are fetched once, in first-appearance order; any explicit
    mention makes the id required.
    """
    required: dict[str, bool] = {}
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        if ".." in token:
            lo_raw, _, hi_raw = token.partition("..")
            lo_raw, hi_raw = lo_raw.strip(), hi_raw.strip()
            for endpoint in (lo_raw, hi_raw):
                if not _PAGE_ID_RE.match(endpoint):
                    raise UsageError(f"invalid page id {endpoint!r} in range {token!r}")
            lo = int(lo_raw[1:].split("_")[0])
            hi = int(hi_raw[1:].split("_")[0])
            if lo > hi:
                raise UsageError(f"descending range {token!r}")
            for n in range(lo, hi + 1):
                required.setdefault(f"p{n}_1", False)
        else:
            if not _PAGE_ID_RE.match(token):
                raise UsageError(f"invalid page id {token!r}")
            page_id = token if "_" in token else token + "_1"
            required[page_id] = True
    if not required:
        raise UsageError("empty page spec")
    return list(required.items())


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as f:
            config = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return config


def _resolve(flag_value, env_name: str | None, config: dict, config_key: str, default, cast=lambda x: x):
    if flag_value is not None:
        return flag_value
    if env_name and os.environ.get(env_name):
        return cast(os.environ[env_name])
    if config_key in config:
        return cast(config[config_key])
    return default


def _emit(payload: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)


# --- subcommands -------------------------------------------------------------


def _cmd_ingest(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    base_url = _resolve(args.base_url, "EDITION_NER_BASE_URL", config, "base_url", DEFAULT_BASE_URL)
    delay_ms = _resolve(args.delay_ms, "EDITION_NER_DELAY_MS", config, "delay_ms", DEFAULT_DELAY_MS, int)
    retries = _resolve(args.retries, "EDITION_NER_RETRIES", config, "retries", DEFAULT_RETRIES, int)
    if args.rules:
        with open(args.rules, encoding="utf-8") as f:
            rules = load_link_rules(json.load(f))
    elif "rules" in config:
        rules = load_link_rules(config["rules"])
    else:
        rules = list(DEFAULT_LINK_RULES)
    page_spec = args.pages or config.get("pages")
    if not page_spec:
        raise UsageError("no pages given: pass --pages or put a 'pages' entry in the config file")
    if isinstance(page_spec, list):
        page_spec = ",".join(page_spec)
    pages = parse_page_spec(page_spec)
    if not base_url.endswith("/"):
        base_url += "/"

    documents = []
    annotations = []
    for page_id, required in pages:
        uri = base_url + page_id
        try:
            html = ingest.fetch_note(uri, politeness_ms=delay_ms, retries=retries)
        except StatusError as exc:
            if exc.status == 404 and not required:
                logger.warning("skipping %s: not found", uri)
                continue
            raise
        doc, anns = parse_note_html(html, doc_id=uri, rules=rules)
        documents.append(doc)
        annotations.extend(anns)
    corpus = Corpus(documents, annotations)
    export_corpus(corpus, args.out)
    print(
        f"ingested {len(corpus.documents)} documents, {len(corpus.annotations)} annotations -> {args.out}",
        file=sys.stderr,
    )
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    corpus = import_corpus(args.corpus)
    stats = corpus_stats(corpus)
    if args.format == "json":
        payload = {"config": {"corpus": args.corpus}, "stats": stats_to_dict(stats)}
        _emit(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", args.out)
    else:
        lines = [f"documents          {stats.documents}"]
        for t in EntityType:
            lines.append(f"{t.value:<19}{stats.per_type[t]}")
        lines.append(f"total annotations  {stats.total_annotations}")
        lines.append(
            f"tokens min/median/max  {stats.token_min}/{stats.token_median:g}/{stats.token_max}"
        )
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_filter(args: argparse.Namespace) -> int:
    corpus = import_corpus(args.corpus)
    filtered = filter_training_notes(corpus, max_tokens=args.max_tokens, min_annotations=args.min_annotations)
    export_corpus(filtered, args.out)
    print(
        f"kept {len(filtered.documents)}/{len(corpus.documents)} documents, "
        f"{len(filtered.annotations)} annotations -> {args.out}",
        file=sys.stderr,
    )
    return 0


def _cmd_split(args: argparse.Namespace) -> int:
    corpus = import_corpus(args.corpus)
    try:
        ratio = Fraction(args.ratio)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"invalid ratio {args.ratio!r}: {exc}") from exc
    train, val = split_train_val(corpus, SplitSpec(train_fraction=ratio, seed=args.seed))
    export_corpus(train, args.train_out)
    export_corpus(val, args.val_out)
    print(
        f"split {len(corpus.documents)} documents into {len(train.documents)} train / "
        f"{len(val.documents)} validation (seed={args.seed})",
        file=sys.stderr,
    )
    return 0


def _cmd_postprocess(args: argparse.Namespace) -> int:
    docs_path = Path(args.docs)
    if docs_path.is_dir():
        docs_path = docs_path / ingest.DOCUMENTS_CSV
    documents = {d.doc_id: d for d in ingest.read_documents_csv(docs_path)}
    answers = read_raw_answers(args.answers)
    unknown = sorted({a.doc_id for a in answers} - set(documents))
    if unknown:
        raise CorpusLoadError("raw answers reference unknown documents: " + ", ".join(unknown))
    outcomes = {}
    predictions = []
    for record in answers:
        outcome = postprocess_answer(record.answer, record.mode, documents[record.doc_id])
        outcomes[record.doc_id] = outcome
        predictions.extend(outcome.aligned)
    predictions = dedupe_predictions(predictions)
    predictions.sort(key=lambda p: (p.doc_id, p.start_pos, p.end_pos, p.etype.value))
    write_predictions(predictions, args.out)
    if args.diagnostics:
        write_diagnostics(outcomes, args.diagnostics)
    print(f"wrote {len(predictions)} predictions -> {args.out}", file=sys.stderr)
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    gold = import_corpus(args.gold)
    preds = dedupe_predictions(tagged.read_predictions(args.pred))
    mode = MatchMode(args.mode)
    report = evaluate(gold, preds, mode)
    if args.format == "json":
        payload = {
            "config": {"gold": args.gold, "pred": args.pred, "mode": args.mode},
            "report": report_to_dict(report),
        }
        _emit(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", args.out)
    else:
        _emit(render_report(report, args.format), args.out)
    return 0


def _cmd_export_finetune(args: argparse.Namespace) -> int:
    corpus = import_corpus(args.corpus)
    write_finetune_dataset(corpus, args.out)
    print(f"wrote fine-tuning dataset ({len(corpus.documents)} records) -> {args.out}", file=sys.stderr)
    return 0


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edition-ner",
        description="Standoff NER corpora from digital editions: ingest, post-process model answers, score.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="scrape note pages and build the two-CSV corpus")
    p.add_argument("--pages", default=None, help="note ids and ranges, e.g. p2721_1,p2700_1..p3000")
    p.add_argument("--out", required=True, help="output corpus directory")
    p.add_argument("--base-url", default=None)
    p.add_argument("--delay-ms", type=int, default=None, help="politeness delay between requests")
    p.add_argument("--retries", type=int, default=None)
    p.add_argument("--rules", default=None, help="JSON file with link classification rules")
    p.add_argument("--config", default=None, help="JSON config file")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("stats", help="per-class annotation counts and token lengths")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("filter", help="keep short documents with at least one annotation")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-tokens", type=int, default=350)
    p.add_argument("--min-annotations", type=int, default=1)
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("split", help="deterministic document-level train/validation split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--train-out", required=True)
    p.add_argument("--val-out", required=True)
    p.add_argument("--ratio", default="9/10")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("postprocess", help="raw-answers JSONL -> predictions CSV (+ diagnostics)")
    p.add_argument("--answers", required=True, help="raw-answers JSON Lines file")
    p.add_argument("--docs", required=True, help="corpus directory or documents.csv")
    p.add_argument("--out", required=True, help="predictions CSV path")
    p.add_argument("--diagnostics", default=None, help="JSONL of unaligned/dropped entities")
    p.set_defaults(func=_cmd_postprocess)

    p = sub.add_parser("evaluate", help="score predictions against a gold corpus")
    p.add_argument("--gold", required=True, help="gold corpus directory")
    p.add_argument("--pred", required=True, help="predictions CSV")
    p.add_argument("--mode", choices=["exact", "fuzzy"], default="exact")
    p.add_argument("--format", choices=["json", "text-table", "csv"], default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("export-finetune", help="emit the fine-tuning training JSON")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_finetune)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits 2
        return 2  # unreachable, keeps type checkers happy
    except (CorpusError, CorpusLoadError, FetchError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
