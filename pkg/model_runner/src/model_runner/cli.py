"""Command line for producing model outputs in the toolkit's wire formats.

Subcommands: chat (raw-answers JSONL), span (predictions CSV),
export-finetune (training JSON), recipe, finetune (training plan JSON).
Exit codes: 0 success, 1 data/model error, 2 usage error. Network
settings may come from MODEL_RUNNER_ENDPOINT / MODEL_RUNNER_MODEL /
MODEL_RUNNER_API_KEY.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .chat import BackendError, FixtureChatBackend, HttpChatBackend, run_chat_model
from .corpus import WireFormatError, read_documents
from .finetune import FineTuneRecipe, make_training_plan, write_finetune_dataset
from .prompts import bundled_template, load_template
from .span import GazetteerBackend, GlinerBackend, ModelLoadError, run_span_model

logger = logging.getLogger(__name__)


def _cmd_chat(args: argparse.Namespace) -> int:
    notes = read_documents(args.docs)
    template = (
        load_template(args.template, args.mode) if args.template else bundled_template(args.mode)
    )
    if args.backend == "fixture":
        if not args.answers_file:
            raise WireFormatError("--answers-file is required with the fixture backend")
        backend = FixtureChatBackend(args.answers_file)
    else:
        endpoint = args.endpoint or os.environ.get("MODEL_RUNNER_ENDPOINT")
        model = args.model or os.environ.get("MODEL_RUNNER_MODEL")
        if not endpoint or not model:
            raise WireFormatError("--endpoint and --model (or the MODEL_RUNNER_* env vars) are required")
        backend = HttpChatBackend(endpoint=endpoint, model=model)
    records = run_chat_model(notes, template, backend, args.out)
    failures = sum(1 for r in records if "error" in r)
    print(f"wrote {len(records)} answers ({failures} failed) -> {args.out}", file=sys.stderr)
    return 0


def _cmd_span(args: argparse.Namespace) -> int:
    notes = read_documents(args.docs)
    labels = [l.strip() for l in args.labels.split(",") if l.strip()]
    if args.backend == "gazetteer":
        if not args.gazetteer:
            raise WireFormatError("--gazetteer is required with the gazetteer backend")
        with open(args.gazetteer, encoding="utf-8") as f:
            backend = GazetteerBackend(json.load(f))
    else:
        backend = GlinerBackend(model_name=args.model) if args.model else GlinerBackend()
    count = run_span_model(notes, labels, backend, args.out)
    print(f"wrote {count} predictions -> {args.out}", file=sys.stderr)
    return 0


def _cmd_export_finetune(args: argparse.Namespace) -> int:
    write_finetune_dataset(args.corpus, args.out)
    print(f"wrote fine-tuning dataset -> {args.out}", file=sys.stderr)
    return 0


def _cmd_recipe(args: argparse.Namespace) -> int:
    payload = json.dumps(FineTuneRecipe().to_dict(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)
    return 0


def _cmd_finetune(args: argparse.Namespace) -> int:
    plan = make_training_plan(
        base_model=args.base_model,
        dataset_path=args.dataset,
        output_dir=args.output_dir,
    )
    payload = json.dumps(plan.to_dict(), indent=2) + "\n"
    Path(args.out).write_text(payload, encoding="utf-8")
    print(f"wrote training plan -> {args.out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ner-model-runner",
        description="Produce raw model answers and span predictions in the edition-ner wire formats.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chat", help="batch chat inference -> raw-answers JSONL")
    p.add_argument("--docs", required=True, help="documents.csv or corpus directory")
    p.add_argument("--mode", choices=["generative", "extractive"], required=True)
    p.add_argument("--out", required=True, help="raw-answers JSONL path")
    p.add_argument("--backend", choices=["http", "fixture"], default="http")
    p.add_argument("--endpoint", default=None, help="chat-completions URL (http backend)")
    p.add_argument("--model", default=None, help="model name (http backend)")
    p.add_argument("--answers-file", default=None, help="canned answers JSONL (fixture backend)")
    p.add_argument("--template", default=None, help="custom prompt template file")
    p.set_defaults(func=_cmd_chat)

    p = sub.add_parser("span", help="span-classifier inference -> predictions CSV")
    p.add_argument("--docs", required=True)
    p.add_argument("--labels", default="persona,luogo,opera", help="comma-separated entity labels")
    p.add_argument("--out", required=True)
    p.add_argument("--backend", choices=["gliner", "gazetteer"], default="gliner")
    p.add_argument("--model", default=None, help="model name (gliner backend)")
    p.add_argument("--gazetteer", default=None, help="JSON surface->label map (gazetteer backend)")
    p.set_defaults(func=_cmd_span)

    p = sub.add_parser("export-finetune", help="two-CSV corpus -> training JSON")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_finetune)

    p = sub.add_parser("recipe", help="print the fine-tuning hyperparameters")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_recipe)

    p = sub.add_parser("finetune", help="assemble a training plan for an external trainer")
    p.add_argument("--dataset", required=True, help="training JSON from export-finetune")
    p.add_argument("--base-model", default="DeepMount00/GLiNER_ITA_BASE")
    p.add_argument("--output-dir", default="finetuned-model")
    p.add_argument("--out", required=True, help="training plan JSON path")
    p.set_defaults(func=_cmd_finetune)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (WireFormatError, BackendError, ModelLoadError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
