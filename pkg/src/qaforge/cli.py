"""Command-line entry point: ingest, serve, render, sample, generate, score, report."""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import bibtex, nbib
from .errors import QAForgeError
from .evaluate import load_scores, score_report, loss_report
from .finetune import (
    ExperimentSpec, LoraConfig, TrainHyperParams, sample_training_set,
    build_manifest, emit_experiment_bundle, load_results,
)
from .generate import MockBackend, HttpBackend, GenParams, run_generation
from .qa import load_qa_store
from .records import dedup, export_store, load_store_any
from .service import ServiceConfig, serve
from .templates import load_template, render

BACKEND_URL_ENV = "QAFORGE_BACKEND_URL"
BACKEND_TOKEN_ENV = "QAFORGE_BACKEND_TOKEN"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qaforge")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse .bib/.nbib files into a record store")
    p.add_argument("--bibtex_files", nargs="*", default=[], metavar="PATH")
    p.add_argument("--nbib_files", nargs="*", default=[], metavar="PATH")
    p.add_argument("--output_type", choices=["yaml", "jsonl"], default="yaml")
    p.add_argument("--yaml_file", required=True, metavar="PATH",
                   help="output path (used for both yaml and jsonl)")

    p = sub.add_parser("serve", help="run the QA curation service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--file", default="qa_data.jsonl")
    p.add_argument("--records", default=None)
    p.add_argument("--static", default=None)

    p = sub.add_parser("render", help="render a prompt template")
    p.add_argument("--template", required=True,
                   help="template name ('builtin_qa' or a .tpl in --templates_dir)")
    p.add_argument("--templates_dir", default="templates")
    p.add_argument("--context", nargs="+", required=True,
                   help="key=value pairs, or one JSON object")

    p = sub.add_parser("sample", help="sample QAs and emit a fine-tune bundle")
    p.add_argument("--qa", required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--records", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", default="base-1b")
    p.add_argument("--eval_cap", type=int, default=100)

    p = sub.add_parser("generate", help="generate QA pairs from paper records")
    p.add_argument("--records", required=True)
    p.add_argument("--template", default="builtin_qa")
    p.add_argument("--templates_dir", default="templates")
    p.add_argument("--backend", choices=["mock", "http"], default="mock")
    p.add_argument("--endpoint", default=os.environ.get(BACKEND_URL_ENV, ""))
    p.add_argument("--model", default="")
    p.add_argument("--out", required=True)

    p = sub.add_parser("score", help="summarize human review scores")
    p.add_argument("--in", dest="scores", required=True)
    p.add_argument("--qa", default=None)
    p.add_argument("--report", choices=["csv", "text"], default="text")

    p = sub.add_parser("report", help="render the experiment loss table")
    p.add_argument("--results", required=True)
    p.add_argument("--format", choices=["csv", "text"], default="text")

    return parser


def _warn(warnings: list[str], verbose: int) -> None:
    if verbose:
        for w in warnings:
            print(f"warning: {w}", file=sys.stderr)


def _atomic_write(path: str | Path, write_fn) -> None:
    """Run write_fn against a temp path, then rename over the target."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    os.close(fd)
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def cmd_ingest(args) -> int:
    records = []
    warnings: list[str] = []
    for path in args.bibtex_files:
        recs, warns = bibtex.parse_bibtex(Path(path).read_text(encoding="utf-8"))
        records.extend(recs)
        warnings.extend(warns)
    for path in args.nbib_files:
        recs, warns = nbib.parse_nbib(Path(path).read_text(encoding="utf-8"))
        records.extend(recs)
        warnings.extend(warns)
    store, dedup_warnings = dedup(records)
    warnings.extend(dedup_warnings)
    _warn(warnings, args.verbose)
    _atomic_write(args.yaml_file,
                  lambda tmp: export_store(store, args.output_type, tmp))
    print(f"wrote {len(store)} records to {args.yaml_file}")
    return 0


def cmd_serve(args) -> int:
    config = ServiceConfig(host=args.host, port=args.port, qa_file=args.file,
                           records_file=args.records, static_dir=args.static)
    serve(config)
    return 0


def cmd_render(args) -> int:
    context: dict[str, str] = {}
    if len(args.context) == 1 and args.context[0].lstrip().startswith("{"):
        context = {str(k): str(v) for k, v in json.loads(args.context[0]).items()}
    else:
        for item in args.context:
            if "=" not in item:
                print(f"error: context item {item!r} is not key=value", file=sys.stderr)
                return 1
            key, _, value = item.partition("=")
            context[key] = value
    template = load_template(args.templates_dir, args.template)
    sys.stdout.write(render(template, context))
    return 0


def cmd_sample(args) -> int:
    pairs, warnings = load_qa_store(args.qa)
    store = load_store_any(args.records)
    subset = sample_training_set(pairs, args.size, args.seed)
    spec = ExperimentSpec(model_name=args.model, qa_size=args.size, seed=args.seed,
                          lora=LoraConfig(), hyper=TrainHyperParams())
    manifest, manifest_warnings = build_manifest(
        subset, store, max_token_len=spec.hyper.max_token_len)
    chosen = {id(p) for p in subset}
    held_out = [p for p in pairs if id(p) not in chosen][:args.eval_cap]
    eval_manifest, eval_warnings = build_manifest(
        held_out, store, max_token_len=spec.hyper.max_token_len)
    _warn(warnings + manifest_warnings + eval_warnings, args.verbose)
    emit_experiment_bundle(spec, manifest, args.out, eval_manifest=eval_manifest)
    print(f"bundle written to {args.out} "
          f"({len(manifest)} train, {len(eval_manifest)} eval examples)")
    return 0


def cmd_generate(args) -> int:
    store = load_store_any(args.records)
    template = load_template(args.templates_dir, args.template)
    if args.backend == "mock":
        backend = MockBackend()
    else:
        if not args.endpoint:
            print(f"error: --endpoint or {BACKEND_URL_ENV} required for the "
                  "http backend", file=sys.stderr)
            return 1
        backend = HttpBackend(args.endpoint, model=args.model,
                              token_env=BACKEND_TOKEN_ENV)
    report = run_generation(store.records, template, backend, GenParams(),
                            args.out)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_score(args) -> int:
    cards, warnings = load_scores(args.scores)
    _warn(warnings, args.verbose)
    groups: dict[str, list] = {}
    for card in cards:
        groups.setdefault(card.model or "all", []).append(card)
    sys.stdout.write(score_report(groups, fmt=args.report))
    return 0


def cmd_report(args) -> int:
    results, warnings = load_results(args.results)
    _warn(warnings, args.verbose)
    sys.stdout.write(loss_report(results, fmt=args.format))
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "serve": cmd_serve,
    "render": cmd_render,
    "sample": cmd_sample,
    "generate": cmd_generate,
    "score": cmd_score,
    "report": cmd_report,
}


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 0 for --help, 2 for usage errors; we report 1
        return 0 if e.code == 0 else 1
    try:
        return COMMANDS[args.command](args)
    except QAForgeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: IoError: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
