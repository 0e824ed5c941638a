"""Command line entry point.

Subcommands cover the full workflow: ingest datasets, build a meaning
index, translate task batches, judge results, export and import human
evaluations, serve the annotation API, and render the Markdown report.

Settings resolve as flags > config file > defaults; the YAML config file
mirrors the flag names (nested under `retrieval`, `llm`, `embedding`).
Secrets (API keys) are only ever read from environment variables by the
HTTP clients themselves.

Exit codes: 0 success, 1 fatal error, 2 usage error, 3 completed with
per-item failures (an errors file is written next to the output).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import yaml

from . import __version__
from .embedding import HashedTrigramEmbedder, RemoteEmbeddingProvider
from .errors import IdiomAlignError
from .kb import (
    LANGUAGE_NAMES,
    build_knowledge_base,
    entries_to_jsonl,
    load_entries_jsonl,
    parse_idiom_records,
)
from .pipeline import (
    HttpLlmClient,
    PipelineConfig,
    ScriptedLlmClient,
    config_digest,
    load_results_jsonl,
    load_tasks_jsonl,
    results_to_jsonl,
    run_batch,
)
from .retrieval import RetrievalConfig, build_meaning_index, load_index, save_index
from .evaluation import (
    export_human_tasks,
    import_human_scores,
    judge_batch,
    load_score_records,
    load_task_payloads,
    markdown_report,
    score_records_to_jsonl,
    tasks_to_json,
)
from .evaluation.server import EvalState, effective_score_rows, serve_forever

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 3


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ValueError(f"config file {path} must contain a mapping")
    return raw


def _cfg(config: Mapping, dotted: str, default: Any = None) -> Any:
    node: Any = config
    for part in dotted.split("."):
        if not isinstance(node, Mapping) or part not in node:
            return default
        node = node[part]
    return node


def _pick(flag: Any, config: Mapping, dotted: str, default: Any, cast: Callable) -> Any:
    if flag is not None:
        return flag
    from_file = _cfg(config, dotted)
    if from_file is not None:
        return cast(from_file)
    return default


def _pipeline_config(args: argparse.Namespace, config: Mapping) -> PipelineConfig:
    retrieval = RetrievalConfig(
        threshold=_pick(getattr(args, "threshold", None), config, "retrieval.threshold", 0.7, float),
        k=_pick(getattr(args, "k", None), config, "retrieval.k", 4, int),
    )
    return PipelineConfig(
        retrieval=retrieval,
        translation_temperature=_pick(
            getattr(args, "translation_temperature", None),
            config,
            "translation_temperature",
            0.7,
            float,
        ),
        judge_temperature=_pick(
            getattr(args, "judge_temperature", None), config, "judge_temperature", 0.1, float
        ),
        max_llm_retries=_pick(
            getattr(args, "max_llm_retries", None), config, "max_llm_retries", 3, int
        ),
        max_lia_candidates=_pick(
            getattr(args, "max_lia_candidates", None), config, "max_lia_candidates", 3, int
        ),
    )


def _make_embedder(spec: str, args: argparse.Namespace, config: Mapping):
    """`test[:dim]` for the offline hashed embedder, `remote:<model>` for HTTP."""
    kind, _, rest = spec.partition(":")
    if kind == "test":
        dim = int(rest) if rest else 64
        return HashedTrigramEmbedder(dim=dim)
    if kind == "remote":
        if not rest:
            raise ValueError("remote embedder spec needs a model: remote:<model>")
        base_url = _pick(
            getattr(args, "embed_base_url", None), config, "embedding.base_url", None, str
        )
        dim = _pick(getattr(args, "embed_dim", None), config, "embedding.dim", None, int)
        if not base_url or not dim:
            raise ValueError("remote embedder needs --embed-base-url and --embed-dim (or config)")
        return RemoteEmbeddingProvider(base_url, rest, int(dim))
    raise ValueError(f"unknown embedder spec {spec!r} (expected test[:dim] or remote:<model>)")


def _make_llm(spec: str, args: argparse.Namespace, config: Mapping):
    """`mock:<script.json>` for the scripted client, `http:<model>` for HTTP."""
    kind, _, rest = spec.partition(":")
    model = getattr(args, "model", None)
    if kind == "mock":
        if not rest:
            raise ValueError("mock llm spec needs a script path: mock:<script.json>")
        return ScriptedLlmClient.from_file(rest, model_name=model or "scripted-mock")
    if kind == "http":
        model_name = model or rest
        if not model_name:
            raise ValueError("http llm spec needs a model: http:<model> or --model")
        base_url = _pick(getattr(args, "llm_base_url", None), config, "llm.base_url", None, str)
        if not base_url:
            raise ValueError("http llm needs --llm-base-url (or config llm.base_url)")
        return HttpLlmClient(base_url, model_name)
    raise ValueError(f"unknown llm spec {spec!r} (expected mock:<script.json> or http:<model>)")


def _parse_direction(direction: str) -> tuple[str, str]:
    source, _, target = direction.partition("-")
    if source not in LANGUAGE_NAMES or target not in LANGUAGE_NAMES:
        raise ValueError(
            f"direction {direction!r} must be <src>-<tgt> with codes from "
            f"{sorted(LANGUAGE_NAMES)}"
        )
    if source == target:
        raise ValueError("direction source and target must differ")
    return source, target


def _settings_digest(settings: Mapping) -> str:
    canonical = json.dumps(settings, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _write_manifest(out_path: Path, command: str, settings: Mapping, extra: Mapping) -> None:
    """One manifest per run, next to the main output artifact."""
    manifest = {
        "schema_version": 1,
        "kind": "cli_manifest",
        "command": command,
        "package_version": __version__,
        "settings": dict(settings),
        "config_digest": _settings_digest(settings),
        "finished_at": _utc_now(),
    }
    manifest.update(extra)
    path = out_path.with_name(out_path.name + ".manifest.json")
    path.write_text(json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def _write_errors(out_path: Path, rows: Sequence[Mapping]) -> Path:
    path = out_path.with_name(out_path.name + ".errors.jsonl")
    lines = [json.dumps(dict(row), ensure_ascii=False) for row in rows]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return path


# ---------------------------------------------------------------- subcommands


def cmd_ingest(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    inputs: list[Path] = []
    for raw in args.input:
        path = Path(raw)
        if path.is_dir():
            inputs.extend(sorted(p for p in path.iterdir() if p.is_file()))
        else:
            inputs.append(path)
    if not inputs:
        print("ingest: no input files found", file=sys.stderr)
        return EXIT_FATAL

    entries = []
    file_reports = []
    row_error_rows: list[dict] = []
    for path in inputs:
        fmt = args.format or ("idiomkb_csv" if path.suffix.lower() == ".csv" else "idiom_jsonl")
        file_entries, report = parse_idiom_records(
            path.read_bytes(), fmt, args.language, header=args.header
        )
        entries.extend(file_entries)
        file_reports.append(
            {
                "path": str(path),
                "format": fmt,
                "total_rows": report.total_rows,
                "valid_rows": report.valid_rows,
                "errors": len(report.row_errors),
            }
        )
        for line_no, message in report.row_errors:
            row_error_rows.append({"path": str(path), "line": line_no, "error": message})

    if not entries:
        print("ingest: no valid entries in input, nothing written", file=sys.stderr)
        return EXIT_FATAL

    kb = build_knowledge_base(entries)
    out_dir.mkdir(parents=True, exist_ok=True)
    canonical_path = out_dir / "canonical.jsonl"
    canonical_path.write_bytes(entries_to_jsonl(entries))
    kb_path = out_dir / "kb.jsonl"
    kb_path.write_bytes(entries_to_jsonl(kb.entries))
    report_path = out_dir / "ingest_report.json"
    report_path.write_text(
        json.dumps(
            {"files": file_reports, "dedup_report": kb.dedup_report, "kb_entries": len(kb.entries)},
            ensure_ascii=False,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    settings = {"inputs": [str(p) for p in inputs], "language": args.language}
    _write_manifest(
        kb_path,
        "ingest",
        settings,
        {"kb_entries": len(kb.entries), "row_errors": len(row_error_rows)},
    )
    print(
        f"ingest: {len(entries)} entries from {len(inputs)} file(s), "
        f"{len(kb.entries)} after dedup -> {kb_path}"
    )
    if row_error_rows:
        errors_path = _write_errors(kb_path, row_error_rows)
        print(f"ingest: {len(row_error_rows)} bad rows -> {errors_path}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_index(args: argparse.Namespace) -> int:
    config = _load_config_file(args.config)
    provider = _make_embedder(args.embedder, args, config)
    kb = build_knowledge_base(load_entries_jsonl(args.kb))
    index = build_meaning_index(kb, args.target_language, provider)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_index(index, out_path)
    settings = {
        "kb": args.kb,
        "target_language": args.target_language,
        "provider": provider.name,
        "dim": provider.dim,
    }
    _write_manifest(
        out_path,
        "index",
        settings,
        {"items": len(index.items), "excluded_empty_meaning": index.excluded_empty_meaning},
    )
    print(
        f"index: {len(index.items)} meanings embedded with {provider.name} -> {out_path}"
        + (
            f" ({index.excluded_empty_meaning} skipped, empty meaning)"
            if index.excluded_empty_meaning
            else ""
        )
    )
    return EXIT_OK


def cmd_translate(args: argparse.Namespace) -> int:
    config = _load_config_file(args.config)
    pipeline_config = _pipeline_config(args, config)
    source, target = _parse_direction(args.direction)
    llm = _make_llm(args.llm, args, config)

    tasks = load_tasks_jsonl(args.tasks)
    in_direction = [
        t for t in tasks if t.source_language == source and t.target_language == target
    ]
    skipped = len(tasks) - len(in_direction)
    # Canonical order first so sampling ignores input file line order.
    in_direction.sort(key=lambda t: (t.source_sentence, t.idiom_surface))
    if args.sample is not None:
        if args.sample < 1:
            print("translate: --sample must be >= 1", file=sys.stderr)
            return EXIT_FATAL
        if args.sample > len(in_direction):
            print(
                f"translate: --sample {args.sample} exceeds {len(in_direction)} "
                f"available tasks for {args.direction}",
                file=sys.stderr,
            )
            return EXIT_FATAL
        rng = random.Random(args.seed)
        in_direction = rng.sample(in_direction, args.sample)
    if not in_direction:
        print(f"translate: no tasks for direction {args.direction}", file=sys.stderr)
        return EXIT_FATAL

    kb = index = provider = None
    if args.method == "sia":
        if not args.kb or not args.index:
            print("translate: --method sia needs --kb and --index", file=sys.stderr)
            return EXIT_FATAL
        provider = _make_embedder(args.embedder, args, config)
        kb = build_knowledge_base(load_entries_jsonl(args.kb))
        index = load_index(args.index, expected_provider=provider.name)

    results, batch_manifest = run_batch(
        in_direction,
        args.method,
        llm=llm,
        config=pipeline_config,
        kb=kb,
        index=index,
        provider=provider,
        max_workers=args.parallelism,
    )
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(results_to_jsonl(results))

    settings = {
        "method": args.method,
        "direction": args.direction,
        "tasks": args.tasks,
        "sample": args.sample,
        "seed": args.seed,
        "llm": args.llm,
        "model": llm.model_name,
        "pipeline": pipeline_config.to_dict(),
    }
    failures = batch_manifest.get("failures", [])
    _write_manifest(
        out_path,
        "translate",
        settings,
        {
            "run": batch_manifest,
            "tasks_total": len(tasks),
            "tasks_skipped_direction": skipped,
        },
    )
    print(
        f"translate: {len(results)} results ({args.method}, {args.direction}, "
        f"model {llm.model_name}) -> {out_path}"
    )
    if failures:
        errors_path = _write_errors(out_path, failures)
        print(f"translate: {len(failures)} tasks failed -> {errors_path}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_judge(args: argparse.Namespace) -> int:
    config = _load_config_file(args.config)
    pipeline_config = _pipeline_config(args, config)
    judge = _make_llm(args.llm, args, config)
    results = load_results_jsonl(args.results)

    out_path = Path(args.out)
    skip_refs: set[str] = set()
    existing = b""
    if out_path.exists():
        prior = load_score_records(out_path)
        skip_refs = {r.result_ref for r in prior if r.judge == judge.model_name}
        existing = out_path.read_bytes()

    records, errors = judge_batch(results, judge, pipeline_config, skip_refs=skip_refs)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(existing + score_records_to_jsonl(records))

    settings = {
        "results": args.results,
        "llm": args.llm,
        "judge": judge.model_name,
        "pipeline": pipeline_config.to_dict(),
    }
    _write_manifest(
        out_path,
        "judge",
        settings,
        {"judged": len(records), "skipped": len(skip_refs), "failed": len(errors)},
    )
    print(
        f"judge: {len(records)} scores by {judge.model_name} "
        f"({len(skip_refs)} already scored) -> {out_path}"
    )
    if errors:
        errors_path = _write_errors(out_path, errors)
        print(f"judge: {len(errors)} results failed -> {errors_path}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_export_human(args: argparse.Namespace) -> int:
    results_a = load_results_jsonl(args.results_a)
    results_b = load_results_jsonl(args.results_b)
    tasks, blind_map = export_human_tasks(results_a, results_b, args.seed)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(tasks_to_json(tasks))
    blind_path = Path(args.blind_map)
    blind_path.parent.mkdir(parents=True, exist_ok=True)
    blind_path.write_text(
        json.dumps(blind_map, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    settings = {
        "results_a": args.results_a,
        "results_b": args.results_b,
        "seed": args.seed,
    }
    _write_manifest(out_path, "export-human", settings, {"tasks": len(tasks)})
    print(f"export-human: {len(tasks)} anonymized tasks -> {out_path}, blind map -> {blind_path}")
    return EXIT_OK


def cmd_import_human(args: argparse.Namespace) -> int:
    blind_map = json.loads(Path(args.blind_map).read_text(encoding="utf-8"))
    if args.format == "server-log":
        rows = effective_score_rows(args.scores)
        csv_text = "".join(
            f"{r['task_id']},{r['label']},{r['score']},{r['annotator']}\n" for r in rows
        )
        data = csv_text.encode("utf-8")
    else:
        data = Path(args.scores).read_bytes()
    records, errors = import_human_scores(data, blind_map)

    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(score_records_to_jsonl(records))
    settings = {"scores": args.scores, "blind_map": args.blind_map, "format": args.format}
    _write_manifest(
        out_path, "import-human", settings, {"imported": len(records), "failed": len(errors)}
    )
    print(f"import-human: {len(records)} scores -> {out_path}")
    if errors:
        errors_path = _write_errors(
            out_path, [{"row": row, "error": message} for row, message in errors]
        )
        print(f"import-human: {len(errors)} bad rows -> {errors_path}", file=sys.stderr)
        return EXIT_PARTIAL if records else EXIT_FATAL
    return EXIT_OK


def cmd_serve_eval(args: argparse.Namespace) -> int:
    tasks = load_task_payloads(args.tasks)
    state = EvalState(tasks, args.score_log, token=args.token, static_dir=args.static)
    serve_forever(state, args.host, args.port)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    results = []
    for path in args.results:
        results.extend(load_results_jsonl(path))
    records = []
    for path in args.scores:
        records.extend(load_score_records(path))
    report = markdown_report(records, results)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(report, encoding="utf-8")
    settings = {"results": list(args.results), "scores": list(args.scores)}
    _write_manifest(
        out_path, "report", settings, {"results": len(results), "scores": len(records)}
    )
    print(f"report: {len(records)} scores over {len(results)} results -> {out_path}")
    return EXIT_OK


# --------------------------------------------------------------------- parser


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML config file")
    parser.add_argument("--threshold", type=float, help="retrieval similarity threshold")
    parser.add_argument("--k", type=int, help="retrieval candidate count")
    parser.add_argument("--translation-temperature", type=float, dest="translation_temperature")
    parser.add_argument("--judge-temperature", type=float, dest="judge_temperature")
    parser.add_argument("--max-llm-retries", type=int, dest="max_llm_retries")
    parser.add_argument("--max-lia-candidates", type=int, dest="max_lia_candidates")


def _add_llm_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--llm", required=True, help="llm spec: mock:<script.json> or http:<model>"
    )
    parser.add_argument("--model", help="model name recorded in results")
    parser.add_argument("--llm-base-url", dest="llm_base_url", help="chat endpoint URL")


def _add_embedder_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--embedder",
        default="test:64",
        help="embedder spec: test[:dim] or remote:<model> (default test:64)",
    )
    parser.add_argument("--embed-base-url", dest="embed_base_url")
    parser.add_argument("--embed-dim", type=int, dest="embed_dim")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idiomalign",
        description="Idiom-aware translation: align, translate, judge, report.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse datasets into a deduplicated knowledge base")
    p.add_argument("--input", action="append", required=True, help="file or directory; repeatable")
    p.add_argument("--format", choices=["idiom_jsonl", "idiomkb_csv"], help="default: by suffix")
    p.add_argument("--language", default="en", help="language for rows without one")
    p.add_argument("--header", action="store_true", help="skip the first CSV row")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="embed KB meanings into a retrieval index")
    p.add_argument("--kb", required=True, help="canonical KB JSONL")
    p.add_argument("--target-language", required=True, choices=sorted(LANGUAGE_NAMES))
    _add_embedder_flags(p)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("translate", help="run one translation method over a task file")
    p.add_argument("--method", required=True, choices=["sia", "lia", "direct"])
    p.add_argument("--tasks", required=True, help="task JSONL")
    p.add_argument("--direction", required=True, help="e.g. en-zh")
    p.add_argument("--kb", help="canonical KB JSONL (sia)")
    p.add_argument("--index", help="meaning index JSON (sia)")
    _add_embedder_flags(p)
    _add_llm_flags(p)
    p.add_argument("--sample", type=int, help="seeded sample size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallelism", type=int, default=1)
    _add_config_flags(p)
    p.add_argument("--out", required=True, help="results JSONL")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("judge", help="score results with an LLM judge")
    p.add_argument("--results", required=True)
    _add_llm_flags(p)
    _add_config_flags(p)
    p.add_argument("--out", required=True, help="scores JSONL; existing scores are kept")
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("export-human", help="pair two result files into anonymized tasks")
    p.add_argument("--results-a", required=True)
    p.add_argument("--results-b", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="task payload JSON")
    p.add_argument("--blind-map", required=True, help="de-anonymization map JSON (keep private)")
    p.set_defaults(func=cmd_export_human)

    p = sub.add_parser("import-human", help="resolve annotator scores through the blind map")
    p.add_argument("--scores", required=True, help="CSV task_id,label,score,annotator")
    p.add_argument("--format", choices=["csv", "server-log"], default="csv")
    p.add_argument("--blind-map", required=True)
    p.add_argument("--out", required=True, help="scores JSONL")
    p.set_defaults(func=cmd_import_human)

    p = sub.add_parser("serve-eval", help="serve tasks to annotators over HTTP")
    p.add_argument("--tasks", required=True, help="task payload JSON from export-human")
    p.add_argument("--score-log", required=True, help="append-only score log JSONL")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--token", help="require X-Eval-Token on API requests")
    p.add_argument("--static", help="directory of UI files to serve")
    p.set_defaults(func=cmd_serve_eval)

    p = sub.add_parser("report", help="render Markdown tables from scores")
    p.add_argument("--results", action="append", required=True, help="repeatable")
    p.add_argument("--scores", action="append", required=True, help="repeatable")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (IdiomAlignError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
