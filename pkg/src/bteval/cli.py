"""Command-line driver: segment / score / validate / run / stats / report.

Standard output carries data; diagnostics go to standard error. Exit
codes: 0 success (warnings allowed), 1 degradation threshold exceeded,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import pipeline as pipeline_mod
from . import report as report_mod
from . import stats as stats_mod
from .metrics import MetricError, ScoringConfig, score_pair
from .segmentation import (
    CHARACTER,
    WORD,
    LexiconError,
    default_lexicon,
    load_lexicon,
    load_variant_table,
    segment_chars,
    segment_words,
)

EXIT_OK = 0
EXIT_DEGRADED = 1
EXIT_USAGE = 2


class CliError(Exception):
    """Reported to stderr; maps to exit code 2."""


def _load_lexicon_arg(path: str | None):
    if path is None:
        return default_lexicon()
    if not Path(path).is_file():
        raise CliError(f"lexicon file not found: {path}")
    return load_lexicon(path)


def _read_text_arg(value: str) -> str:
    path = Path(value)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    return value


def cmd_segment(args) -> int:
    lexicon = _load_lexicon_arg(args.lexicon)
    text = _read_text_arg(args.text)
    if args.level == CHARACTER or args.level == "char":
        tokens = segment_chars(text).tokens
    else:
        tokens = segment_words(text, lexicon).tokens
    sep = "\n" if args.lines else "/"
    print(sep.join(tokens))
    return EXIT_OK


def cmd_score(args) -> int:
    for path in (args.original, args.candidate):
        if not Path(path).is_file():
            raise CliError(f"input file not found: {path}")
    original = Path(args.original).read_text(encoding="utf-8").strip()
    candidate = Path(args.candidate).read_text(encoding="utf-8").strip()
    if not original:
        raise CliError(f"empty original file: {args.original}")
    if not candidate:
        raise CliError(f"empty candidate file: {args.candidate}")
    lexicon = _load_lexicon_arg(args.lexicon)
    scoring = _scoring_from_path(args.config) if args.config else ScoringConfig()
    vector = score_pair(original, candidate, lexicon, scoring)
    print(json.dumps(vector.as_dict(), ensure_ascii=False))
    return EXIT_OK


def cmd_validate(args) -> int:
    if not Path(args.corpus).is_file():
        raise CliError(f"corpus file not found: {args.corpus}")
    loaded = corpus_mod.parse_corpus(args.corpus)
    policy = corpus_mod.ValidationPolicy(traditional_threshold=args.threshold)
    table = load_variant_table(args.variant_table) if args.variant_table else None
    warnings = corpus_mod.validate_corpus(loaded, policy, table)
    for warning in warnings:
        print(warning)
    print(f"{len(loaded)} samples, {len(warnings)} warnings", file=sys.stderr)
    return EXIT_OK


def _scoring_from_path(path: str) -> ScoringConfig:
    if not Path(path).is_file():
        raise CliError(f"config file not found: {path}")
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CliError(f"invalid JSON config {path}: {exc.msg}") from exc
    return ScoringConfig.from_dict(data.get("scoring", data))


def _load_run_config(path: str) -> dict:
    if not Path(path).is_file():
        raise CliError(f"config file not found: {path}")
    try:
        config = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CliError(f"invalid JSON config {path}: {exc.msg}") from exc
    if "corpus" not in config or "backends" not in config:
        raise CliError("run config requires 'corpus' and 'backends'")
    return config


def cmd_run(args) -> int:
    config = _load_run_config(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    corpus_path = config["corpus"]
    if not Path(corpus_path).is_file():
        raise CliError(f"corpus file not found: {corpus_path}")
    loaded = corpus_mod.parse_corpus(corpus_path)
    lexicon = _load_lexicon_arg(config.get("lexicon"))
    table = (load_variant_table(config["variant_table"])
             if config.get("variant_table") else None)
    try:
        backends = [pipeline_mod.BackendConfig.from_dict(b) for b in config["backends"]]
    except (pipeline_mod.ConfigError, TypeError) as exc:
        raise CliError(f"bad backend config: {exc}") from exc
    scoring = ScoringConfig.from_dict(config.get("scoring", {}))
    master_seed = args.seed if args.seed is not None else int(config.get("master_seed", 0))
    repetitions = int(config.get("repetitions", 1))

    matrices, records, manifest = pipeline_mod.run_experiment(
        loaded,
        backends,
        repetitions,
        scoring,
        master_seed,
        lexicon=lexicon,
        variant_table=table,
        verbatim_threshold=float(config.get("verbatim_threshold",
                                            pipeline_mod.DEFAULT_VERBATIM_THRESHOLD)),
        traditional_threshold=float(config.get("traditional_threshold", 0.05)),
    )

    pipeline_mod.write_records(records, out_dir / "records.jsonl")
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest.to_dict(), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )
    for name, matrix in matrices.items():
        (out_dir / f"matrix_{name}.json").write_text(
            json.dumps(matrix.to_dict(), ensure_ascii=False) + "\n", encoding="utf-8"
        )
    _emit_reports(matrices, out_dir, args.alpha, args.correction)

    errors = sum(1 for rec in records if rec.error is not None)
    missing_fraction = max(m.missing_fraction() for m in matrices.values())
    threshold = float(config.get("max_missing_fraction", 1.0))
    print(
        f"{len(records)} records, {errors} errors, "
        f"missing fraction {missing_fraction:.3f}",
        file=sys.stderr,
    )
    if missing_fraction > threshold:
        print(f"degradation threshold exceeded ({missing_fraction:.3f} > {threshold})",
              file=sys.stderr)
        return EXIT_DEGRADED
    return EXIT_OK


def _emit_reports(matrices, out_dir: Path, alpha: float, correction: str) -> None:
    batteries = []
    for name in sorted(matrices):
        try:
            batteries.append(stats_mod.run_metric_battery(
                matrices[name], alpha=alpha, correction=correction))
        except stats_mod.StatsError as exc:
            print(f"stats skipped for {name}: {exc}", file=sys.stderr)
    correlations = report_mod.metric_correlations(matrices)
    report_mod.emit_summaries_csv(report_mod.summarize_all(matrices),
                                  out_dir / "summaries.csv")
    report_mod.emit_pairwise_csv(batteries, out_dir / "pairwise_tests.csv")
    report_mod.emit_correlations_csv(correlations, out_dir / "correlations.csv")
    report_mod.emit_plot_data(matrices, correlations, out_dir / "plot_bundle.json")
    report_mod.emit_stats_report(batteries, out_dir / "stats_report.json")


def _load_matrices(paths) -> dict:
    matrices = {}
    for path in paths:
        if not Path(path).is_file():
            raise CliError(f"matrix file not found: {path}")
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        matrix = stats_mod.ScoreMatrix.from_dict(data)
        matrices[matrix.metric] = matrix
    return matrices


def cmd_stats(args) -> int:
    matrices = _load_matrices(args.matrices)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    batteries = []
    for name in sorted(matrices):
        try:
            batteries.append(stats_mod.run_metric_battery(
                matrices[name], alpha=args.alpha, correction=args.correction))
        except stats_mod.StatsError as exc:
            print(f"stats skipped for {name}: {exc}", file=sys.stderr)
    report_mod.emit_pairwise_csv(batteries, out_dir / "pairwise_tests.csv")
    report_mod.emit_stats_report(batteries, out_dir / "stats_report.json")
    total = sum(len(b.significant_pairs) for b in batteries)
    print(f"{len(batteries)} metrics tested, {total} significant pairs", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    if not run_dir.is_dir():
        raise CliError(f"run directory not found: {args.run_dir}")
    paths = sorted(run_dir.glob("matrix_*.json"))
    if not paths:
        raise CliError(f"no matrix_*.json files in {args.run_dir}")
    matrices = _load_matrices(paths)
    out_dir = Path(args.out) if args.out else run_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    correlations = report_mod.metric_correlations(matrices)
    report_mod.emit_summaries_csv(report_mod.summarize_all(matrices),
                                  out_dir / "summaries.csv")
    report_mod.emit_correlations_csv(correlations, out_dir / "correlations.csv")
    report_mod.emit_plot_data(matrices, correlations, out_dir / "plot_bundle.json")
    print(f"report written to {out_dir}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bteval",
        description="Back-translation evaluation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="tokenize text or a file")
    p.add_argument("text", help="literal text or a path to a UTF-8 file")
    p.add_argument("--lexicon", help="frequency lexicon path (default: shipped)")
    p.add_argument("--level", choices=[WORD, "char", CHARACTER], default=WORD)
    p.add_argument("--lines", action="store_true", help="one token per line instead of slash-joined")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("score", help="score a (original, candidate) file pair")
    p.add_argument("original")
    p.add_argument("candidate")
    p.add_argument("--lexicon")
    p.add_argument("--config", help="JSON file with a scoring block")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("validate", help="validate a JSONL corpus")
    p.add_argument("corpus")
    p.add_argument("--threshold", type=float, default=0.05,
                   help="traditional-character ratio that triggers a warning")
    p.add_argument("--variant-table", dest="variant_table")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="execute a configured round-trip experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config master seed")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--correction", default=stats_mod.BENJAMINI_HOCHBERG,
                   choices=[stats_mod.BENJAMINI_HOCHBERG, stats_mod.BONFERRONI,
                            stats_mod.NO_CORRECTION])
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("stats", help="run the significance battery on saved matrices")
    p.add_argument("matrices", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--correction", default=stats_mod.BENJAMINI_HOCHBERG,
                   choices=[stats_mod.BENJAMINI_HOCHBERG, stats_mod.BONFERRONI,
                            stats_mod.NO_CORRECTION])
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("report", help="summaries, correlations, and plot bundle for a run")
    p.add_argument("run_dir")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (corpus_mod.CorpusError, LexiconError, MetricError,
            stats_mod.StatsError, pipeline_mod.ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
