"""Command-line interface: scan, train, eval, measure, crawl."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .classifier import (
    TrainConfig,
    evaluate,
    load_model,
    read_labeled_corpus,
    save_model,
    train,
)
from .errors import VsxScanError
from .marketplace import crawl, read_metadata_snapshot
from .measure import command_labels_from_packages, write_measurement_tables
from .reporting import emit_report, read_report_files, write_report_files
from .scanner import ScanConfig, discover_packages, scan_corpus, scan_extension, summarize_reports

# Paper-scale reference metrics, printed next to fixture-scale results so
# nobody mistakes one for the other.
REFERENCE_METRICS = {
    "accuracy": 0.995,
    "f1": 0.993,
    "true_positive_rate": 0.9302,
    "true_negative_rate": 0.997,
}


class _Parser(argparse.ArgumentParser):
    # Usage errors exit 1, matching the documented exit code contract.
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vsxscan", description=__doc__)
    parser.add_argument("--version", action="version", version=f"vsxscan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    scan = sub.add_parser("scan", help="scan a package or a corpus directory")
    scan.add_argument("path")
    scan.add_argument("--model", help="trained classifier model file")
    scan.add_argument("--format", choices=("json", "csv", "sarif"), default="json")
    scan.add_argument("--workers", type=int, default=1)
    scan.add_argument("--budget-secs", type=float, default=60.0, help="per-extension budget")
    scan.add_argument("--file-budget-secs", type=float, default=10.0)
    scan.add_argument("--min-installs", type=int, default=10)
    scan.add_argument("--metadata", help="metadata snapshot for the install-count filter")
    scan.add_argument("--out", help="write serialized output here instead of stdout")
    scan.add_argument("--reports-dir", help="also write one JSON report file per extension")
    scan.add_argument("--fail-on-findings", action="store_true")
    scan.add_argument("--no-timing", action="store_true", help="zero out timings for diffable output")

    tr = sub.add_parser("train", help="train the reference classifier")
    tr.add_argument("--corpus", required=True)
    tr.add_argument("--out", required=True)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--epochs", type=int, default=300)
    tr.add_argument("--learning-rate", type=float, default=2.0)
    tr.add_argument("--credential-weight", type=float, default=0.01)
    tr.add_argument("--normal-weight", type=float, default=0.1)

    ev = sub.add_parser("eval", help="evaluate a model on a labeled corpus")
    ev.add_argument("--corpus", required=True)
    ev.add_argument("--model", required=True)

    me = sub.add_parser("measure", help="aggregate measurement tables from reports")
    me.add_argument("--reports", required=True, help="directory of per-extension report files")
    me.add_argument("--metadata", help="metadata snapshot for category/popularity joins")
    me.add_argument("--packages", help="package directory for confusable-command detection")
    me.add_argument("--out", default="measures", help="output directory for CSV tables")
    me.add_argument("--max-distance", type=int, default=1)

    cr = sub.add_parser("crawl", help="crawl a gallery endpoint")
    cr.add_argument("--endpoint", default=os.environ.get("VSXSCAN_GALLERY_ENDPOINT"))
    cr.add_argument("--dest", required=True)
    cr.add_argument("--category")
    cr.add_argument("--max", type=int, dest="max_entries")
    cr.add_argument("--min-installs", type=int, default=0)
    cr.add_argument("--page-size", type=int, default=100)

    return parser


def _cmd_scan(args) -> int:
    config = ScanConfig(
        model_path=args.model,
        per_extension_budget=args.budget_secs,
        per_file_budget=args.file_budget_secs,
        workers=args.workers,
        min_installs=args.min_installs,
        output_format=args.format,
        metadata_path=args.metadata,
        record_timing=not args.no_timing,
    )
    path = Path(args.path)
    if path.is_file() or (path / "package.json").is_file() or (path / "extension" / "package.json").is_file():
        reports = [scan_extension(path, config)]
        summary = summarize_reports(reports, reports[0].timing)
    else:
        summary, reports = scan_corpus(path, config)

    output = emit_report(reports, summary, args.format)
    if args.out:
        Path(args.out).write_text(output, encoding="utf-8")
    else:
        sys.stdout.write(output)
    if args.reports_dir:
        write_report_files(reports, args.reports_dir)

    total_findings = sum(len(r.findings) for r in reports)
    print(
        f"scanned {summary.total_scanned} extension(s): {summary.flagged} flagged, "
        f"{total_findings} finding(s)",
        file=sys.stderr,
    )
    if args.fail_on_findings and total_findings:
        return 2
    return 0


def _cmd_train(args) -> int:
    data = read_labeled_corpus(args.corpus)
    config = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        seed=args.seed,
        class_weights=(args.credential_weight, args.normal_weight),
    )
    model = train(data, config)
    save_model(model, args.out)
    print(
        f"trained on {len(data)} labeled points, {len(model.vocabulary)} features, "
        f"final loss {model.loss_history[-1]:.6f} -> {args.out}"
    )
    return 0


def _print_metrics_table(metrics) -> None:
    print(f"{'metric':<22}{'this corpus':>14}{'paper-scale ref':>18}")
    for name in ("accuracy", "f1", "true_positive_rate", "true_negative_rate"):
        ours = getattr(metrics, name)
        ref = REFERENCE_METRICS[name]
        print(f"{name:<22}{ours:>13.4f} {ref:>17.4f}")
    print(
        f"confusion: tp={metrics.tp} fp={metrics.fp} tn={metrics.tn} fn={metrics.fn}"
        + (f"  degenerate: {', '.join(metrics.degenerate)}" if metrics.degenerate else "")
    )


def _cmd_eval(args) -> int:
    data = read_labeled_corpus(args.corpus)
    model = load_model(args.model)
    metrics = evaluate(model, data)
    _print_metrics_table(metrics)
    return 0


def _cmd_measure(args) -> int:
    reports = read_report_files(args.reports)
    metadata = read_metadata_snapshot(args.metadata) if args.metadata else None
    contributions = None
    if args.packages:
        contributions = command_labels_from_packages(discover_packages(args.packages))
    written = write_measurement_tables(
        args.out, reports, metadata, contributions, max_distance=args.max_distance
    )
    for name in sorted(written):
        print(f"wrote {written[name]}")
    return 0


def _cmd_crawl(args) -> int:
    if not args.endpoint:
        print("crawl: --endpoint or VSXSCAN_GALLERY_ENDPOINT required", file=sys.stderr)
        return 1
    result = crawl(
        args.endpoint,
        args.dest,
        category=args.category,
        max_entries=args.max_entries,
        min_installs=args.min_installs,
        page_size=args.page_size,
    )
    print(
        f"{len(result.entries)} entries, {len(result.downloaded)} downloaded, "
        f"{result.skipped_existing} already present, snapshot {result.snapshot_path}"
    )
    return 0


_COMMANDS = {
    "scan": _cmd_scan,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "measure": _cmd_measure,
    "crawl": _cmd_crawl,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (VsxScanError, OSError, ValueError) as exc:
        print(f"vsxscan {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
