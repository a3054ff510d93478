"""Per-extension and corpus-level scan orchestration.

One extension runs the full pipeline: ingest, per-file graph analysis
with regex fallback, data point extraction, classification. Failures
degrade instead of raising: a bad manifest yields a ``failed`` report,
unparseable or over-budget files fall back to regex sink detection, and
a package can never prevent reports for its neighbors.
"""

from __future__ import annotations

import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import jsparse
from .classifier import ClassifierModel, Label, classify, load_model
from .datapoints import DataPoint, SourceLocation, VectorKind, extract_data_points
from .errors import (
    BudgetExceeded,
    EmptyCorpus,
    ManifestMissing,
    ManifestUnparseable,
    NotAnArchive,
    ParseError,
)
from .ingest import load_package
from .pdg import build_pdg
from .sinks import (
    DEFAULT_DEPTH_BUDGET,
    SinkApi,
    find_api_call_sites,
    regex_fallback_sites,
    trace_arguments,
)


class ScanStatus(Enum):
    FULL = "full"
    METADATA_ONLY = "metadata_only"
    FAILED = "failed"


@dataclass
class ScanConfig:
    model_path: str | None = None
    model: ClassifierModel | None = None
    per_extension_budget: float = 60.0
    per_file_budget: float = 10.0
    workers: int = 1
    min_installs: int = 10
    output_format: str = "json"
    catalog: dict[tuple[str, ...], SinkApi] | None = None
    metadata_path: str | None = None
    record_timing: bool = True
    depth_budget: int = DEFAULT_DEPTH_BUDGET

    def resolve_model(self) -> ClassifierModel:
        if self.model is not None:
            return self.model
        if self.model_path:
            self.model = load_model(self.model_path)
        else:
            self.model = ClassifierModel.default()
        return self.model


@dataclass
class Diagnostics:
    parse_errors: int = 0
    timeouts: int = 0
    unresolved_sinks: int = 0
    clipboard_sites: int = 0
    files_analyzed: int = 0
    files_fallback: int = 0
    files_skipped: int = 0
    data_points: dict[str, int] = field(default_factory=dict)


@dataclass
class FindingRecord:
    data_point: DataPoint
    label: Label
    score: float
    evidence: list[SourceLocation] = field(default_factory=list)


@dataclass
class ExtensionReport:
    extension_id: str
    version: str
    status: ScanStatus
    findings: list[FindingRecord] = field(default_factory=list)
    diagnostics: Diagnostics = field(default_factory=Diagnostics)
    timing: float = 0.0


@dataclass
class VectorSummary:
    extensions: int
    mean_items: float


@dataclass
class ScanSummary:
    total_scanned: int
    flagged: int
    flagged_fraction: float
    per_vector: dict[str, VectorSummary]
    mean_items_per_flagged: float
    wall_time: float


def _fallback_id(path: Path) -> str:
    stem = path.stem if path.is_file() else path.name
    return f"unknown.{stem.replace('.', '-') or 'package'}"


def _failed_report(path: Path, started: float, record_timing: bool) -> ExtensionReport:
    return ExtensionReport(
        extension_id=_fallback_id(path),
        version="0.0.0",
        status=ScanStatus.FAILED,
        timing=(time.monotonic() - started) if record_timing else 0.0,
    )


def scan_extension(path: str | Path, config: ScanConfig | None = None) -> ExtensionReport:
    """Scan one package; returns a report even for broken content.

    Only I/O-level problems (an unreadable path) raise.
    """
    config = config or ScanConfig()
    path = Path(path)
    started = time.monotonic()
    if not path.exists():
        raise FileNotFoundError(str(path))

    try:
        package = load_package(path)
    except (NotAnArchive, ManifestMissing, ManifestUnparseable):
        return _failed_report(path, started, config.record_timing)

    deadline = started + config.per_extension_budget
    diag = Diagnostics()
    sites_with_traces = []
    clipboard_evidence: list[SourceLocation] = []

    files = package.sources.files
    for index, (relpath, text) in enumerate(files):
        now = time.monotonic()
        if now >= deadline:
            diag.timeouts += len(files) - index
            diag.files_skipped += len(files) - index
            break
        file_budget = min(config.per_file_budget, deadline - now)
        try:
            tree = jsparse.parse_source(text, relpath, timeout=file_budget)
            graph = build_pdg(tree, deadline=time.monotonic() + file_budget)
            for site in find_api_call_sites(graph, config.catalog):
                sites_with_traces.append((site, trace_arguments(graph, site, config.depth_budget)))
            diag.files_analyzed += 1
        except ParseError:
            diag.parse_errors += 1
            diag.files_fallback += 1
            sites_with_traces.extend(regex_fallback_sites(text, relpath, config.catalog))
        except BudgetExceeded:
            diag.timeouts += 1
            diag.files_fallback += 1
            sites_with_traces.extend(regex_fallback_sites(text, relpath, config.catalog))

    for site, traces in sites_with_traces:
        if site.api is SinkApi.CLIPBOARD_READ_TEXT:
            diag.clipboard_sites += 1
            clipboard_evidence.append(SourceLocation(file=site.file, start=site.span[0], end=site.span[1]))
        elif traces and not any(t.resolved for t in traces):
            diag.unresolved_sinks += 1

    points = extract_data_points(package, sites_with_traces)
    diag.data_points = dict(sorted(Counter(p.vector.value for p in points).items()))

    model = config.resolve_model()
    findings: list[FindingRecord] = []
    for point in points:
        label, score = classify(model, point)
        if label is Label.CREDENTIAL_RELATED:
            findings.append(
                FindingRecord(
                    data_point=point,
                    label=label,
                    score=score,
                    evidence=[point.location] + clipboard_evidence,
                )
            )

    # Degradation stays visible: a package counts as fully analyzed only
    # when at least one file made it through the graph pipeline.
    status = ScanStatus.FULL if diag.files_analyzed > 0 else ScanStatus.METADATA_ONLY

    return ExtensionReport(
        extension_id=package.extension_id,
        version=package.version,
        status=status,
        findings=findings,
        diagnostics=diag,
        timing=(time.monotonic() - started) if config.record_timing else 0.0,
    )


def _is_package_path(path: Path) -> bool:
    if path.is_file():
        return path.suffix.lower() == ".vsix"
    if path.is_dir():
        return (path / "package.json").is_file() or (path / "extension" / "package.json").is_file()
    return False


def discover_packages(root: str | Path) -> list[Path]:
    """Scannable packages under a corpus root, in sorted order."""
    root = Path(root)
    if _is_package_path(root):
        return [root]
    if not root.is_dir():
        return []
    found = []
    for child in sorted(root.iterdir()):
        if _is_package_path(child):
            found.append(child)
    return found


def _peek_extension_id(path: Path) -> str | None:
    import json
    import zipfile

    try:
        if path.is_dir():
            for candidate in (path / "extension" / "package.json", path / "package.json"):
                if candidate.is_file():
                    data = json.loads(candidate.read_text(encoding="utf-8", errors="replace"))
                    break
            else:
                return None
        else:
            with zipfile.ZipFile(path) as zf:
                data = json.loads(zf.read("extension/package.json").decode("utf-8", errors="replace"))
        publisher = str(data.get("publisher") or "unknown").replace(".", "-")
        name = str(data.get("name") or "unknown").replace(".", "-")
        return f"{publisher}.{name}"
    except Exception:
        return None


def _scan_isolated(path_str: str, config: ScanConfig) -> ExtensionReport:
    path = Path(path_str)
    started = time.monotonic()
    try:
        return scan_extension(path, config)
    except Exception:
        return _failed_report(path, started, config.record_timing)


def scan_corpus(
    root: str | Path, config: ScanConfig | None = None
) -> tuple[ScanSummary, list[ExtensionReport]]:
    """Scan every package under ``root`` and aggregate a summary.

    Reports come back sorted by extension id regardless of worker count,
    so corpus outputs are diffable.
    """
    config = config or ScanConfig()
    started = time.monotonic()
    paths = discover_packages(root)
    if not paths:
        raise EmptyCorpus(f"no scannable packages under {root}")

    if config.metadata_path:
        from .marketplace import read_metadata_snapshot

        snapshot = read_metadata_snapshot(config.metadata_path)
        kept = []
        for path in paths:
            extension_id = _peek_extension_id(path)
            entry = snapshot.get(extension_id) if extension_id else None
            if entry is not None and entry.install_count < config.min_installs:
                continue
            kept.append(path)
        paths = kept
        if not paths:
            raise EmptyCorpus(f"all packages under {root} filtered by install count")

    if config.workers <= 1:
        reports = [_scan_isolated(str(p), config) for p in paths]
    else:
        # Pre-resolve so every worker deserializes the same model instead
        # of re-reading the model file.
        config.resolve_model()
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            reports = list(pool.map(_scan_isolated, [str(p) for p in paths], [config] * len(paths)))

    reports.sort(key=lambda r: (r.extension_id, r.version))
    wall = (time.monotonic() - started) if config.record_timing else 0.0
    return summarize_reports(reports, wall), reports


def summarize_reports(reports: list[ExtensionReport], wall_time: float = 0.0) -> ScanSummary:
    flagged_reports = [r for r in reports if r.findings]
    per_vector: dict[str, VectorSummary] = {}
    for vector in VectorKind:
        counts = [
            sum(1 for f in r.findings if f.data_point.vector is vector)
            for r in flagged_reports
        ]
        counts = [c for c in counts if c > 0]
        per_vector[vector.value] = VectorSummary(
            extensions=len(counts),
            mean_items=(sum(counts) / len(counts)) if counts else 0.0,
        )
    total_items = sum(len(r.findings) for r in flagged_reports)
    return ScanSummary(
        total_scanned=len(reports),
        flagged=len(flagged_reports),
        flagged_fraction=(len(flagged_reports) / len(reports)) if reports else 0.0,
        per_vector=per_vector,
        mean_items_per_flagged=(total_items / len(flagged_reports)) if flagged_reports else 0.0,
        wall_time=wall_time,
    )
