"""Report serialization: structured JSON, per-finding CSV, and SARIF 2.1.0.

All emitters are byte-deterministic given identical inputs (sorted keys,
fixed float formatting via repr round-trip, no timestamps).
"""

from __future__ import annotations

import csv
import io
import json
import re
from pathlib import Path

from . import __version__ as _pkg_version
from .classifier import Label
from .datapoints import DataPoint, SourceLocation, VectorKind
from .errors import UnsupportedFormat
from .scanner import (
    Diagnostics,
    ExtensionReport,
    FindingRecord,
    ScanStatus,
    ScanSummary,
    VectorSummary,
)

SARIF_VERSION = "2.1.0"
SARIF_SCHEMA_URI = "https://docs.oasis-open.org/sarif/sarif/v2.1.0/errata01/os/schemas/sarif-schema-2.1.0.json"

RULE_PREFIX = "VSX-EXPOSE-"

_RULE_DESCRIPTIONS = {
    VectorKind.GLOBAL_STATE: "Credential-related key stored in the shared global state database",
    VectorKind.REQUESTED_CONFIGURATION: "Credential-related configuration property declared in the manifest",
    VectorKind.USED_CONFIGURATION: "Credential-related configuration key read or written at runtime",
    VectorKind.INPUT_BOX: "Input box prompting the user for credential-related text",
    VectorKind.REQUESTED_COMMAND: "Credential-related command declared in the manifest",
    VectorKind.USED_COMMAND: "Credential-related command registered, executed, or listened for",
}


def rule_id(vector: VectorKind) -> str:
    return f"{RULE_PREFIX}{vector.value}"


# ---------------------------------------------------------------------------
# Dataclass <-> dict
# ---------------------------------------------------------------------------


def _location_to_dict(loc: SourceLocation) -> dict:
    return {"file": loc.file, "start": loc.start, "end": loc.end, "pointer": loc.pointer}


def _location_from_dict(data: dict) -> SourceLocation:
    return SourceLocation(
        file=data["file"], start=data["start"], end=data["end"], pointer=data.get("pointer", "")
    )


def _point_to_dict(point: DataPoint) -> dict:
    return {
        "vector": point.vector.value,
        "text": point.text,
        "extension_id": point.extension_id,
        "location": _location_to_dict(point.location),
        "resolution": point.resolution,
    }


def _point_from_dict(data: dict) -> DataPoint:
    return DataPoint(
        vector=VectorKind(data["vector"]),
        text=data["text"],
        extension_id=data["extension_id"],
        location=_location_from_dict(data["location"]),
        resolution=data["resolution"],
    )


def _finding_to_dict(finding: FindingRecord) -> dict:
    return {
        "data_point": _point_to_dict(finding.data_point),
        "label": finding.label.value,
        "score": finding.score,
        "evidence": [_location_to_dict(e) for e in finding.evidence],
    }


def _finding_from_dict(data: dict) -> FindingRecord:
    return FindingRecord(
        data_point=_point_from_dict(data["data_point"]),
        label=Label(data["label"]),
        score=data["score"],
        evidence=[_location_from_dict(e) for e in data["evidence"]],
    )


def report_to_dict(report: ExtensionReport) -> dict:
    diag = report.diagnostics
    return {
        "extension_id": report.extension_id,
        "version": report.version,
        "status": report.status.value,
        "findings": [_finding_to_dict(f) for f in report.findings],
        "diagnostics": {
            "parse_errors": diag.parse_errors,
            "timeouts": diag.timeouts,
            "unresolved_sinks": diag.unresolved_sinks,
            "clipboard_sites": diag.clipboard_sites,
            "files_analyzed": diag.files_analyzed,
            "files_fallback": diag.files_fallback,
            "files_skipped": diag.files_skipped,
            "data_points": dict(sorted(diag.data_points.items())),
        },
        "timing": report.timing,
    }


def report_from_dict(data: dict) -> ExtensionReport:
    diag = data["diagnostics"]
    return ExtensionReport(
        extension_id=data["extension_id"],
        version=data["version"],
        status=ScanStatus(data["status"]),
        findings=[_finding_from_dict(f) for f in data["findings"]],
        diagnostics=Diagnostics(
            parse_errors=diag["parse_errors"],
            timeouts=diag["timeouts"],
            unresolved_sinks=diag["unresolved_sinks"],
            clipboard_sites=diag["clipboard_sites"],
            files_analyzed=diag["files_analyzed"],
            files_fallback=diag["files_fallback"],
            files_skipped=diag["files_skipped"],
            data_points=dict(diag["data_points"]),
        ),
        timing=data["timing"],
    )


def summary_to_dict(summary: ScanSummary) -> dict:
    return {
        "total_scanned": summary.total_scanned,
        "flagged": summary.flagged,
        "flagged_fraction": summary.flagged_fraction,
        "per_vector": {
            vector: {"extensions": vs.extensions, "mean_items": vs.mean_items}
            for vector, vs in sorted(summary.per_vector.items())
        },
        "mean_items_per_flagged": summary.mean_items_per_flagged,
        "wall_time": summary.wall_time,
    }


def summary_from_dict(data: dict) -> ScanSummary:
    return ScanSummary(
        total_scanned=data["total_scanned"],
        flagged=data["flagged"],
        flagged_fraction=data["flagged_fraction"],
        per_vector={
            vector: VectorSummary(extensions=vs["extensions"], mean_items=vs["mean_items"])
            for vector, vs in data["per_vector"].items()
        },
        mean_items_per_flagged=data["mean_items_per_flagged"],
        wall_time=data["wall_time"],
    )


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def emit_report(
    reports: list[ExtensionReport], summary: ScanSummary | None, format: str = "json"
) -> str:
    """Serialize reports in the requested format.

    ``json`` is the full structured dump, ``csv`` one row per finding,
    ``sarif`` one result per finding with rule ids per exposure vector.
    """
    if format == "json":
        payload = {
            "summary": summary_to_dict(summary) if summary is not None else None,
            "reports": [report_to_dict(r) for r in reports],
        }
        return json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n"
    if format == "csv":
        return _emit_csv(reports)
    if format == "sarif":
        return json.dumps(build_sarif(reports), sort_keys=True, ensure_ascii=False, indent=2) + "\n"
    raise UnsupportedFormat(f"unknown report format: {format!r}")


def load_json_report(text: str) -> tuple[ScanSummary | None, list[ExtensionReport]]:
    payload = json.loads(text)
    summary = summary_from_dict(payload["summary"]) if payload.get("summary") else None
    return summary, [report_from_dict(r) for r in payload["reports"]]


_CSV_COLUMNS = (
    "extension_id",
    "version",
    "vector",
    "text",
    "score",
    "resolution",
    "file",
    "start",
    "end",
    "pointer",
)


def _emit_csv(reports: list[ExtensionReport]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for report in reports:
        for finding in report.findings:
            point = finding.data_point
            writer.writerow(
                [
                    report.extension_id,
                    report.version,
                    point.vector.value,
                    point.text,
                    f"{finding.score:.6f}",
                    point.resolution,
                    point.location.file,
                    point.location.start,
                    point.location.end,
                    point.location.pointer,
                ]
            )
    return buffer.getvalue()


def build_sarif(reports: list[ExtensionReport]) -> dict:
    used_vectors = sorted(
        {f.data_point.vector for r in reports for f in r.findings}, key=lambda v: v.value
    )
    rules = [
        {
            "id": rule_id(vector),
            "name": f"{vector.value}Exposure",
            "shortDescription": {"text": _RULE_DESCRIPTIONS[vector]},
        }
        for vector in used_vectors
    ]
    rule_index = {rule_id(v): i for i, v in enumerate(used_vectors)}

    results = []
    for report in reports:
        for finding in report.findings:
            point = finding.data_point
            rid = rule_id(point.vector)
            location = {
                "physicalLocation": {
                    "artifactLocation": {"uri": point.location.file},
                    "region": {
                        "charOffset": point.location.start,
                        "charLength": max(0, point.location.end - point.location.start),
                    },
                }
            }
            results.append(
                {
                    "ruleId": rid,
                    "ruleIndex": rule_index[rid],
                    "level": "warning",
                    "message": {
                        "text": (
                            f"{report.extension_id}: {point.vector.value} exposure of "
                            f"{point.text!r} (score {finding.score:.3f})"
                        )
                    },
                    "locations": [location],
                    "properties": {
                        "extensionId": report.extension_id,
                        "vector": point.vector.value,
                        "text": point.text,
                        "score": finding.score,
                        "resolution": point.resolution,
                    },
                }
            )

    return {
        "$schema": SARIF_SCHEMA_URI,
        "version": SARIF_VERSION,
        "runs": [
            {
                "tool": {
                    "driver": {
                        "name": "vsxscan",
                        "informationUri": "https://example.invalid/vsxscan",
                        "version": _pkg_version,
                        "rules": rules,
                    }
                },
                "columnKind": "unicodeCodePoints",
                "results": results,
            }
        ],
    }


# ---------------------------------------------------------------------------
# Per-extension report files (consumed by the measure subcommand)
# ---------------------------------------------------------------------------


def _safe_name(value: str) -> str:
    return re.sub(r"[^A-Za-z0-9._@-]+", "_", value)


def write_report_files(reports: list[ExtensionReport], directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for report in reports:
        name = _safe_name(f"{report.extension_id}@{report.version}") + ".json"
        path = directory / name
        path.write_text(
            json.dumps(report_to_dict(report), sort_keys=True, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
        paths.append(path)
    return paths


def read_report_files(directory: str | Path) -> list[ExtensionReport]:
    directory = Path(directory)
    reports = []
    for path in sorted(directory.glob("*.json")):
        reports.append(report_from_dict(json.loads(path.read_text(encoding="utf-8"))))
    return reports
