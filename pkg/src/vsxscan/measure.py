"""Corpus-level measurement over scan reports.

Per-vector accounting, category and popularity breakdowns, exposed-token
frequencies, the AI-coding-assistant subset, and cross-extension
confusable-command detection. All fractions are computed as exact ratios;
formatting happens only at the CSV boundary.
"""

from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .classifier import tokenize
from .datapoints import VectorKind
from .marketplace import MarketplaceEntry
from .scanner import ExtensionReport


# ---------------------------------------------------------------------------
# Per-vector accounting (Table 2 shape)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VectorExposure:
    vector: VectorKind
    using_extensions: int
    flagged_extensions: int
    impacted_fraction: float
    mean_items: float


@dataclass(frozen=True)
class ExposureOverview:
    vectors: tuple[VectorExposure, ...]
    total_extensions: int
    flagged_extensions: int
    flagged_fraction: float
    mean_items_per_flagged: float


def aggregate_per_vector(reports: list[ExtensionReport]) -> ExposureOverview:
    """Count, per vector, how many extensions use it, how many are flagged
    through it, and the mean flagged items among those extensions."""
    rows = []
    for vector in VectorKind:
        using = 0
        item_counts = []
        for report in reports:
            sites = report.diagnostics.data_points.get(vector.value, 0)
            flagged_items = sum(1 for f in report.findings if f.data_point.vector is vector)
            if sites > 0 or flagged_items > 0:
                using += 1
            if flagged_items > 0:
                item_counts.append(flagged_items)
        rows.append(
            VectorExposure(
                vector=vector,
                using_extensions=using,
                flagged_extensions=len(item_counts),
                impacted_fraction=(len(item_counts) / using) if using else 0.0,
                mean_items=(sum(item_counts) / len(item_counts)) if item_counts else 0.0,
            )
        )
    flagged = [r for r in reports if r.findings]
    total_items = sum(len(r.findings) for r in flagged)
    return ExposureOverview(
        vectors=tuple(rows),
        total_extensions=len(reports),
        flagged_extensions=len(flagged),
        flagged_fraction=(len(flagged) / len(reports)) if reports else 0.0,
        mean_items_per_flagged=(total_items / len(flagged)) if flagged else 0.0,
    )


# ---------------------------------------------------------------------------
# Category breakdown (Table 3 shape)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CategoryRow:
    category: str
    scanned: int
    flagged: int
    impacted_fraction: float


def aggregate_by_category(
    reports: list[ExtensionReport], metadata: dict[str, MarketplaceEntry]
) -> tuple[list[CategoryRow], list[str]]:
    """Group reports by marketplace category.

    An extension with several categories counts in each. Extensions
    missing from the snapshot are listed, not fatal. Categories with zero
    scanned extensions never appear.
    """
    scanned: Counter[str] = Counter()
    flagged: Counter[str] = Counter()
    missing = []
    for report in reports:
        entry = metadata.get(report.extension_id)
        if entry is None:
            missing.append(report.extension_id)
            continue
        for category in entry.categories:
            scanned[category] += 1
            if report.findings:
                flagged[category] += 1
    rows = [
        CategoryRow(
            category=category,
            scanned=scanned[category],
            flagged=flagged.get(category, 0),
            impacted_fraction=flagged.get(category, 0) / scanned[category],
        )
        for category in sorted(scanned)
    ]
    return rows, sorted(set(missing))


# ---------------------------------------------------------------------------
# Popularity buckets (Fig 6 shape)
# ---------------------------------------------------------------------------

DEFAULT_POPULARITY_BOUNDS = (0, 1_000, 10_000, 100_000, 1_000_000)


@dataclass(frozen=True)
class PopularityBucket:
    lower: int
    upper: int | None
    scanned: int
    flagged: int
    impacted_fraction: float


def bucket_index(install_count: int, bounds: tuple[int, ...]) -> int:
    """The single bucket an install count falls into."""
    index = 0
    for i, lower in enumerate(bounds):
        if install_count >= lower:
            index = i
        else:
            break
    return index


def aggregate_by_popularity(
    reports: list[ExtensionReport],
    metadata: dict[str, MarketplaceEntry],
    bounds: tuple[int, ...] = DEFAULT_POPULARITY_BOUNDS,
) -> tuple[list[PopularityBucket], list[str]]:
    """Bucket extensions by install count; buckets partition [0, inf)."""
    if not bounds or bounds[0] != 0 or list(bounds) != sorted(set(bounds)):
        raise ValueError(f"bucket bounds must be strictly increasing and start at 0: {bounds}")
    scanned = [0] * len(bounds)
    flagged = [0] * len(bounds)
    missing = []
    for report in reports:
        entry = metadata.get(report.extension_id)
        if entry is None:
            missing.append(report.extension_id)
            continue
        index = bucket_index(entry.install_count, bounds)
        scanned[index] += 1
        if report.findings:
            flagged[index] += 1
    buckets = []
    for i, lower in enumerate(bounds):
        upper = bounds[i + 1] if i + 1 < len(bounds) else None
        buckets.append(
            PopularityBucket(
                lower=lower,
                upper=upper,
                scanned=scanned[i],
                flagged=flagged[i],
                impacted_fraction=(flagged[i] / scanned[i]) if scanned[i] else 0.0,
            )
        )
    return buckets, sorted(set(missing))


def aggregate_by_published_year(
    reports: list[ExtensionReport], metadata: dict[str, MarketplaceEntry]
) -> list[tuple[str, int, int, float]]:
    """(year, scanned, flagged, fraction) rows from published dates."""
    scanned: Counter[str] = Counter()
    flagged: Counter[str] = Counter()
    for report in reports:
        entry = metadata.get(report.extension_id)
        if entry is None or len(entry.published_date) < 4:
            continue
        year = entry.published_date[:4]
        scanned[year] += 1
        if report.findings:
            flagged[year] += 1
    return [
        (year, scanned[year], flagged.get(year, 0), flagged.get(year, 0) / scanned[year])
        for year in sorted(scanned)
    ]


# ---------------------------------------------------------------------------
# Token frequencies (Fig 5 data)
# ---------------------------------------------------------------------------


def token_frequencies(reports: list[ExtensionReport]) -> list[tuple[str, int]]:
    """Normalized tokens of all finding texts, count-descending with a
    lexicographic tiebreak."""
    counts: Counter[str] = Counter()
    for report in reports:
        for finding in report.findings:
            counts.update(tokenize(finding.data_point.text))
    return sorted(counts.items(), key=lambda item: (-item[1], item[0]))


# ---------------------------------------------------------------------------
# AI coding assistant subset
# ---------------------------------------------------------------------------

DEFAULT_AI_KEYWORDS = (
    "ai code",
    "code completion",
    "gpt",
    "openai",
    "intellicode",
    "autocomplete",
    "language model",
    "chatbot",
)


def select_ai_assistants(
    metadata: dict[str, MarketplaceEntry] | list[MarketplaceEntry],
    keywords: tuple[str, ...] = DEFAULT_AI_KEYWORDS,
) -> list[MarketplaceEntry]:
    """Entries whose description or tags match any keyword, case-insensitive."""
    entries = metadata.values() if isinstance(metadata, dict) else metadata
    lowered = tuple(k.lower() for k in keywords)
    selected = []
    for entry in entries:
        haystack = entry.description.lower() + " " + " ".join(entry.categories).lower()
        if any(keyword in haystack for keyword in lowered):
            selected.append(entry)
    selected.sort(key=lambda e: e.extension_id)
    return selected


# ---------------------------------------------------------------------------
# Confusable command labels
# ---------------------------------------------------------------------------

# Latin-script look-alike classes; table-driven so new classes are a one
# line change. Uppercase I maps before case folding, which is what makes
# the classic lowercase-L/uppercase-i swap collapse.
CONFUSABLE_CLASSES = {
    "I": "l",
    "1": "l",
    "|": "l",
    "0": "o",
    "O": "o",
}

_ZERO_WIDTH = re.compile(r"[​‌‍⁠﻿]")


@dataclass(frozen=True)
class ConfusablePair:
    extension_a: str
    label_a: str
    extension_b: str
    label_b: str
    normalized_form: str
    distance: int


def normalize_label(label: str) -> str:
    """Case-folded, homoglyph-collapsed, zero-width-stripped label form."""
    label = _ZERO_WIDTH.sub("", label)
    label = "".join(CONFUSABLE_CLASSES.get(ch, ch) for ch in label)
    label = label.casefold()
    return " ".join(label.split())


def edit_distance_capped(a: str, b: str, cap: int) -> int:
    """Levenshtein distance, reported as cap+1 once it exceeds the cap."""
    if a == b:
        return 0
    if abs(len(a) - len(b)) > cap:
        return cap + 1
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        best = i
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            value = min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
            current.append(value)
            best = min(best, value)
        if best > cap:
            return cap + 1
        previous = current
    return min(previous[-1], cap + 1)


def detect_confusable_commands(
    contributions: list[tuple[str, str]], max_distance: int = 1
) -> list[ConfusablePair]:
    """Cross-extension pairs of visually confusable command labels.

    ``contributions`` is (extension_id, visible label) across the corpus.
    Pairs are symmetric, reported once in canonical order, and never pair
    an extension with itself. Quadratic in distinct labels, bounded by
    a cheap length filter; command label corpora are small.
    """
    unique = sorted({(ext, label) for ext, label in contributions if label})
    normalized = [normalize_label(label) for _, label in unique]
    pairs: list[ConfusablePair] = []
    for i in range(len(unique)):
        ext_a, label_a = unique[i]
        for j in range(i + 1, len(unique)):
            ext_b, label_b = unique[j]
            if ext_a == ext_b:
                continue
            distance = edit_distance_capped(normalized[i], normalized[j], max_distance)
            if distance > max_distance:
                continue
            pairs.append(
                ConfusablePair(
                    extension_a=ext_a,
                    label_a=label_a,
                    extension_b=ext_b,
                    label_b=label_b,
                    normalized_form=normalized[i],
                    distance=distance,
                )
            )
    pairs.sort(key=lambda p: (p.extension_a, p.label_a, p.extension_b, p.label_b))
    return pairs


def command_labels_from_packages(paths: list) -> list[tuple[str, str]]:
    """(extension id, visible command label) pairs from package manifests.

    The visible label is "category: title" as rendered in the command
    palette, falling back to the command id when no title is declared.
    """
    from .ingest import load_package

    labels = []
    for path in paths:
        package = load_package(path)
        for command in package.manifest.commands:
            if command.title and command.category:
                label = f"{command.category}: {command.title}"
            elif command.title:
                label = command.title
            else:
                label = command.command_id
            labels.append((package.extension_id, label))
    return labels


# ---------------------------------------------------------------------------
# CSV emission (the figures' data, not their rendering)
# ---------------------------------------------------------------------------


def write_measurement_tables(
    out_dir: str | Path,
    reports: list[ExtensionReport],
    metadata: dict[str, MarketplaceEntry] | None = None,
    contributions: list[tuple[str, str]] | None = None,
    max_distance: int = 1,
) -> dict[str, Path]:
    """Write table2_vectors / table3_categories / fig6_popularity /
    fig5_tokens / confusables CSVs; returns name -> path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    def emit(name: str, header: list[str], rows: list[list]):
        path = out_dir / name
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        written[name] = path

    overview = aggregate_per_vector(reports)
    emit(
        "table2_vectors.csv",
        ["vector", "using_extensions", "flagged_extensions", "impacted_pct", "mean_items"],
        [
            [
                row.vector.value,
                row.using_extensions,
                row.flagged_extensions,
                f"{row.impacted_fraction * 100:.2f}",
                f"{row.mean_items:.2f}",
            ]
            for row in overview.vectors
        ],
    )

    emit(
        "fig5_tokens.csv",
        ["token", "count"],
        [[token, count] for token, count in token_frequencies(reports)],
    )

    if metadata is not None:
        categories, _ = aggregate_by_category(reports, metadata)
        emit(
            "table3_categories.csv",
            ["category", "scanned", "flagged", "impacted_pct"],
            [
                [row.category, row.scanned, row.flagged, f"{row.impacted_fraction * 100:.2f}"]
                for row in categories
            ],
        )
        buckets, _ = aggregate_by_popularity(reports, metadata)
        emit(
            "fig6_popularity.csv",
            ["lower", "upper", "scanned", "flagged", "impacted_pct"],
            [
                [
                    bucket.lower,
                    bucket.upper if bucket.upper is not None else "",
                    bucket.scanned,
                    bucket.flagged,
                    f"{bucket.impacted_fraction * 100:.2f}",
                ]
                for bucket in buckets
            ],
        )

    pairs = detect_confusable_commands(contributions or [], max_distance=max_distance)
    emit(
        "confusables.csv",
        ["extension_a", "label_a", "extension_b", "label_b", "normalized_form", "distance"],
        [
            [p.extension_a, p.label_a, p.extension_b, p.label_b, p.normalized_form, p.distance]
            for p in pairs
        ],
    )
    return written
