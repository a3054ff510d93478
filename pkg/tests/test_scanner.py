"""Scan orchestration: statuses, fallbacks, budgets, corpus determinism."""

from __future__ import annotations

import dataclasses

import pytest

from tests.conftest import make_package_dir, make_vsix, requires_node
from tests.corpus import BENIGN, VULNERABLE, build_fixture_corpus
from vsxscan.datapoints import VectorKind
from vsxscan.errors import EmptyCorpus
from vsxscan.marketplace import MarketplaceEntry, write_metadata_snapshot
from vsxscan.scanner import (
    ScanConfig,
    ScanStatus,
    discover_packages,
    scan_corpus,
    scan_extension,
    summarize_reports,
)

pytestmark = [requires_node]


@pytest.fixture()
def trained_config(reference_model):
    return ScanConfig(model=reference_model, record_timing=False)


def test_listing1_fixture_produces_both_findings(tmp_path, trained_config):
    path = make_vsix(
        tmp_path / "easycode.vsix",
        {
            "publisher": "easycode",
            "name": "easycode",
            "contributes": {
                "configuration": {
                    "properties": {
                        "easycode.openAI ApiKey": {
                            "type": "string",
                            "description": "Your OpenAI Api Key",
                        }
                    }
                }
            },
        },
        {
            "out/main.js": "const k = vscode.workspace.getConfiguration().get('easycode.openAI ApiKey');"
        },
    )
    report = scan_extension(path, trained_config)
    assert report.status is ScanStatus.FULL
    found = {(f.data_point.vector, f.data_point.text) for f in report.findings}
    assert (
        VectorKind.REQUESTED_CONFIGURATION,
        "easycode.openAI ApiKey | Your OpenAI Api Key",
    ) in found
    assert (VectorKind.USED_CONFIGURATION, "easycode.openAI ApiKey") in found


def test_benign_theme_has_no_findings(tmp_path, trained_config):
    path = make_package_dir(tmp_path / "theme", {"publisher": "t", "name": "theme"})
    report = scan_extension(path, trained_config)
    assert report.status in (ScanStatus.FULL, ScanStatus.METADATA_ONLY)
    assert report.findings == []


def test_unparseable_script_degrades_to_metadata_only(tmp_path, trained_config):
    path = make_package_dir(
        tmp_path / "broken",
        {
            "publisher": "my",
            "name": "ext",
            "contributes": {
                "configuration": {
                    "properties": {"myext.password": {"description": "Account password"}}
                }
            },
        },
        {"main.js": "function f( {"},
    )
    report = scan_extension(path, trained_config)
    assert report.status is ScanStatus.METADATA_ONLY
    assert report.diagnostics.parse_errors == 1
    texts = {f.data_point.text for f in report.findings}
    assert "myext.password | Account password" in texts


def test_failed_manifest_yields_failed_report_with_no_findings(tmp_path, trained_config):
    bogus = tmp_path / "bogus.vsix"
    bogus.write_bytes(b"not a zip at all")
    report = scan_extension(bogus, trained_config)
    assert report.status is ScanStatus.FAILED
    assert report.findings == []


def test_unreadable_path_raises(tmp_path, trained_config):
    with pytest.raises(FileNotFoundError):
        scan_extension(tmp_path / "missing.vsix", trained_config)


def test_regex_fallback_still_finds_literal_sink(tmp_path, trained_config):
    path = make_package_dir(
        tmp_path / "half-broken",
        {"publisher": "p", "name": "n"},
        {"bad.js": "function f( { e.globalState.update('chatgpt-gpt3-apiKey', v)"},
    )
    report = scan_extension(path, trained_config)
    assert report.diagnostics.files_fallback == 1
    assert any(f.data_point.text == "chatgpt-gpt3-apiKey" for f in report.findings)


def test_clipboard_sites_attach_as_evidence(tmp_path, trained_config):
    path = make_package_dir(
        tmp_path / "clip",
        {"publisher": "p", "name": "n"},
        {
            "main.js": (
                "vscode.env.clipboard.readText();\n"
                "e.globalState.update('saved-password', v);\n"
            )
        },
    )
    report = scan_extension(path, trained_config)
    assert report.diagnostics.clipboard_sites == 1
    finding = next(f for f in report.findings if f.data_point.text == "saved-password")
    assert any(e.file == "main.js" and e.start == 0 for e in finding.evidence)
    assert len(finding.evidence) == 2


def test_unresolved_sinks_counted_in_diagnostics(tmp_path, trained_config):
    path = make_package_dir(
        tmp_path / "unres",
        {"publisher": "p", "name": "n"},
        {"main.js": "e.globalState.update(compute(), v);"},
    )
    report = scan_extension(path, trained_config)
    assert report.diagnostics.unresolved_sinks == 1
    assert report.findings == []


def test_data_point_usage_counts(tmp_path, trained_config):
    path = make_package_dir(
        tmp_path / "counts",
        {"publisher": "p", "name": "n"},
        {"main.js": "e.globalState.update('alpha', 1); e.globalState.get('beta');"},
    )
    report = scan_extension(path, trained_config)
    assert report.diagnostics.data_points.get("GlobalState") == 2


def test_per_extension_budget_skips_remaining_files(tmp_path, reference_model):
    files = {f"f{i}.js": f"var x{i} = {i};" for i in range(6)}
    path = make_package_dir(tmp_path / "slow", {"publisher": "p", "name": "n"}, files)
    config = ScanConfig(model=reference_model, per_extension_budget=0.0, record_timing=True)
    report = scan_extension(path, config)
    assert report.diagnostics.files_skipped == 6
    assert report.diagnostics.timeouts == 6
    # Budget compliance: elapsed stays within one file-budget granule.
    assert report.timing <= config.per_file_budget


def test_discover_packages_mixed_layouts(tmp_path):
    make_vsix(tmp_path / "a.vsix", {"publisher": "a", "name": "a"})
    make_package_dir(tmp_path / "b", {"publisher": "b", "name": "b"})
    make_package_dir(tmp_path / "c", {"publisher": "c", "name": "c"}, nested=False)
    (tmp_path / "noise").mkdir()
    (tmp_path / "readme.txt").write_text("hi")
    found = [p.name for p in discover_packages(tmp_path)]
    assert found == ["a.vsix", "b", "c"]


def test_scan_corpus_empty_raises(tmp_path):
    (tmp_path / "nothing").mkdir()
    with pytest.raises(EmptyCorpus):
        scan_corpus(tmp_path / "nothing", ScanConfig())


def test_scan_corpus_flags_planted_fixtures(tmp_path, trained_config):
    corpus_dir = tmp_path / "corpus"
    specs = build_fixture_corpus(corpus_dir)
    summary, reports = scan_corpus(corpus_dir, trained_config)
    assert summary.total_scanned == len(specs)
    assert summary.flagged == len(VULNERABLE)
    assert summary.flagged_fraction == pytest.approx(len(VULNERABLE) / len(specs))
    by_id = {r.extension_id: r for r in reports}
    for spec in BENIGN:
        assert by_id[spec.name].findings == [], spec.name


def test_crash_isolation_bad_package_does_not_block_others(tmp_path, trained_config):
    make_vsix(tmp_path / "good.vsix", {"publisher": "ok", "name": "fine"})
    (tmp_path / "bad.vsix").write_bytes(b"garbage")
    summary, reports = scan_corpus(tmp_path, trained_config)
    assert summary.total_scanned == 2
    statuses = {r.extension_id: r.status for r in reports}
    assert statuses["ok.fine"] is ScanStatus.FULL or statuses["ok.fine"] is ScanStatus.METADATA_ONLY
    assert any(r.status is ScanStatus.FAILED for r in reports)


def test_parallel_equals_serial(tmp_path, reference_model):
    corpus_dir = tmp_path / "corpus"
    build_fixture_corpus(corpus_dir)
    serial_config = ScanConfig(model=reference_model, workers=1, record_timing=False)
    parallel_config = ScanConfig(model=reference_model, workers=8, record_timing=False)
    serial_summary, serial_reports = scan_corpus(corpus_dir, serial_config)
    parallel_summary, parallel_reports = scan_corpus(corpus_dir, parallel_config)
    assert serial_reports == parallel_reports
    assert serial_summary == parallel_summary


def test_install_count_filter_only_with_metadata(tmp_path, trained_config):
    corpus_dir = tmp_path / "corpus"
    make_vsix(corpus_dir / "popular.vsix", {"publisher": "pop", "name": "ular"})
    make_vsix(corpus_dir / "tiny.vsix", {"publisher": "ti", "name": "ny"})
    snapshot_path = tmp_path / "meta.tsv"
    write_metadata_snapshot(
        [
            MarketplaceEntry(extension_id="pop.ular", install_count=5000),
            MarketplaceEntry(extension_id="ti.ny", install_count=3),
        ],
        snapshot_path,
    )
    unfiltered_summary, _ = scan_corpus(corpus_dir, trained_config)
    assert unfiltered_summary.total_scanned == 2

    filtered_config = dataclasses.replace(trained_config, metadata_path=str(snapshot_path))
    filtered_summary, filtered_reports = scan_corpus(corpus_dir, filtered_config)
    assert filtered_summary.total_scanned == 1
    assert filtered_reports[0].extension_id == "pop.ular"


def test_summary_conservation(tmp_path, trained_config):
    corpus_dir = tmp_path / "corpus"
    build_fixture_corpus(corpus_dir)
    summary, reports = scan_corpus(corpus_dir, trained_config)
    assert summary.flagged <= summary.total_scanned
    per_vector_total = sum(v.extensions for v in summary.per_vector.values())
    assert per_vector_total >= summary.flagged
    recomputed = summarize_reports(reports, summary.wall_time)
    assert recomputed == summary
