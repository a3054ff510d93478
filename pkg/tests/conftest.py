"""Shared fixtures: archive builders and the trained reference model."""

from __future__ import annotations

import json
import zipfile
from pathlib import Path

import pytest

from vsxscan import jsparse
from vsxscan.classifier import TrainConfig, read_labeled_corpus, train

DATA_DIR = Path(__file__).parent / "data"

requires_node = pytest.mark.skipif(
    not jsparse.engine_available(), reason="node binary not available"
)


def make_vsix(path: Path, manifest: dict, files: dict[str, str] | None = None) -> Path:
    """Write a minimal .vsix archive with the given manifest and sources."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(path, "w") as zf:
        zf.writestr("extension/package.json", json.dumps(manifest))
        for relpath, content in (files or {}).items():
            zf.writestr(f"extension/{relpath}", content)
    return path


def make_package_dir(path: Path, manifest: dict, files: dict[str, str] | None = None, nested: bool = True) -> Path:
    """Write an unpacked extension directory.

    ``nested`` places the manifest at extension/package.json; otherwise at
    the directory root.
    """
    base = path / "extension" if nested else path
    base.mkdir(parents=True, exist_ok=True)
    (base / "package.json").write_text(json.dumps(manifest), encoding="utf-8")
    for relpath, content in (files or {}).items():
        target = base / relpath
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(content, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def labeled_corpus():
    return read_labeled_corpus(DATA_DIR / "labeled_fixtures.tsv")


@pytest.fixture(scope="session")
def reference_model(labeled_corpus):
    """The reference classifier trained on the full labeled fixture corpus."""
    return train(labeled_corpus, TrainConfig(seed=0))
