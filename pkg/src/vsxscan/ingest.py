"""Unpack extension packages and extract manifest-level metadata.

A package is either a ``.vsix`` archive (a ZIP with the manifest at
``extension/package.json``) or an already-unpacked directory. Ingestion
yields the declared commands, configuration properties, and activation
events, plus the set of analyzable script sources.
"""

from __future__ import annotations

import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ManifestMissing, ManifestUnparseable, NotAnArchive

SCRIPT_SUFFIXES = (".js", ".cjs", ".mjs")
MANIFEST_ENTRY = "extension/package.json"

# Retain at most this much script text per package; the largest files are
# excluded first so many small entry points survive one huge bundle.
SOURCE_BYTE_CAP = 20 * 1024 * 1024


@dataclass(frozen=True)
class CommandContribution:
    command_id: str
    title: str = ""
    category: str | None = None


@dataclass(frozen=True)
class ConfigurationContribution:
    key: str
    description: str = ""
    value_type: str = ""
    default_present: bool = False


@dataclass
class ExtensionManifest:
    raw: dict
    commands: list[CommandContribution] = field(default_factory=list)
    configurations: list[ConfigurationContribution] = field(default_factory=list)
    activation_events: list[str] = field(default_factory=list)
    display_name: str = ""
    description: str = ""
    categories: list[str] = field(default_factory=list)


@dataclass
class SourceFileSet:
    files: list[tuple[str, str]] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class ExtensionPackage:
    extension_id: str
    version: str
    manifest: ExtensionManifest
    sources: SourceFileSet
    origin_path: str


def parse_manifest_text(text: str) -> dict:
    """Parse a manifest document, tolerating the relaxed JSON dialect.

    Strict parsing is attempted first; on failure comments and trailing
    commas are stripped and parsing retried before giving up.
    """
    try:
        data = json.loads(text)
    except ValueError:
        try:
            data = json.loads(_strip_relaxed_json(text))
        except ValueError as exc:
            raise ManifestUnparseable(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ManifestUnparseable("manifest root is not an object")
    return data


def _strip_relaxed_json(text: str) -> str:
    # Single pass removing // and /* */ comments and trailing commas,
    # tracking string state so quoted content is never touched.
    out: list[str] = []
    i, n = 0, len(text)
    in_string = False
    while i < n:
        ch = text[i]
        if in_string:
            out.append(ch)
            if ch == "\\" and i + 1 < n:
                out.append(text[i + 1])
                i += 2
                continue
            if ch == '"':
                in_string = False
            i += 1
            continue
        if ch == '"':
            in_string = True
            out.append(ch)
            i += 1
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "*":
            i += 2
            while i + 1 < n and not (text[i] == "*" and text[i + 1] == "/"):
                i += 1
            i += 2
            continue
        if ch == ",":
            j = i + 1
            while j < n and text[j] in " \t\r\n":
                j += 1
            if j < n and text[j] in "}]":
                i += 1
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def _clean_id_part(value) -> str:
    # Dots inside publisher or name would break the publisher.name split.
    return str(value).strip().replace(".", "-")


def build_manifest(data: dict) -> ExtensionManifest:
    contributes = data.get("contributes")
    if not isinstance(contributes, dict):
        contributes = {}

    commands = _parse_commands(contributes.get("commands"))
    configurations = _parse_configurations(contributes.get("configuration"))

    events = []
    raw_events = data.get("activationEvents")
    if isinstance(raw_events, list):
        events = [e for e in raw_events if isinstance(e, str)]

    categories = data.get("categories")
    if not isinstance(categories, list):
        categories = []
    categories = [c for c in categories if isinstance(c, str)]

    return ExtensionManifest(
        raw=data,
        commands=commands,
        configurations=configurations,
        activation_events=events,
        display_name=str(data.get("displayName") or ""),
        description=str(data.get("description") or ""),
        categories=categories,
    )


def _parse_commands(block) -> list[CommandContribution]:
    if isinstance(block, dict):
        block = [block]
    if not isinstance(block, list):
        return []
    seen: set[str] = set()
    result = []
    for entry in block:
        if not isinstance(entry, dict):
            continue
        command_id = entry.get("command")
        if not isinstance(command_id, str) or not command_id:
            continue
        if command_id in seen:
            continue
        seen.add(command_id)
        title = entry.get("title")
        category = entry.get("category")
        result.append(
            CommandContribution(
                command_id=command_id,
                title=title if isinstance(title, str) else "",
                category=category if isinstance(category, str) else None,
            )
        )
    return result


def _parse_configurations(block) -> list[ConfigurationContribution]:
    if isinstance(block, dict):
        blocks = [block]
    elif isinstance(block, list):
        blocks = [b for b in block if isinstance(b, dict)]
    else:
        return []
    seen: set[str] = set()
    result = []
    for blk in blocks:
        properties = blk.get("properties")
        if not isinstance(properties, dict):
            continue
        for key, prop in properties.items():
            if not isinstance(key, str) or not key or key in seen:
                continue
            seen.add(key)
            if not isinstance(prop, dict):
                prop = {}
            description = prop.get("description")
            if not isinstance(description, str):
                description = prop.get("markdownDescription")
            if not isinstance(description, str):
                description = ""
            value_type = prop.get("type", "")
            if not isinstance(value_type, str):
                value_type = json.dumps(value_type)
            result.append(
                ConfigurationContribution(
                    key=key,
                    description=description,
                    value_type=value_type,
                    default_present="default" in prop,
                )
            )
    return result


def requested_commands(manifest: ExtensionManifest) -> list[CommandContribution]:
    """Declared commands, deduplicated by id keeping the first declaration."""
    return list(manifest.commands)


def requested_configurations(manifest: ExtensionManifest) -> list[ConfigurationContribution]:
    """Declared configuration properties across all configuration blocks."""
    return list(manifest.configurations)


def foreign_command_listeners(
    manifest: ExtensionManifest, own_commands: list[CommandContribution]
) -> list[str]:
    """Command ids this extension listens for but does not declare itself.

    An ``onCommand:<id>`` activation event pointing at another extension's
    command is the stealth command-listening signal.
    """
    own_ids = {c.command_id for c in own_commands}
    result = []
    seen: set[str] = set()
    for event in manifest.activation_events:
        if not event.startswith("onCommand:"):
            continue
        command_id = event[len("onCommand:"):]
        if not command_id or command_id in own_ids or command_id in seen:
            continue
        seen.add(command_id)
        result.append(command_id)
    return result


def _is_script_path(relpath: str) -> bool:
    return relpath.lower().endswith(SCRIPT_SUFFIXES)


def _in_bundled_deps(relpath: str) -> bool:
    parts = relpath.replace("\\", "/").split("/")
    return "node_modules" in parts


def _apply_size_cap(
    entries: list[tuple[str, bytes]], cap: int
) -> tuple[list[tuple[str, bytes]], list[str]]:
    total = sum(len(data) for _, data in entries)
    if total <= cap:
        return entries, []
    by_size = sorted(entries, key=lambda e: (len(e[1]), e[0]))
    dropped: list[str] = []
    while by_size and total > cap:
        path, data = by_size.pop()
        total -= len(data)
        dropped.append(path)
    kept_paths = {p for p, _ in by_size}
    kept = [e for e in entries if e[0] in kept_paths]
    return kept, dropped


def _collect_sources(entries: list[tuple[str, bytes]], cap: int = SOURCE_BYTE_CAP) -> SourceFileSet:
    sources = SourceFileSet()
    script_entries: list[tuple[str, bytes]] = []
    for relpath, data in entries:
        if not _is_script_path(relpath):
            continue
        if _in_bundled_deps(relpath):
            sources.skipped.append((relpath, "node_modules"))
            continue
        script_entries.append((relpath, data))

    kept, dropped = _apply_size_cap(script_entries, cap)
    for path in sorted(dropped):
        sources.skipped.append((path, "size-cap"))
    for relpath, data in kept:
        sources.files.append((relpath, data.decode("utf-8", errors="replace")))
    sources.files.sort(key=lambda e: e[0])
    sources.skipped.sort(key=lambda e: e[0])
    return sources


def _package_from_parts(
    manifest_text: str, entries: list[tuple[str, bytes]], origin: str
) -> ExtensionPackage:
    data = parse_manifest_text(manifest_text)
    publisher = _clean_id_part(data.get("publisher") or "unknown")
    name = _clean_id_part(data.get("name") or "unknown")
    if not publisher:
        publisher = "unknown"
    if not name:
        name = "unknown"
    return ExtensionPackage(
        extension_id=f"{publisher}.{name}",
        version=str(data.get("version") or "0.0.0"),
        manifest=build_manifest(data),
        sources=_collect_sources(entries),
        origin_path=origin,
    )


def unpack_vsix(archive_path: str | Path) -> ExtensionPackage:
    """Unpack a ``.vsix`` archive into an :class:`ExtensionPackage`.

    Raises :class:`NotAnArchive` when the path is not a ZIP file,
    :class:`ManifestMissing` when ``extension/package.json`` is absent, and
    :class:`ManifestUnparseable` when the manifest cannot be parsed.
    """
    archive_path = Path(archive_path)
    try:
        zf = zipfile.ZipFile(archive_path)
    except zipfile.BadZipFile as exc:
        raise NotAnArchive(f"{archive_path}: {exc}") from None

    with zf:
        names = zf.namelist()
        if MANIFEST_ENTRY not in names:
            raise ManifestMissing(f"{archive_path}: no {MANIFEST_ENTRY} entry")
        manifest_text = zf.read(MANIFEST_ENTRY).decode("utf-8", errors="replace")
        entries = []
        for name in names:
            if name.endswith("/") or not name.startswith("extension/"):
                continue
            relpath = name[len("extension/"):]
            if not relpath or relpath == "package.json":
                continue
            if not _is_script_path(relpath):
                continue
            entries.append((relpath, zf.read(name)))

    return _package_from_parts(manifest_text, entries, str(archive_path))


def unpack_directory(root: str | Path) -> ExtensionPackage:
    """Ingest an already-unpacked extension directory.

    The manifest may sit at ``extension/package.json`` or ``package.json``
    relative to the root.
    """
    root = Path(root)
    base = None
    for candidate in (root / "extension", root):
        if (candidate / "package.json").is_file():
            base = candidate
            break
    if base is None:
        raise ManifestMissing(f"{root}: no package.json found")

    manifest_text = (base / "package.json").read_text(encoding="utf-8", errors="replace")
    entries = []
    for path in sorted(base.rglob("*")):
        if not path.is_file():
            continue
        relpath = path.relative_to(base).as_posix()
        if relpath == "package.json" or not _is_script_path(relpath):
            continue
        entries.append((relpath, path.read_bytes()))

    return _package_from_parts(manifest_text, entries, str(root))


def load_package(path: str | Path) -> ExtensionPackage:
    """Load a package from a ``.vsix`` archive or an unpacked directory."""
    path = Path(path)
    if path.is_dir():
        return unpack_directory(path)
    return unpack_vsix(path)
