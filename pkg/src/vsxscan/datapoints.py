"""Candidate exposures: one data point per (vector, text) pair.

Manifest contributions and resolved sink arguments become DataPoints in
one of six vectors. Unresolved sink arguments never become data points;
they are counted in scan diagnostics instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .ingest import (
    ExtensionPackage,
    foreign_command_listeners,
    requested_commands,
    requested_configurations,
)
from .sinks import ApiCallSite, ResolvedString, SinkApi

MANIFEST_FILE = "extension/package.json"


class VectorKind(Enum):
    GLOBAL_STATE = "GlobalState"
    REQUESTED_CONFIGURATION = "RequestedConfiguration"
    USED_CONFIGURATION = "UsedConfiguration"
    INPUT_BOX = "InputBox"
    REQUESTED_COMMAND = "RequestedCommand"
    USED_COMMAND = "UsedCommand"


# Sink kind -> vector. Clipboard reads are evidence only and are handled
# by the scan layer.
SINK_VECTORS: dict[SinkApi, VectorKind] = {
    SinkApi.REGISTER_COMMAND: VectorKind.USED_COMMAND,
    SinkApi.REGISTER_TEXT_EDITOR_COMMAND: VectorKind.USED_COMMAND,
    SinkApi.EXECUTE_COMMAND: VectorKind.USED_COMMAND,
    SinkApi.GET_CONFIGURATION: VectorKind.USED_CONFIGURATION,
    SinkApi.SHOW_INPUT_BOX: VectorKind.INPUT_BOX,
    SinkApi.GLOBAL_STATE_UPDATE: VectorKind.GLOBAL_STATE,
    SinkApi.GLOBAL_STATE_GET: VectorKind.GLOBAL_STATE,
}


@dataclass(frozen=True)
class SourceLocation:
    """Where a data point came from: a source span or a manifest path."""

    file: str
    start: int = 0
    end: int = 0
    pointer: str = ""


@dataclass(frozen=True)
class DataPoint:
    vector: VectorKind
    text: str
    extension_id: str
    location: SourceLocation
    resolution: str = "Literal"


def _manifest_location(pointer: str) -> SourceLocation:
    return SourceLocation(file=MANIFEST_FILE, pointer=pointer)


def _joined(*parts: str) -> str:
    return " | ".join(p for p in parts if p)


def extract_data_points(
    package: ExtensionPackage,
    sites: list[tuple[ApiCallSite, list[ResolvedString]]],
) -> list[DataPoint]:
    """Manifest contributions plus resolved sink texts, deduplicated.

    Deduplication is per extension on (vector, text), keeping the first
    occurrence: manifest points first, then source sites in file order.
    """
    points: list[DataPoint] = []
    seen: set[tuple[VectorKind, str]] = set()

    def add(vector: VectorKind, text: str, location: SourceLocation, resolution: str):
        text = text.strip()
        if not text:
            return
        key = (vector, text)
        if key in seen:
            return
        seen.add(key)
        points.append(
            DataPoint(
                vector=vector,
                text=text,
                extension_id=package.extension_id,
                location=location,
                resolution=resolution,
            )
        )

    manifest = package.manifest
    commands = requested_commands(manifest)
    for command in commands:
        add(
            VectorKind.REQUESTED_COMMAND,
            _joined(command.title, command.command_id),
            _manifest_location(f"contributes.commands/{command.command_id}"),
            "Manifest",
        )
    for config in requested_configurations(manifest):
        add(
            VectorKind.REQUESTED_CONFIGURATION,
            _joined(config.key, config.description),
            _manifest_location(f"contributes.configuration/{config.key}"),
            "Manifest",
        )
    for command_id in foreign_command_listeners(manifest, commands):
        add(
            VectorKind.USED_COMMAND,
            command_id,
            _manifest_location(f"activationEvents/onCommand:{command_id}"),
            "Manifest",
        )

    for site, resolutions in sites:
        vector = SINK_VECTORS.get(site.api)
        if vector is None:
            continue
        for resolved in resolutions:
            if not resolved.resolved:
                continue
            add(
                vector,
                resolved.value,
                SourceLocation(file=site.file, start=site.span[0], end=site.span[1]),
                resolved.status.value,
            )

    return points
