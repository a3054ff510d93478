"""vsxscan: credential-exposure scanner for VSCode extension packages."""

__version__ = "0.1.0"

from .classifier import (
    ClassifierModel,
    EvalMetrics,
    Label,
    LabeledDataPoint,
    Lexicon,
    classify,
    evaluate,
    featurize,
    load_model,
    save_model,
    train,
)
from .datapoints import DataPoint, SourceLocation, VectorKind, extract_data_points
from .errors import VsxScanError
from .ingest import (
    ExtensionManifest,
    ExtensionPackage,
    foreign_command_listeners,
    load_package,
    requested_commands,
    requested_configurations,
    unpack_vsix,
)
from .jsparse import SyntaxTree, parse_source
from .pdg import ProgramDependencyGraph, build_pdg
from .scanner import (
    ExtensionReport,
    FindingRecord,
    ScanConfig,
    ScanStatus,
    ScanSummary,
    scan_corpus,
    scan_extension,
)
from .sinks import (
    ApiCallSite,
    ResolvedString,
    SinkApi,
    find_api_call_sites,
    resolve_string,
    trace_arguments,
)

__all__ = [
    "ApiCallSite",
    "ClassifierModel",
    "DataPoint",
    "EvalMetrics",
    "ExtensionManifest",
    "ExtensionPackage",
    "ExtensionReport",
    "FindingRecord",
    "Label",
    "LabeledDataPoint",
    "Lexicon",
    "ProgramDependencyGraph",
    "ResolvedString",
    "ScanConfig",
    "ScanStatus",
    "ScanSummary",
    "SinkApi",
    "SourceLocation",
    "SyntaxTree",
    "VectorKind",
    "VsxScanError",
    "build_pdg",
    "classify",
    "evaluate",
    "extract_data_points",
    "featurize",
    "find_api_call_sites",
    "foreign_command_listeners",
    "load_model",
    "load_package",
    "parse_source",
    "requested_commands",
    "requested_configurations",
    "resolve_string",
    "save_model",
    "scan_corpus",
    "scan_extension",
    "trace_arguments",
    "train",
    "unpack_vsix",
]
