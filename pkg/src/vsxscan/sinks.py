"""Sink API call sites and recovery of the strings flowing into them.

The catalog maps trailing member paths (``.globalState.update(``, bare
``registerCommand(``, ...) to sink kinds. For each site the traced
argument position is resolved by depth-first traversal along incoming
data edges: literals directly, no-substitution templates as literals,
``+`` of two resolvable strings as concatenations, and identifiers with
exactly one reaching constant definition as propagated constants.
Everything else — including any intra-procedural ambiguity — is
Unresolved rather than guessed.

When a file cannot be parsed or graphed, :func:`regex_fallback_sites`
recovers catalog patterns with literal arguments straight from the text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .pdg import ProgramDependencyGraph

DEFAULT_DEPTH_BUDGET = 32

# Structural recursion cap for concatenation chains, independent of the
# data-edge hop budget; minified bundles build very long "+" chains.
_MAX_STRUCT_DEPTH = 200


class SinkApi(Enum):
    REGISTER_COMMAND = "RegisterCommand"
    REGISTER_TEXT_EDITOR_COMMAND = "RegisterTextEditorCommand"
    GET_CONFIGURATION = "GetConfiguration"
    SHOW_INPUT_BOX = "ShowInputBox"
    GLOBAL_STATE_UPDATE = "GlobalStateUpdate"
    GLOBAL_STATE_GET = "GlobalStateGet"
    EXECUTE_COMMAND = "ExecuteCommand"
    CLIPBOARD_READ_TEXT = "ClipboardReadText"


# Member-path suffix -> sink kind. Longer patterns are matched first.
DEFAULT_SINK_CATALOG: dict[tuple[str, ...], SinkApi] = {
    ("registerCommand",): SinkApi.REGISTER_COMMAND,
    ("registerTextEditorCommand",): SinkApi.REGISTER_TEXT_EDITOR_COMMAND,
    ("getConfiguration",): SinkApi.GET_CONFIGURATION,
    ("showInputBox",): SinkApi.SHOW_INPUT_BOX,
    ("globalState", "update"): SinkApi.GLOBAL_STATE_UPDATE,
    ("globalState", "get"): SinkApi.GLOBAL_STATE_GET,
    ("executeCommand",): SinkApi.EXECUTE_COMMAND,
    ("env", "clipboard", "readText"): SinkApi.CLIPBOARD_READ_TEXT,
}

INPUT_BOX_TEXT_PROPERTIES = ("prompt", "title", "placeHolder")


class ResolutionStatus(Enum):
    LITERAL = "Literal"
    CONCATENATED = "Concatenated"
    PROPAGATED_CONST = "PropagatedConst"
    UNRESOLVED = "Unresolved"


_STATUS_RANK = {
    ResolutionStatus.LITERAL: 0,
    ResolutionStatus.CONCATENATED: 1,
    ResolutionStatus.PROPAGATED_CONST: 2,
}


@dataclass(frozen=True)
class ResolvedString:
    status: ResolutionStatus
    value: str
    origin_spans: tuple[tuple[int, int], ...] = ()

    @property
    def resolved(self) -> bool:
        return self.status is not ResolutionStatus.UNRESOLVED


UNRESOLVED = ResolvedString(ResolutionStatus.UNRESOLVED, "")


@dataclass(frozen=True)
class ApiCallSite:
    api: SinkApi
    node_id: int
    span: tuple[int, int]
    file: str


def member_chain(ast: dict | None) -> list[str]:
    """The dotted member path of a callee, outermost receiver first.

    Computed properties contribute their literal string when constant,
    otherwise ``*``; call results in the spine contribute ``()`` so that
    ``getConfiguration('s').update`` never masquerades as
    ``globalState.update``.
    """
    parts: list[str] = []
    node = ast
    while isinstance(node, dict):
        kind = node.get("type")
        if kind == "MemberExpression":
            prop = node.get("property") or {}
            if node.get("computed"):
                if prop.get("type") == "Literal" and isinstance(prop.get("value"), str):
                    parts.append(prop["value"])
                else:
                    parts.append("*")
            else:
                parts.append(prop.get("name", "*"))
            node = node.get("object")
        elif kind == "Identifier":
            parts.append(node.get("name", "*"))
            break
        elif kind == "ThisExpression":
            parts.append("this")
            break
        elif kind in ("CallExpression", "NewExpression"):
            parts.append("()")
            break
        elif kind in ("ChainExpression", "ParenthesizedExpression"):
            node = node.get("expression")
        else:
            parts.append("*")
            break
    parts.reverse()
    return parts


def find_api_call_sites(
    pdg: ProgramDependencyGraph,
    catalog: dict[tuple[str, ...], SinkApi] | None = None,
) -> list[ApiCallSite]:
    """All call expressions whose callee path suffix-matches the catalog."""
    catalog = catalog or DEFAULT_SINK_CATALOG
    patterns = sorted(catalog, key=len, reverse=True)
    sites = []
    for node_id in sorted(pdg.nodes):
        node = pdg.nodes[node_id]
        if node.kind != "CallExpression":
            continue
        chain = member_chain(node.ast.get("callee"))
        if not chain:
            continue
        for pattern in patterns:
            if len(chain) >= len(pattern) and tuple(chain[-len(pattern):]) == pattern:
                sites.append(ApiCallSite(catalog[pattern], node_id, node.span, pdg.file))
                break
    sites.sort(key=lambda s: (s.span[0], s.node_id))
    return sites


# ---------------------------------------------------------------------------
# String resolution over the graph
# ---------------------------------------------------------------------------


def resolve_string(
    pdg: ProgramDependencyGraph, node_id: int, depth_budget: int = DEFAULT_DEPTH_BUDGET
) -> ResolvedString:
    """Resolve the string value produced by an expression node, if constant."""
    node = pdg.nodes.get(node_id)
    if node is None:
        return UNRESOLVED
    return _resolve_ast(pdg, node.ast, depth_budget, _MAX_STRUCT_DEPTH)


def _resolve_ast(pdg: ProgramDependencyGraph, ast: dict, depth: int, struct: int) -> ResolvedString:
    if depth < 0 or struct <= 0 or not isinstance(ast, dict):
        return UNRESOLVED
    kind = ast.get("type")
    span = (ast.get("start", 0), ast.get("end", 0))

    if kind == "Literal":
        value = ast.get("value")
        if isinstance(value, str):
            return ResolvedString(ResolutionStatus.LITERAL, value, (span,))
        return UNRESOLVED

    if kind == "TemplateLiteral":
        if ast.get("expressions"):
            return UNRESOLVED
        quasis = ast.get("quasis") or []
        cooked = (quasis[0].get("value") or {}).get("cooked") if len(quasis) == 1 else None
        if isinstance(cooked, str):
            return ResolvedString(ResolutionStatus.LITERAL, cooked, (span,))
        return UNRESOLVED

    if kind == "BinaryExpression" and ast.get("operator") == "+":
        left = _resolve_ast(pdg, ast.get("left"), depth, struct - 1)
        if not left.resolved:
            return UNRESOLVED
        right = _resolve_ast(pdg, ast.get("right"), depth, struct - 1)
        if not right.resolved:
            return UNRESOLVED
        return ResolvedString(
            ResolutionStatus.CONCATENATED, left.value + right.value,
            left.origin_spans + right.origin_spans,
        )

    if kind in ("ParenthesizedExpression", "ChainExpression"):
        return _resolve_ast(pdg, ast.get("expression"), depth, struct - 1)

    if kind == "Identifier":
        node = pdg.node_for_ast(ast)
        if node is None:
            return UNRESOLVED
        def_ids = sorted(set(pdg.data_predecessors(node.id)))
        if len(def_ids) != 1:
            return UNRESOLVED
        definition = pdg.defs.get(def_ids[0])
        if definition is None or definition.value_ast is None:
            return UNRESOLVED
        inner = _resolve_ast(pdg, definition.value_ast, depth - 1, struct - 1)
        if not inner.resolved:
            return UNRESOLVED
        def_span = pdg.nodes[def_ids[0]].span
        return ResolvedString(
            ResolutionStatus.PROPAGATED_CONST, inner.value, (def_span,) + inner.origin_spans
        )

    return UNRESOLVED


def _combine(parts: list[ResolvedString], joined: str) -> ResolvedString:
    status = max((p.status for p in parts), key=lambda s: _STATUS_RANK[s])
    spans = tuple(s for p in parts for s in p.origin_spans)
    return ResolvedString(status, joined, spans)


def _first_plain_argument(ast: dict) -> dict | None:
    args = ast.get("arguments") or []
    if not args:
        return None
    arg = args[0]
    if not isinstance(arg, dict) or arg.get("type") == "SpreadElement":
        return None
    return arg


def _resolve_argument(pdg: ProgramDependencyGraph, call_ast: dict, depth: int) -> ResolvedString:
    arg = _first_plain_argument(call_ast)
    if arg is None:
        return UNRESOLVED
    return _resolve_ast(pdg, arg, depth, _MAX_STRUCT_DEPTH)


def _object_literal_for(pdg: ProgramDependencyGraph, ast: dict, depth: int) -> tuple[dict | None, int]:
    """Follow an identifier to an object literal it is bound to, if unambiguous."""
    if not isinstance(ast, dict):
        return None, depth
    if ast.get("type") == "ObjectExpression":
        return ast, depth
    if ast.get("type") == "Identifier" and depth > 0:
        node = pdg.node_for_ast(ast)
        if node is None:
            return None, depth
        def_ids = sorted(set(pdg.data_predecessors(node.id)))
        if len(def_ids) != 1:
            return None, depth
        definition = pdg.defs.get(def_ids[0])
        if definition is None or definition.value_ast is None:
            return None, depth
        return _object_literal_for(pdg, definition.value_ast, depth - 1)
    return None, depth


def _resolve_input_box(pdg: ProgramDependencyGraph, call_ast: dict, depth: int) -> ResolvedString:
    arg = _first_plain_argument(call_ast)
    if arg is None:
        return UNRESOLVED
    options, depth = _object_literal_for(pdg, arg, depth)
    if options is None:
        return UNRESOLVED
    wanted = {}
    for prop in options.get("properties") or []:
        if prop.get("type") != "Property" or prop.get("computed"):
            continue
        key = prop.get("key") or {}
        name = key.get("name") if key.get("type") == "Identifier" else key.get("value")
        if name in INPUT_BOX_TEXT_PROPERTIES and name not in wanted:
            resolved = _resolve_ast(pdg, prop.get("value"), depth, _MAX_STRUCT_DEPTH)
            if resolved.resolved:
                wanted[name] = resolved
    parts = [wanted[n] for n in INPUT_BOX_TEXT_PROPERTIES if n in wanted]
    if not parts:
        return UNRESOLVED
    if len(parts) == 1:
        return parts[0]
    return _combine(parts, " | ".join(p.value for p in parts))


def _chained_accessor_call(pdg: ProgramDependencyGraph, config_call: dict) -> dict | None:
    """The ``.get(...)``/``.update(...)`` call chained onto a
    ``getConfiguration`` call, directly or through a single-definition
    variable binding."""
    parent = pdg.parent_of(config_call)
    candidate = _accessor_from_member(pdg, parent, config_call)
    if candidate is not None:
        return candidate

    # const cfg = getConfiguration('s'); cfg.get('k')
    if isinstance(parent, dict) and parent.get("type") in ("VariableDeclarator", "AssignmentExpression"):
        def_node = pdg.node_for_ast(parent)
        if def_node is None or def_node.id not in pdg.defs:
            return None
        if len(pdg.sibling_defs(def_node.id)) != 1:
            return None
        for use_id in sorted(pdg.data_successors(def_node.id)):
            use_ast = pdg.nodes[use_id].ast
            use_parent = pdg.parent_of(use_ast)
            candidate = _accessor_from_member(pdg, use_parent, use_ast)
            if candidate is not None:
                return candidate
    return None


def _accessor_from_member(pdg: ProgramDependencyGraph, member: dict | None, receiver: dict) -> dict | None:
    if not isinstance(member, dict) or member.get("type") != "MemberExpression":
        return None
    if member.get("object") is not receiver or member.get("computed"):
        return None
    prop = member.get("property") or {}
    if prop.get("name") not in ("get", "update"):
        return None
    call = pdg.parent_of(member)
    if isinstance(call, dict) and call.get("type") == "CallExpression" and call.get("callee") is member:
        return call
    return None


def _resolve_configuration_key(pdg: ProgramDependencyGraph, call_ast: dict, depth: int) -> ResolvedString:
    args = call_ast.get("arguments") or []
    section = _resolve_argument(pdg, call_ast, depth) if args else None

    accessor = _chained_accessor_call(pdg, call_ast)
    if accessor is None:
        # Bare getConfiguration('section'): the section names the exposed
        # settings namespace.
        if section is not None and section.resolved:
            return section
        return UNRESOLVED

    key = _resolve_argument(pdg, accessor, depth)
    if not key.resolved:
        return UNRESOLVED
    if section is None:
        return key
    if not section.resolved:
        return UNRESOLVED
    return _combine([section, key], f"{section.value}.{key.value}")


def trace_arguments(
    pdg: ProgramDependencyGraph,
    site: ApiCallSite,
    depth_budget: int = DEFAULT_DEPTH_BUDGET,
) -> list[ResolvedString]:
    """Recover the text flowing into a sink's traced argument positions."""
    if site.api is SinkApi.CLIPBOARD_READ_TEXT:
        return []
    call_ast = pdg.nodes[site.node_id].ast
    if site.api is SinkApi.SHOW_INPUT_BOX:
        return [_resolve_input_box(pdg, call_ast, depth_budget)]
    if site.api is SinkApi.GET_CONFIGURATION:
        return [_resolve_configuration_key(pdg, call_ast, depth_budget)]
    return [_resolve_argument(pdg, call_ast, depth_budget)]


# ---------------------------------------------------------------------------
# Regex fallback for unparseable or over-budget files
# ---------------------------------------------------------------------------

_QUOTED = r"(['\"`])((?:\\.|(?!\1)[^\\\n])*)\1"

_RX_ARG0 = {
    SinkApi.REGISTER_COMMAND: re.compile(r"\bregisterCommand\s*\(\s*" + _QUOTED),
    SinkApi.REGISTER_TEXT_EDITOR_COMMAND: re.compile(r"\bregisterTextEditorCommand\s*\(\s*" + _QUOTED),
    SinkApi.EXECUTE_COMMAND: re.compile(r"\bexecuteCommand\s*\(\s*" + _QUOTED),
    SinkApi.GLOBAL_STATE_UPDATE: re.compile(r"\bglobalState\s*\.\s*update\s*\(\s*" + _QUOTED),
    SinkApi.GLOBAL_STATE_GET: re.compile(r"\bglobalState\s*\.\s*get\s*\(\s*" + _QUOTED),
}

# The second quoted argument needs shifted backreferences, so this one is
# written out in full rather than composed from _QUOTED.
_RX_CONFIG_SECTION_KEY = re.compile(
    r"\bgetConfiguration\s*\(\s*(['\"`])((?:\\.|(?!\1)[^\\\n])*)\1\s*\)"
    r"\s*\.\s*(?:get|update)\s*\(\s*(['\"`])((?:\\.|(?!\3)[^\\\n])*)\3"
)
_RX_CONFIG_BARE_KEY = re.compile(
    r"\bgetConfiguration\s*\(\s*\)\s*\.\s*(?:get|update)\s*\(\s*" + _QUOTED
)
_RX_CONFIG_SECTION_ONLY = re.compile(r"\bgetConfiguration\s*\(\s*" + _QUOTED + r"\s*\)")
_RX_CLIPBOARD = re.compile(r"\benv\s*\.\s*clipboard\s*\.\s*readText\s*\(")
_RX_INPUT_BOX = re.compile(r"\bshowInputBox\s*\(")
_RX_INPUT_BOX_WINDOW = 400

_SIMPLE_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f", "v": "\v", "0": "\0"}


def _unescape(raw: str) -> str:
    out = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\" and i + 1 < len(raw):
            nxt = raw[i + 1]
            out.append(_SIMPLE_ESCAPES.get(nxt, nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _literal_from_match(quote: str, raw: str) -> str | None:
    if quote == "`" and "${" in raw:
        return None
    return _unescape(raw)


def regex_fallback_sites(
    text: str, file: str, catalog: dict[tuple[str, ...], SinkApi] | None = None
) -> list[tuple[ApiCallSite, list[ResolvedString]]]:
    """Best-effort sink recovery from raw text.

    Only sites with a literal first argument resolve; everything else is
    recorded Unresolved. Used when parsing or graph construction fails, so
    recall survives the grammar.
    """
    enabled = set((catalog or DEFAULT_SINK_CATALOG).values())
    results: list[tuple[int, ApiCallSite, list[ResolvedString]]] = []

    for api, rx in _RX_ARG0.items():
        if api not in enabled:
            continue
        for m in rx.finditer(text):
            value = _literal_from_match(m.group(1), m.group(2))
            resolved = (
                [ResolvedString(ResolutionStatus.LITERAL, value, ((m.start(), m.end()),))]
                if value is not None
                else [UNRESOLVED]
            )
            site = ApiCallSite(api, -1, (m.start(), m.end()), file)
            results.append((m.start(), site, resolved))

    if SinkApi.GET_CONFIGURATION in enabled:
        consumed: list[tuple[int, int]] = []
        for m in _RX_CONFIG_SECTION_KEY.finditer(text):
            section = _literal_from_match(m.group(1), m.group(2))
            key = _literal_from_match(m.group(3), m.group(4))
            if section is not None and key is not None:
                resolved = [ResolvedString(ResolutionStatus.LITERAL, f"{section}.{key}", ((m.start(), m.end()),))]
            else:
                resolved = [UNRESOLVED]
            site = ApiCallSite(SinkApi.GET_CONFIGURATION, -1, (m.start(), m.end()), file)
            results.append((m.start(), site, resolved))
            consumed.append((m.start(), m.end()))
        for m in _RX_CONFIG_BARE_KEY.finditer(text):
            value = _literal_from_match(m.group(1), m.group(2))
            resolved = (
                [ResolvedString(ResolutionStatus.LITERAL, value, ((m.start(), m.end()),))]
                if value is not None
                else [UNRESOLVED]
            )
            site = ApiCallSite(SinkApi.GET_CONFIGURATION, -1, (m.start(), m.end()), file)
            results.append((m.start(), site, resolved))
        for m in _RX_CONFIG_SECTION_ONLY.finditer(text):
            if any(start <= m.start() < end for start, end in consumed):
                continue
            value = _literal_from_match(m.group(1), m.group(2))
            resolved = (
                [ResolvedString(ResolutionStatus.LITERAL, value, ((m.start(), m.end()),))]
                if value is not None
                else [UNRESOLVED]
            )
            site = ApiCallSite(SinkApi.GET_CONFIGURATION, -1, (m.start(), m.end()), file)
            results.append((m.start(), site, resolved))

    if SinkApi.SHOW_INPUT_BOX in enabled:
        for m in _RX_INPUT_BOX.finditer(text):
            window = text[m.end(): m.end() + _RX_INPUT_BOX_WINDOW]
            parts = []
            for prop in INPUT_BOX_TEXT_PROPERTIES:
                pm = re.search(r"\b" + prop + r"\s*:\s*" + _QUOTED, window)
                if pm:
                    value = _literal_from_match(pm.group(1), pm.group(2))
                    if value is not None:
                        parts.append(value)
            resolved = (
                [ResolvedString(ResolutionStatus.LITERAL, " | ".join(parts), ((m.start(), m.end()),))]
                if parts
                else [UNRESOLVED]
            )
            site = ApiCallSite(SinkApi.SHOW_INPUT_BOX, -1, (m.start(), m.end()), file)
            results.append((m.start(), site, resolved))

    if SinkApi.CLIPBOARD_READ_TEXT in enabled:
        for m in _RX_CLIPBOARD.finditer(text):
            site = ApiCallSite(SinkApi.CLIPBOARD_READ_TEXT, -1, (m.start(), m.end()), file)
            results.append((m.start(), site, []))

    results.sort(key=lambda item: (item[0], item[1].api.value))
    return [(site, resolved) for _, site, resolved in results]
