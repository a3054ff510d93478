"""Program dependency graph construction over ESTree syntax trees.

The graph carries two edge families:

* control edges: statement ordering within each block, plus edges from a
  branching statement into the first statement of each branch body;
* data edges: from every definition of a variable to every use of that
  variable within the same function scope (the module top level counts as
  a scope, nested functions get their own).

The analysis is intra-procedural and field-insensitive: closure captures,
property flows, and cross-file flows produce no data edges, which keeps
later string resolution conservative rather than wrong.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .errors import BudgetExceeded
from .jsparse import SyntaxTree

DEFAULT_MAX_NODES = 300_000
DEFAULT_MAX_DATA_EDGES = 1_000_000

_FUNCTION_KINDS = ("FunctionDeclaration", "FunctionExpression", "ArrowFunctionExpression")

_CONTROL = "control"
_DATA = "data"


@dataclass
class PdgNode:
    id: int
    kind: str
    span: tuple[int, int]
    symbol: str | None
    ast: dict


@dataclass
class Definition:
    node_id: int
    scope_id: int
    name: str
    value_ast: dict | None


@dataclass
class ProgramDependencyGraph:
    """Control- and data-flow graph for a single source file."""

    file: str
    nodes: dict[int, PdgNode] = field(default_factory=dict)
    data_in: dict[int, list[int]] = field(default_factory=dict)
    data_out: dict[int, list[int]] = field(default_factory=dict)
    control_out: dict[int, list[int]] = field(default_factory=dict)
    defs: dict[int, Definition] = field(default_factory=dict)
    source: str = ""

    _ast_ids: dict[int, int] = field(default_factory=dict, repr=False)
    _parents: dict[int, dict | None] = field(default_factory=dict, repr=False)
    _scope_defs: dict[tuple[int, str], list[int]] = field(default_factory=dict, repr=False)

    def node(self, node_id: int) -> PdgNode:
        return self.nodes[node_id]

    def node_for_ast(self, ast: dict) -> PdgNode | None:
        node_id = self._ast_ids.get(id(ast))
        return self.nodes[node_id] if node_id is not None else None

    def parent_of(self, ast: dict) -> dict | None:
        return self._parents.get(id(ast))

    def data_predecessors(self, node_id: int) -> list[int]:
        return self.data_in.get(node_id, [])

    def data_successors(self, node_id: int) -> list[int]:
        return self.data_out.get(node_id, [])

    def control_successors(self, node_id: int) -> list[int]:
        return self.control_out.get(node_id, [])

    def nodes_of_kind(self, kind: str) -> list[PdgNode]:
        return [n for n in self.nodes.values() if n.kind == kind]

    def sibling_defs(self, def_node_id: int) -> list[int]:
        """All definition nodes of the same variable in the same scope."""
        d = self.defs.get(def_node_id)
        if d is None:
            return []
        return list(self._scope_defs.get((d.scope_id, d.name), []))

    def edges(self):
        for src, targets in self.control_out.items():
            for dst in targets:
                yield (src, dst, _CONTROL)
        for src, targets in self.data_out.items():
            for dst in targets:
                yield (src, dst, _DATA)

    @property
    def data_edge_count(self) -> int:
        return sum(len(v) for v in self.data_out.values())


def _node_symbol(ast: dict) -> str | None:
    kind = ast.get("type")
    if kind == "Identifier":
        return ast.get("name")
    if kind == "Literal" and isinstance(ast.get("value"), str):
        return ast.get("value")
    if kind == "TemplateLiteral" and not ast.get("expressions"):
        quasis = ast.get("quasis") or []
        if len(quasis) == 1:
            return (quasis[0].get("value") or {}).get("cooked")
    return None


class _Builder:
    def __init__(self, tree: SyntaxTree, max_nodes: int, max_data_edges: int, deadline: float | None):
        self.tree = tree
        self.max_nodes = max_nodes
        self.max_data_edges = max_data_edges
        self.deadline = deadline
        self.graph = ProgramDependencyGraph(file=tree.file, source=tree.source)
        self.next_id = 0
        # scope id -> {name -> [Definition]}; scope id is the PDG id of the
        # Program or function node owning the scope.
        self.scope_tables: dict[int, dict[str, list[Definition]]] = {}
        # (scope id, name, use node id), resolved to edges once all defs
        # in the scope are known.
        self.pending_uses: list[tuple[int, str, int]] = []

    def build(self) -> ProgramDependencyGraph:
        root = self.tree.root
        root_id = self._add_node(root, parent=None)
        self.scope_tables[root_id] = {}
        self._walk(root, scope_id=root_id)
        self._link_data_edges()
        return self.graph

    # -- node bookkeeping ------------------------------------------------

    def _add_node(self, ast: dict, parent: dict | None) -> int:
        existing = self.graph._ast_ids.get(id(ast))
        if existing is not None:
            return existing
        if self.next_id >= self.max_nodes:
            raise BudgetExceeded(f"{self.tree.file}: node budget {self.max_nodes} exceeded")
        if self.deadline is not None and self.next_id % 4096 == 0 and time.monotonic() > self.deadline:
            raise BudgetExceeded(f"{self.tree.file}: graph build deadline exceeded")
        node_id = self.next_id
        self.next_id += 1
        node = PdgNode(
            id=node_id,
            kind=ast.get("type", ""),
            span=(ast.get("start", 0), ast.get("end", 0)),
            symbol=_node_symbol(ast),
            ast=ast,
        )
        self.graph.nodes[node_id] = node
        self.graph._ast_ids[id(ast)] = node_id
        self.graph._parents[id(ast)] = parent
        return node_id

    def _add_control_edge(self, src: int, dst: int):
        self.graph.control_out.setdefault(src, []).append(dst)

    def _record_def(self, scope_id: int, name: str, def_ast: dict, value_ast: dict | None):
        node_id = self.graph._ast_ids[id(def_ast)]
        d = Definition(node_id=node_id, scope_id=scope_id, name=name, value_ast=value_ast)
        self.graph.defs[node_id] = d
        self.scope_tables[scope_id].setdefault(name, []).append(d)

    def _record_use(self, scope_id: int, name: str, use_ast: dict):
        self.pending_uses.append((scope_id, name, self.graph._ast_ids[id(use_ast)]))

    def _link_data_edges(self):
        for scope_id, table in self.scope_tables.items():
            for name, defs in table.items():
                self.graph._scope_defs[(scope_id, name)] = [d.node_id for d in defs]
        edge_count = 0
        for scope_id, name, use_id in self.pending_uses:
            defs = self.scope_tables.get(scope_id, {}).get(name)
            if not defs:
                continue
            for d in defs:
                if d.node_id == use_id:
                    continue
                edge_count += 1
                if edge_count > self.max_data_edges:
                    raise BudgetExceeded(f"{self.tree.file}: data edge budget exceeded")
                self.graph.data_out.setdefault(d.node_id, []).append(use_id)
                self.graph.data_in.setdefault(use_id, []).append(d.node_id)

    # -- traversal ---------------------------------------------------------

    def _walk(self, ast: dict, scope_id: int):
        kind = ast.get("type")

        if kind == "VariableDeclaration":
            for decl in ast.get("declarations") or []:
                self._add_node(decl, ast)
                init = decl.get("init")
                self._bind_pattern(decl.get("id"), decl, init, scope_id)
                if init is not None:
                    self._walk_child(init, decl, scope_id)
            return

        if kind == "AssignmentExpression":
            left = ast.get("left") or {}
            right = ast.get("right")
            if left.get("type") == "Identifier":
                self._add_node(left, ast)
                # Compound operators leave the value unresolvable but the
                # assignment still counts as a definition.
                value = right if ast.get("operator") == "=" else None
                self._record_def(scope_id, left.get("name", ""), ast, value)
            else:
                self._walk_child(left, ast, scope_id)
            if right is not None:
                self._walk_child(right, ast, scope_id)
            return

        if kind == "UpdateExpression":
            arg = ast.get("argument") or {}
            if arg.get("type") == "Identifier":
                self._add_node(arg, ast)
                self._record_def(scope_id, arg.get("name", ""), ast, None)
            else:
                self._walk_child(arg, ast, scope_id)
            return

        if kind in _FUNCTION_KINDS:
            new_scope = self.graph._ast_ids[id(ast)]
            self.scope_tables[new_scope] = {}
            name_node = ast.get("id")
            if name_node and name_node.get("type") == "Identifier":
                self._add_node(name_node, ast)
                # A function declaration's name is a definition in the
                # enclosing scope.
                if kind == "FunctionDeclaration":
                    self._record_def(scope_id, name_node.get("name", ""), ast, None)
            for param in ast.get("params") or []:
                self._bind_pattern(param, ast, None, new_scope)
            body = ast.get("body")
            if body is not None:
                self._walk_child(body, ast, new_scope)
                body_first = self._first_statement(body)
                if body_first is not None:
                    self._add_control_edge(self.graph._ast_ids[id(ast)], self.graph._ast_ids[id(body_first)])
            return

        if kind == "CatchClause":
            param = ast.get("param")
            if param is not None:
                self._bind_pattern(param, ast, None, scope_id)
            body = ast.get("body")
            if body is not None:
                self._walk_child(body, ast, scope_id)
            return

        if kind in ("ImportSpecifier", "ImportDefaultSpecifier", "ImportNamespaceSpecifier"):
            local = ast.get("local")
            if local and local.get("type") == "Identifier":
                self._add_node(local, ast)
                self._record_def(scope_id, local.get("name", ""), ast, None)
            return

        if kind == "MemberExpression":
            self._walk_child(ast.get("object"), ast, scope_id)
            if ast.get("computed"):
                self._walk_child(ast.get("property"), ast, scope_id)
            else:
                prop = ast.get("property")
                if isinstance(prop, dict):
                    self._add_node(prop, ast)
            return

        if kind in ("Property", "PropertyDefinition", "MethodDefinition"):
            if ast.get("computed"):
                self._walk_child(ast.get("key"), ast, scope_id)
            else:
                key = ast.get("key")
                if isinstance(key, dict):
                    self._add_node(key, ast)
            value = ast.get("value")
            if value is not None:
                # Shorthand {a}: key and value are the same node and the
                # single identifier is a use.
                self._walk_child(value, ast, scope_id)
            return

        if kind == "Identifier":
            self._record_use(scope_id, ast.get("name", ""), ast)
            return

        if kind in ("LabeledStatement",):
            self._walk_child(ast.get("body"), ast, scope_id)
            return
        if kind in ("BreakStatement", "ContinueStatement"):
            return

        # Generic traversal with statement-sequence control edges.
        self._walk_generic(ast, scope_id)

    def _walk_child(self, child, parent: dict, scope_id: int):
        if not isinstance(child, dict) or "type" not in child:
            return
        self._add_node(child, parent)
        self._walk(child, scope_id)

    def _walk_generic(self, ast: dict, scope_id: int):
        kind = ast.get("type")
        for key, value in ast.items():
            if key in ("type", "start", "end"):
                continue
            if isinstance(value, dict) and "type" in value:
                self._walk_child(value, ast, scope_id)
            elif isinstance(value, list):
                prev_stmt_id = None
                is_body = key in ("body", "consequent") and kind in (
                    "Program",
                    "BlockStatement",
                    "SwitchCase",
                    "StaticBlock",
                )
                for item in value:
                    if not isinstance(item, dict) or "type" not in item:
                        continue
                    self._walk_child(item, ast, scope_id)
                    if is_body:
                        item_id = self.graph._ast_ids[id(item)]
                        if prev_stmt_id is not None:
                            self._add_control_edge(prev_stmt_id, item_id)
                        prev_stmt_id = item_id
        self._add_branch_edges(ast)

    def _add_branch_edges(self, ast: dict):
        kind = ast.get("type")
        targets: list[dict] = []
        if kind == "IfStatement":
            targets = [ast.get("consequent"), ast.get("alternate")]
        elif kind in ("ForStatement", "ForInStatement", "ForOfStatement", "WhileStatement", "DoWhileStatement"):
            targets = [ast.get("body")]
        elif kind == "SwitchStatement":
            targets = list(ast.get("cases") or [])
        elif kind == "TryStatement":
            targets = [ast.get("block"), ast.get("handler"), ast.get("finalizer")]
        src_id = self.graph._ast_ids.get(id(ast))
        if src_id is None:
            return
        for target in targets:
            if not isinstance(target, dict):
                continue
            first = self._first_statement(target)
            if first is None:
                continue
            dst_id = self.graph._ast_ids.get(id(first))
            if dst_id is not None:
                self._add_control_edge(src_id, dst_id)

    @staticmethod
    def _first_statement(ast: dict) -> dict | None:
        kind = ast.get("type")
        if kind == "BlockStatement":
            body = ast.get("body") or []
            return body[0] if body else None
        if kind == "SwitchCase":
            body = ast.get("consequent") or []
            return body[0] if body else None
        if kind == "CatchClause":
            return _Builder._first_statement(ast.get("body") or {})
        return ast if kind else None

    def _bind_pattern(self, pattern, def_ast: dict, value_ast: dict | None, scope_id: int):
        """Register definitions for every identifier bound by ``pattern``.

        Only a plain identifier keeps its initializer as a resolvable
        value; destructured bindings define names with unknown values.
        """
        if not isinstance(pattern, dict):
            return
        kind = pattern.get("type")
        if kind == "Identifier":
            self._add_node(pattern, def_ast)
            self._record_def(scope_id, pattern.get("name", ""), def_ast, value_ast)
        elif kind == "ObjectPattern":
            self._add_node(pattern, def_ast)
            for prop in pattern.get("properties") or []:
                self._add_node(prop, pattern)
                if prop.get("type") == "RestElement":
                    self._bind_pattern(prop.get("argument"), def_ast, None, scope_id)
                else:
                    self._bind_pattern(prop.get("value"), def_ast, None, scope_id)
        elif kind == "ArrayPattern":
            self._add_node(pattern, def_ast)
            for element in pattern.get("elements") or []:
                if element is not None:
                    self._bind_pattern(element, def_ast, None, scope_id)
        elif kind == "AssignmentPattern":
            self._add_node(pattern, def_ast)
            self._bind_pattern(pattern.get("left"), def_ast, None, scope_id)
            self._walk_child(pattern.get("right"), pattern, scope_id)
        elif kind == "RestElement":
            self._add_node(pattern, def_ast)
            self._bind_pattern(pattern.get("argument"), def_ast, None, scope_id)


def build_pdg(
    tree: SyntaxTree,
    max_nodes: int = DEFAULT_MAX_NODES,
    max_data_edges: int = DEFAULT_MAX_DATA_EDGES,
    deadline: float | None = None,
) -> ProgramDependencyGraph:
    """Build the dependency graph for a parsed file.

    Raises :class:`BudgetExceeded` when node count, data edge count, or
    the wall-clock deadline is exceeded; callers then fall back to regex
    sink detection for the file.
    """
    return _Builder(tree, max_nodes, max_data_edges, deadline).build()
