"""JavaScript parsing via the vendored acorn bundle.

Parsing runs in a persistent Node.js helper process speaking
line-delimited JSON (one request, one response). Each OS process keeps a
single helper, guarded by a lock, so parallel corpus scans get one helper
per worker. When Node is unavailable every parse raises
:class:`ParseError` and callers degrade to regex sink detection.
"""

from __future__ import annotations

import json
import os
import select
import shutil
import subprocess
import threading
import time
from dataclasses import dataclass
from importlib import resources

from .errors import ParseError

# Sources beyond this size are not worth a full graph analysis; the regex
# fallback handles them in bounded time.
MAX_PARSE_BYTES = 8 * 1024 * 1024

DEFAULT_PARSE_TIMEOUT = 10.0


@dataclass
class SyntaxTree:
    """An ESTree program as parsed by acorn.

    Nodes are plain dicts with a ``type`` plus ``start``/``end`` character
    offsets; children sit in type-specific fields.
    """

    root: dict
    file: str
    source: str


def child_nodes(node: dict):
    """Yield the direct child nodes of an ESTree node, in field order."""
    for key, value in node.items():
        if key in ("type", "start", "end"):
            continue
        if isinstance(value, dict) and "type" in value:
            yield value
        elif isinstance(value, list):
            for item in value:
                if isinstance(item, dict) and "type" in item:
                    yield item


def iter_nodes(root: dict):
    """Preorder traversal over all nodes reachable from ``root``."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        children = list(child_nodes(node))
        children.reverse()
        stack.extend(children)


def _find_node_binary() -> str | None:
    override = os.environ.get("VSXSCAN_NODE")
    if override:
        return override if os.path.exists(override) else None
    return shutil.which("node")


def _server_script_path() -> str:
    return str(resources.files("vsxscan._vendor") / "astserver.js")


_DISCOVER = object()


class JsParser:
    """Owns the Node helper process and serializes requests to it."""

    def __init__(self, node_binary=_DISCOVER):
        self._node = _find_node_binary() if node_binary is _DISCOVER else node_binary
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()
        self._next_id = 0
        self._buffer = b""
        self._owner_pid = os.getpid()

    def available(self) -> bool:
        return self._node is not None

    def _ensure_proc(self) -> subprocess.Popen:
        if self._owner_pid != os.getpid():
            # Forked worker: the inherited pipes belong to the parent's
            # helper. Abandon them (never kill the shared child) and start
            # a helper of our own.
            self._proc = None
            self._buffer = b""
            self._owner_pid = os.getpid()
        if self._proc is not None and self._proc.poll() is None:
            return self._proc
        if self._node is None:
            raise ParseError("no JavaScript engine: node binary not found")
        self._buffer = b""
        try:
            self._proc = subprocess.Popen(
                [self._node, _server_script_path()],
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )
        except OSError as exc:
            self._proc = None
            raise ParseError(f"cannot start JavaScript engine: {exc}") from None
        return self._proc

    def _kill_proc(self):
        if self._proc is not None:
            try:
                self._proc.kill()
                self._proc.wait(timeout=5)
            except OSError:
                pass
        self._proc = None
        self._buffer = b""

    def _read_line(self, proc: subprocess.Popen, deadline: float) -> bytes:
        fd = proc.stdout.fileno()
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                raise TimeoutError
            chunk = os.read(fd, 1 << 20)
            if not chunk:
                raise BrokenPipeError("parse helper exited")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def parse(self, source: str, path: str = "<source>", timeout: float = DEFAULT_PARSE_TIMEOUT) -> SyntaxTree:
        """Parse ``source`` into a :class:`SyntaxTree`.

        Raises :class:`ParseError` for grammar rejections, oversized
        inputs, timeouts, and engine unavailability.
        """
        if len(source.encode("utf-8", errors="replace")) > MAX_PARSE_BYTES:
            raise ParseError(f"{path}: source exceeds {MAX_PARSE_BYTES} byte parse limit")

        with self._lock:
            proc = self._ensure_proc()
            self._next_id += 1
            request = json.dumps({"id": self._next_id, "source": source}) + "\n"
            deadline = time.monotonic() + timeout
            try:
                proc.stdin.write(request.encode("utf-8"))
                proc.stdin.flush()
                line = self._read_line(proc, deadline)
            except (TimeoutError, BrokenPipeError, OSError) as exc:
                self._kill_proc()
                reason = "timed out" if isinstance(exc, TimeoutError) else str(exc)
                raise ParseError(f"{path}: parse helper failed ({reason})") from None

        try:
            response = json.loads(line)
        except ValueError:
            self._kill_proc()
            raise ParseError(f"{path}: malformed parse helper response") from None
        if response.get("id") != self._next_id:
            self._kill_proc()
            raise ParseError(f"{path}: parse helper protocol desync")
        if not response.get("ok"):
            raise ParseError(f"{path}: {response.get('error', 'syntax error')}")
        return SyntaxTree(root=response["ast"], file=path, source=source)

    def close(self):
        with self._lock:
            if self._owner_pid != os.getpid():
                # Inherited handle; the helper belongs to the parent.
                self._proc = None
                self._buffer = b""
                return
            if self._proc is not None:
                try:
                    self._proc.stdin.close()
                except OSError:
                    pass
                self._kill_proc()


_default_parser: JsParser | None = None
_default_parser_lock = threading.Lock()


def get_parser() -> JsParser:
    """The per-process shared parser instance."""
    global _default_parser
    with _default_parser_lock:
        if _default_parser is None:
            _default_parser = JsParser()
        return _default_parser


def parse_source(text: str, path: str = "<source>", timeout: float = DEFAULT_PARSE_TIMEOUT) -> SyntaxTree:
    """Parse one source file with the shared engine."""
    return get_parser().parse(text, path, timeout)


def engine_available() -> bool:
    return get_parser().available()
