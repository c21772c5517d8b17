"""In-memory labeled property graph with equality indexes and binary snapshots.

Nodes carry a non-empty label set and a property map; edges carry exactly
one relationship type.  Ids are integers handed out in increasing order and
never reused.  Reads and writes are guarded by a readers/writer lock so a
reader never observes a half-applied mutation.
"""

from __future__ import annotations

import hashlib
import os
import struct
import threading
import zlib
from collections.abc import Iterable
from contextlib import contextmanager
from dataclasses import dataclass, field

from . import values as V
from .errors import CorruptSnapshot, EmptyLabelSet, IoFailure, UnknownEdge, UnknownNode

OUT = "out"
IN = "in"
BOTH = "both"


@dataclass(frozen=True, eq=False)
class Node:
    id: int
    labels: frozenset
    props: dict = field(default_factory=dict)

    @property
    def entity_key(self):
        return (0, self.id)

    def __eq__(self, other):
        return isinstance(other, Node) and other.id == self.id

    def __hash__(self):
        return hash(("node", self.id))

    def to_json(self) -> dict:
        return {"id": self.id, "labels": sorted(self.labels), "props": dict(self.props)}


@dataclass(frozen=True, eq=False)
class Edge:
    id: int
    src: int
    dst: int
    type: str
    props: dict = field(default_factory=dict)

    @property
    def entity_key(self):
        return (1, self.id)

    def __eq__(self, other):
        return isinstance(other, Edge) and other.id == self.id

    def __hash__(self):
        return hash(("edge", self.id))

    def to_json(self) -> dict:
        return {"id": self.id, "src": self.src, "dst": self.dst, "type": self.type,
                "props": dict(self.props)}


class RWLock:
    """Readers/writer lock.

    Readers are blocked only by an *active* writer, so read sections nest.
    The writing thread may re-enter both ``write`` and ``read``.  Upgrading a
    read lock to a write lock is not supported.
    """

    def __init__(self):
        self._cond = threading.Condition(threading.Lock())
        self._readers = 0
        self._writer: int | None = None
        self._depth = 0

    @contextmanager
    def read(self):
        me = threading.get_ident()
        if self._writer == me:
            yield
            return
        with self._cond:
            while self._writer is not None:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                if self._readers == 0:
                    self._cond.notify_all()

    @contextmanager
    def write(self):
        me = threading.get_ident()
        if self._writer == me:
            self._depth += 1
            try:
                yield
            finally:
                self._depth -= 1
            return
        with self._cond:
            while self._writer is not None or self._readers:
                self._cond.wait()
            self._writer = me
        try:
            yield
        finally:
            with self._cond:
                self._writer = None
                self._cond.notify_all()


class PropertyGraph:
    def __init__(self):
        self._nodes: dict[int, Node] = {}
        self._edges: dict[int, Edge] = {}
        self._out: dict[int, list[int]] = {}
        self._in: dict[int, list[int]] = {}
        self._by_label: dict[str, dict[int, None]] = {}
        self._indexes: dict[tuple[str, str], dict] = {}
        self._next_node = 1
        self._next_edge = 1
        self.lock = RWLock()

    # -- mutation ---------------------------------------------------------

    def create_node(self, labels: Iterable[str], props: dict | None = None) -> int:
        labels = frozenset(labels)
        if not labels:
            raise EmptyLabelSet("a node needs at least one label")
        for label in labels:
            if not isinstance(label, str) or not label:
                raise EmptyLabelSet(f"invalid label {label!r}")
        props = V.check_props(props)
        with self.lock.write():
            node = Node(self._next_node, labels, props)
            self._next_node += 1
            self._add_node(node)
            return node.id

    def _add_node(self, node: Node) -> None:
        self._nodes[node.id] = node
        self._out[node.id] = []
        self._in[node.id] = []
        for label in node.labels:
            self._by_label.setdefault(label, {})[node.id] = None
        self._index_node(node, add=True)

    def _index_node(self, node: Node, add: bool) -> None:
        for (label, prop), index in self._indexes.items():
            if label not in node.labels:
                continue
            key = V.index_key(node.props.get(prop))
            if key is None:
                continue
            if add:
                index.setdefault(key, set()).add(node.id)
            else:
                bucket = index.get(key)
                if bucket is not None:
                    bucket.discard(node.id)
                    if not bucket:
                        del index[key]

    def set_properties(self, node_id: int, props: dict, replace: bool = False) -> None:
        """Update (or with ``replace`` overwrite) a node's properties, keeping indexes in sync."""
        props = V.check_props(props)
        with self.lock.write():
            node = self._require_node(node_id)
            self._index_node(node, add=False)
            new_props = dict(props) if replace else {**node.props, **props}
            updated = Node(node.id, node.labels, new_props)
            self._nodes[node_id] = updated
            self._index_node(updated, add=True)

    def create_edge(self, src: int, rel_type: str, dst: int, props: dict | None = None) -> int:
        if not isinstance(rel_type, str) or not rel_type:
            raise ValueError("relationship type must be non-empty text")
        props = V.check_props(props)
        with self.lock.write():
            self._require_node(src)
            self._require_node(dst)
            edge = Edge(self._next_edge, src, dst, rel_type, props)
            self._next_edge += 1
            self._add_edge(edge)
            return edge.id

    def _add_edge(self, edge: Edge) -> None:
        self._edges[edge.id] = edge
        self._out[edge.src].append(edge.id)
        self._in[edge.dst].append(edge.id)

    def remove_edge(self, edge_id: int) -> None:
        with self.lock.write():
            edge = self._edges.pop(edge_id, None)
            if edge is None:
                raise UnknownEdge(edge_id)
            self._out[edge.src].remove(edge_id)
            self._in[edge.dst].remove(edge_id)

    def declare_index(self, label: str, prop: str) -> None:
        """Declare an equality index on (label, prop) and back-fill it."""
        with self.lock.write():
            if (label, prop) in self._indexes:
                return
            index: dict = {}
            for node_id in self._by_label.get(label, ()):
                key = V.index_key(self._nodes[node_id].props.get(prop))
                if key is not None:
                    index.setdefault(key, set()).add(node_id)
            self._indexes[(label, prop)] = index

    # -- reads ------------------------------------------------------------

    def _require_node(self, node_id) -> Node:
        node = self._nodes.get(node_id)
        if node is None:
            raise UnknownNode(node_id)
        return node

    def node(self, node_id: int) -> Node:
        with self.lock.read():
            return self._require_node(node_id)

    def edge(self, edge_id: int) -> Edge:
        with self.lock.read():
            edge = self._edges.get(edge_id)
            if edge is None:
                raise UnknownEdge(edge_id)
            return edge

    def has_node(self, node_id) -> bool:
        return node_id in self._nodes

    def nodes(self, label: str | None = None) -> list[Node]:
        """All nodes (or those carrying ``label``) in ascending id order."""
        with self.lock.read():
            if label is None:
                return [self._nodes[i] for i in sorted(self._nodes)]
            return [self._nodes[i] for i in sorted(self._by_label.get(label, ()))]

    def edges(self) -> list[Edge]:
        with self.lock.read():
            return [self._edges[i] for i in sorted(self._edges)]

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    @property
    def indexes(self) -> list[tuple[str, str]]:
        return sorted(self._indexes)

    def has_index(self, label: str, prop: str) -> bool:
        return (label, prop) in self._indexes

    def find_nodes(self, label: str, prop: str, value) -> set[int]:
        """Ids of nodes with ``label`` whose ``prop`` equals ``value``; Null never matches."""
        with self.lock.read():
            index = self._indexes.get((label, prop))
            if index is not None:
                key = V.index_key(value)
                if key is None:
                    return set()
                return set(index.get(key, ()))
            return self._scan(label, prop, value)

    def scan_nodes(self, label: str, prop: str, value) -> set[int]:
        """Same contract as :meth:`find_nodes` but never consults an index."""
        with self.lock.read():
            return self._scan(label, prop, value)

    def _scan(self, label, prop, value) -> set[int]:
        out = set()
        for node_id in self._by_label.get(label, ()):
            if V.equals(self._nodes[node_id].props.get(prop), value) is True:
                out.add(node_id)
        return out

    def neighbors(self, node_id: int, direction: str = BOTH,
                  rel_filter: Iterable[str] | None = None) -> list[Edge]:
        """Adjacent edges in insertion order.

        ``BOTH`` lists outgoing edges first, then incoming ones; a self-loop
        is reported once.
        """
        types = None if rel_filter is None else frozenset(rel_filter)
        with self.lock.read():
            self._require_node(node_id)
            if direction == OUT:
                ids = self._out[node_id]
            elif direction == IN:
                ids = self._in[node_id]
            elif direction == BOTH:
                out_ids = self._out[node_id]
                ids = out_ids + [e for e in self._in[node_id]
                                 if self._edges[e].src != node_id]
            else:
                raise ValueError(f"unknown direction {direction!r}")
            edges = [self._edges[e] for e in ids]
        if types is not None:
            edges = [e for e in edges if e.type in types]
        return edges

    def label_counts(self) -> dict[str, int]:
        with self.lock.read():
            return {label: len(ids) for label, ids in sorted(self._by_label.items()) if ids}

    def rel_type_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        with self.lock.read():
            for edge in self._edges.values():
                counts[edge.type] = counts.get(edge.type, 0) + 1
        return dict(sorted(counts.items()))


# -- structural hash -------------------------------------------------------

def _canon_value(value) -> str:
    if isinstance(value, float):
        return "f:" + struct.pack(">d", value).hex()
    return f"{V.kind_of(value)}:{value!r}"


def structural_hash(graph: PropertyGraph) -> str:
    """SHA-256 over ids, labels, types and bit-exact property values."""
    h = hashlib.sha256()
    for node in graph.nodes():
        h.update(f"N{node.id}|{','.join(sorted(node.labels))}|".encode())
        for key in sorted(node.props):
            h.update(f"{key}={_canon_value(node.props[key])};".encode())
        h.update(b"\n")
    for edge in graph.edges():
        h.update(f"E{edge.id}|{edge.src}|{edge.type}|{edge.dst}|".encode())
        for key in sorted(edge.props):
            h.update(f"{key}={_canon_value(edge.props[key])};".encode())
        h.update(b"\n")
    return h.hexdigest()


# -- snapshot persistence --------------------------------------------------
# Layout (all integers big-endian) is documented in docs/snapshot-format.md.

MAGIC = b"STKGSNAP"
VERSION = 1
_HEADER = struct.Struct(">8sHHQI")

_T_NULL, _T_TEXT, _T_INT, _T_FLOAT, _T_BOOL, _T_LIST = range(6)


def _pack_str(buf: bytearray, s: str) -> None:
    data = s.encode("utf-8")
    buf += struct.pack(">I", len(data))
    buf += data


def _pack_value(buf: bytearray, value) -> None:
    kind = V.kind_of(value)
    if kind == V.NULL:
        buf.append(_T_NULL)
    elif kind == V.TEXT:
        buf.append(_T_TEXT)
        _pack_str(buf, value)
    elif kind == V.INTEGER:
        buf.append(_T_INT)
        buf += struct.pack(">q", value)
    elif kind == V.FLOAT:
        buf.append(_T_FLOAT)
        buf += struct.pack(">d", value)
    elif kind == V.BOOLEAN:
        buf.append(_T_BOOL)
        buf.append(1 if value else 0)
    else:
        buf.append(_T_LIST)
        buf += struct.pack(">I", len(value))
        for item in value:
            _pack_str(buf, item)


def _pack_props(buf: bytearray, props: dict) -> None:
    buf += struct.pack(">I", len(props))
    for key in sorted(props):
        _pack_str(buf, key)
        _pack_value(buf, props[key])


def _encode(graph: PropertyGraph) -> bytes:
    body = bytearray()
    body += struct.pack(">QQ", graph._next_node, graph._next_edge)
    indexes = graph.indexes
    body += struct.pack(">I", len(indexes))
    for label, prop in indexes:
        _pack_str(body, label)
        _pack_str(body, prop)
    nodes = graph.nodes()
    body += struct.pack(">Q", len(nodes))
    for node in nodes:
        rec = bytearray()
        rec += struct.pack(">QH", node.id, len(node.labels))
        for label in sorted(node.labels):
            _pack_str(rec, label)
        _pack_props(rec, node.props)
        body += struct.pack(">I", len(rec))
        body += rec
    edges = graph.edges()
    body += struct.pack(">Q", len(edges))
    for edge in edges:
        rec = bytearray()
        rec += struct.pack(">QQQ", edge.id, edge.src, edge.dst)
        _pack_str(rec, edge.type)
        _pack_props(rec, edge.props)
        body += struct.pack(">I", len(rec))
        body += rec
    header = _HEADER.pack(MAGIC, VERSION, 0, len(body), zlib.crc32(body))
    return header + bytes(body)


def persist(graph: PropertyGraph, path) -> None:
    """Write a snapshot atomically (temp file + rename)."""
    with graph.lock.read():
        data = _encode(graph)
    tmp = f"{os.fspath(path)}.tmp"
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write snapshot {path}: {exc}") from exc


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptSnapshot("snapshot truncated")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))

    def string(self) -> str:
        (n,) = self.unpack(">I")
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptSnapshot("invalid UTF-8 in snapshot") from exc

    def value(self):
        (tag,) = self.unpack(">B")
        if tag == _T_NULL:
            return None
        if tag == _T_TEXT:
            return self.string()
        if tag == _T_INT:
            return self.unpack(">q")[0]
        if tag == _T_FLOAT:
            return self.unpack(">d")[0]
        if tag == _T_BOOL:
            return self.unpack(">B")[0] != 0
        if tag == _T_LIST:
            (n,) = self.unpack(">I")
            return [self.string() for _ in range(n)]
        raise CorruptSnapshot(f"unknown value tag {tag}")

    def props(self) -> dict:
        (n,) = self.unpack(">I")
        out = {}
        for _ in range(n):
            key = self.string()
            out[key] = self.value()
        return out


def load(path) -> PropertyGraph:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read snapshot {path}: {exc}") from exc
    if len(data) < _HEADER.size:
        raise CorruptSnapshot("snapshot shorter than its header")
    magic, version, _flags, length, crc = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CorruptSnapshot("bad magic")
    if version != VERSION:
        raise CorruptSnapshot(f"unsupported snapshot version {version}")
    body = data[_HEADER.size:]
    if len(body) != length:
        raise CorruptSnapshot(f"payload length {len(body)} != declared {length}")
    if zlib.crc32(body) != crc:
        raise CorruptSnapshot("checksum mismatch")
    return _decode(body)


def _decode(body: bytes) -> PropertyGraph:
    r = _Reader(body)
    graph = PropertyGraph()
    next_node, next_edge = r.unpack(">QQ")
    (n_idx,) = r.unpack(">I")
    indexes = [(r.string(), r.string()) for _ in range(n_idx)]
    (n_nodes,) = r.unpack(">Q")
    for _ in range(n_nodes):
        (size,) = r.unpack(">I")
        end = r.pos + size
        node_id, n_labels = r.unpack(">QH")
        labels = frozenset(r.string() for _ in range(n_labels))
        props = r.props()
        if r.pos != end:
            raise CorruptSnapshot("node record length mismatch")
        if not labels or node_id in graph._nodes or node_id >= next_node:
            raise CorruptSnapshot(f"invalid node record {node_id}")
        graph._add_node(Node(node_id, labels, props))
    (n_edges,) = r.unpack(">Q")
    for _ in range(n_edges):
        (size,) = r.unpack(">I")
        end = r.pos + size
        edge_id, src, dst = r.unpack(">QQQ")
        rel_type = r.string()
        props = r.props()
        if r.pos != end:
            raise CorruptSnapshot("edge record length mismatch")
        if src not in graph._nodes or dst not in graph._nodes:
            raise CorruptSnapshot(f"edge {edge_id} references a missing node")
        if edge_id in graph._edges or edge_id >= next_edge:
            raise CorruptSnapshot(f"invalid edge record {edge_id}")
        graph._add_edge(Edge(edge_id, src, dst, rel_type, props))
    if r.pos != len(body):
        raise CorruptSnapshot("trailing bytes after edge records")
    graph._next_node = next_node
    graph._next_edge = next_edge
    for label, prop in indexes:
        graph.declare_index(label, prop)
    return graph

