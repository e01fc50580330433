"""Signal-flow-graph IR: node/edge model, validation, JSON (de)serialization.

The graph is a DAG over five node kinds:

* ``input`` / ``output``: values crossing the component boundary on buses.
* ``constant``: numeric literals, folded into operators (never memory-mapped).
* ``memdata``: named internal data that lives in memory banks.
* ``operation``: two-operand arithmetic (``+``, ``-``, ``*``).

Edges are ``(src, dst, pos)`` triples where ``pos`` is the operand position
at the consumer; operand order is explicit so graph reconstruction and
downstream scheduling are deterministic.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, NamedTuple


OPERATION_SYMBOLS = ("+", "-", "*")

#: Operand count per operation symbol.  All supported operations are binary.
OP_ARITY = {sym: 2 for sym in OPERATION_SYMBOLS}


class ParseError(ValueError):
    """Malformed graph document (bad JSON or schema violation)."""


class ValidationError(ValueError):
    """A structurally invalid SFG; carries all violation messages."""

    def __init__(self, violations: list[str]):
        super().__init__(violations[0] if violations else "invalid graph")
        self.violations = list(violations)


class NodeKind(str, Enum):
    INPUT = "input"
    OUTPUT = "output"
    CONSTANT = "constant"
    MEMDATA = "memdata"
    OPERATION = "operation"


@dataclass(frozen=True)
class SfgNode:
    """One graph node.  ``op`` is the operation symbol, present iff the node
    kind is ``operation``."""

    id: int
    kind: NodeKind
    op: str | None = None
    label: str = ""

    @property
    def name(self) -> str:
        return self.label or f"n{self.id}"


class Edge(NamedTuple):
    src: int
    dst: int
    pos: int


class SFG:
    """Immutable signal-flow graph.

    Node and edge iteration order is the construction (document) order;
    equality is structural and order-insensitive.
    """

    def __init__(self, nodes: Iterable[SfgNode], edges: Iterable[Edge | tuple]):
        self.nodes: tuple[SfgNode, ...] = tuple(nodes)
        self.edges: tuple[Edge, ...] = tuple(Edge(*e) for e in edges)
        self._by_id: dict[int, SfgNode] = {}
        self._duplicate_ids: list[int] = []
        for n in self.nodes:
            if n.id in self._by_id:
                self._duplicate_ids.append(n.id)
            else:
                self._by_id[n.id] = n
        self._in: dict[int, list[Edge]] = defaultdict(list)
        self._out: dict[int, list[Edge]] = defaultdict(list)
        for e in self.edges:
            self._in[e.dst].append(e)
            self._out[e.src].append(e)
        for lst in self._in.values():
            lst.sort(key=lambda e: e.pos)

    # -- lookup ------------------------------------------------------------

    def node(self, node_id: int) -> SfgNode:
        return self._by_id[node_id]

    def has_node(self, node_id: int) -> bool:
        return node_id in self._by_id

    def in_edges(self, node_id: int) -> list[Edge]:
        return list(self._in.get(node_id, ()))

    def out_edges(self, node_id: int) -> list[Edge]:
        return list(self._out.get(node_id, ()))

    def operands(self, node_id: int) -> list[int]:
        """Producer ids of ``node_id`` in operand-position order."""
        return [e.src for e in self._in.get(node_id, ())]

    def of_kind(self, kind: NodeKind) -> list[SfgNode]:
        return sorted((n for n in self._by_id.values() if n.kind is kind),
                      key=lambda n: n.id)

    @property
    def inputs(self) -> list[SfgNode]:
        return self.of_kind(NodeKind.INPUT)

    @property
    def outputs(self) -> list[SfgNode]:
        return self.of_kind(NodeKind.OUTPUT)

    @property
    def operations(self) -> list[SfgNode]:
        return self.of_kind(NodeKind.OPERATION)

    @property
    def memdata(self) -> list[SfgNode]:
        return self.of_kind(NodeKind.MEMDATA)

    @property
    def constants(self) -> list[SfgNode]:
        return self.of_kind(NodeKind.CONSTANT)

    def node_by_label(self, label: str) -> SfgNode:
        hits = [n for n in self.nodes if n.label == label]
        if not hits:
            raise KeyError(f"no node labelled {label!r}")
        if len(hits) > 1:
            raise KeyError(f"label {label!r} is ambiguous "
                           f"(nodes {[n.id for n in hits]})")
        return hits[0]

    # -- structure ---------------------------------------------------------

    def find_cycle(self) -> list[int] | None:
        """Return one cycle as a node-id path, or None if acyclic."""
        WHITE, GRAY, BLACK = 0, 1, 2
        color = {n.id: WHITE for n in self._by_id.values()}
        parent: dict[int, int] = {}
        for root in sorted(color):
            if color[root] != WHITE:
                continue
            stack = [(root, iter(sorted(e.dst for e in self._out.get(root, ())))) ]
            color[root] = GRAY
            while stack:
                u, it = stack[-1]
                advanced = False
                for v in it:
                    if v not in color:
                        continue  # dangling endpoint; reported elsewhere
                    if color[v] == WHITE:
                        color[v] = GRAY
                        parent[v] = u
                        stack.append((v, iter(sorted(e.dst for e in self._out.get(v, ())))))
                        advanced = True
                        break
                    if color[v] == GRAY:
                        path = [v, u]
                        w = u
                        while w != v:
                            w = parent[w]
                            path.append(w)
                        path.reverse()
                        return path
                if not advanced:
                    color[u] = BLACK
                    stack.pop()
        return None

    def topological_order(self) -> list[int]:
        """Node ids in dependency order (stable: ties broken by id)."""
        indeg = {n.id: 0 for n in self._by_id.values()}
        for e in self.edges:
            if e.dst in indeg and e.src in indeg:
                indeg[e.dst] += 1
        import heapq

        ready = [i for i, d in indeg.items() if d == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            u = heapq.heappop(ready)
            order.append(u)
            for e in self._out.get(u, ()):
                if e.dst not in indeg:
                    continue
                indeg[e.dst] -= 1
                if indeg[e.dst] == 0:
                    heapq.heappush(ready, e.dst)
        if len(order) != len(indeg):
            raise ValidationError(["graph contains a cycle"])
        return order

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SFG):
            return NotImplemented
        return (frozenset(self.nodes) == frozenset(other.nodes)
                and frozenset(self.edges) == frozenset(other.edges))

    def __hash__(self) -> int:
        return hash((frozenset(self.nodes), frozenset(self.edges)))

    def __repr__(self) -> str:
        return f"SFG({len(self.nodes)} nodes, {len(self.edges)} edges)"


def validate_sfg(g: SFG) -> list[str]:
    """Check every structural invariant; return violation descriptions.

    An empty list means the graph is well formed.  Messages name the node
    ids involved.  Checks run in a fixed order (identity, endpoints, kind
    shape, operand arity/positions, acyclicity) so the first entry is
    deterministic for a given graph.
    """
    out: list[str] = []
    for dup in g._duplicate_ids:
        out.append(f"duplicate node id {dup}")
    known = {n.id for n in g.nodes}
    for e in g.edges:
        for end in (e.src, e.dst):
            if end not in known:
                out.append(f"edge {e.src}->{e.dst} references missing node {end}")
        if e.pos < 0:
            out.append(f"edge {e.src}->{e.dst} has negative operand position")
    seen_edges: set[Edge] = set()
    for e in g.edges:
        if e in seen_edges:
            out.append(f"duplicate edge {e.src}->{e.dst} at position {e.pos}")
        seen_edges.add(e)

    for n in sorted(g._by_id.values(), key=lambda n: n.id):
        fan_in = [e for e in g.in_edges(n.id) if e.src in known]
        fan_out = [e for e in g.out_edges(n.id) if e.dst in known]
        if n.kind is NodeKind.OPERATION:
            if n.op is None:
                out.append(f"operation node {n.id} has no operation symbol")
                continue
            if n.op not in OP_ARITY:
                out.append(f"operation node {n.id} has unknown symbol {n.op!r}")
                continue
            arity = OP_ARITY[n.op]
            if len(fan_in) != arity:
                out.append(f"operation node {n.id} ({n.op!r}) has "
                           f"{len(fan_in)} operands, expected {arity}")
            else:
                positions = sorted(e.pos for e in fan_in)
                if positions != list(range(arity)):
                    out.append(f"operation node {n.id} operand positions "
                               f"{positions} are not 0..{arity - 1}")
        else:
            if n.op is not None:
                out.append(f"node {n.id} is {n.kind.value} but carries an "
                           f"operation symbol")
            if n.kind is NodeKind.INPUT and fan_in:
                out.append(f"input node {n.id} has incoming edges")
            if n.kind is NodeKind.CONSTANT and fan_in:
                out.append(f"constant node {n.id} has incoming edges")
            if n.kind is NodeKind.OUTPUT:
                if len(fan_in) != 1:
                    out.append(f"output node {n.id} has {len(fan_in)} incoming "
                               f"edges, expected 1")
                if fan_out:
                    out.append(f"output node {n.id} has outgoing edges")

    cycle = g.find_cycle()
    if cycle is not None:
        out.append("cycle: " + " -> ".join(str(i) for i in cycle))
    return out


# -- JSON document ----------------------------------------------------------
#
# {"nodes": [{"id": 0, "kind": "input", "label": "a"},
#            {"id": 5, "kind": "operation", "op": "*", "label": "m1"}, ...],
#  "edges": [{"from": 0, "to": 5, "pos": 0}, ...]}


def _node_from_json(obj: object, index: int) -> SfgNode:
    where = f"nodes[{index}]"
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    try:
        node_id = obj["id"]
        kind_str = obj["kind"]
    except KeyError as exc:
        raise ParseError(f"{where}: missing field {exc.args[0]!r}") from None
    if not isinstance(node_id, int) or isinstance(node_id, bool) or node_id < 0:
        raise ParseError(f"{where}: 'id' must be a non-negative integer")
    try:
        kind = NodeKind(kind_str)
    except ValueError:
        raise ParseError(f"{where}: unknown kind {kind_str!r}") from None
    op = obj.get("op")
    if op is not None and not isinstance(op, str):
        raise ParseError(f"{where}: 'op' must be a string")
    label = obj.get("label", "")
    if not isinstance(label, str):
        raise ParseError(f"{where}: 'label' must be a string")
    return SfgNode(id=node_id, kind=kind, op=op, label=label)


def _edge_from_json(obj: object, index: int) -> Edge:
    where = f"edges[{index}]"
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    try:
        src, dst = obj["from"], obj["to"]
    except KeyError as exc:
        raise ParseError(f"{where}: missing field {exc.args[0]!r}") from None
    pos = obj.get("pos", 0)
    for name, val in (("from", src), ("to", dst), ("pos", pos)):
        if not isinstance(val, int) or isinstance(val, bool) or val < 0:
            raise ParseError(f"{where}: {name!r} must be a non-negative integer")
    return Edge(src, dst, pos)


def parse_sfg(text: str) -> SFG:
    """Parse and validate a graph document.

    Raises ParseError (with line/column for malformed JSON, or the offending
    array index for schema violations) or ValidationError naming the first
    violated structural invariant.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    nodes_raw = doc.get("nodes")
    edges_raw = doc.get("edges")
    if not isinstance(nodes_raw, list):
        raise ParseError("'nodes' must be an array")
    if not isinstance(edges_raw, list):
        raise ParseError("'edges' must be an array")
    g = SFG(
        (_node_from_json(o, i) for i, o in enumerate(nodes_raw)),
        (_edge_from_json(o, i) for i, o in enumerate(edges_raw)),
    )
    violations = validate_sfg(g)
    if violations:
        raise ValidationError(violations)
    return g


def serialize_sfg(g: SFG) -> str:
    """Deterministic JSON form: nodes sorted by id, edges by (to, pos)."""
    doc = {
        "nodes": [
            {k: v for k, v in (
                ("id", n.id), ("kind", n.kind.value),
                ("op", n.op), ("label", n.label),
            ) if v not in (None, "")}
            for n in sorted(g._by_id.values(), key=lambda n: n.id)
        ],
        "edges": [
            {"from": e.src, "to": e.dst, "pos": e.pos}
            for e in sorted(set(g.edges), key=lambda e: (e.dst, e.pos, e.src))
        ],
    }
    return json.dumps(doc, indent=2) + "\n"
