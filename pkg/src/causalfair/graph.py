"""Causal DAGs, triplet shapes and d-separation.

``d_separated`` runs a reachability search over (node, direction) states on
bitmask adjacency (compiled when available). ``d_separated_by_paths`` is an
independent oracle that enumerates simple undirected paths and checks every
triplet; it exists for testing and is exponential in the worst case.
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

from causalfair import kernels
from causalfair.errors import (
    CycleError,
    NotAdjacentError,
    SchemaError,
    TooLargeError,
    UnknownNodeError,
)

MAX_IMPLIED_NODES = 12
NODE_NAME = re.compile(r"[A-Za-z0-9_]+")


class TripletKind(enum.Enum):
    CHAIN = "chain"
    FORK = "fork"
    COLLIDER = "collider"


@dataclass(frozen=True, order=True)
class IndependenceStatement:
    x: str
    y: str
    given: tuple[str, ...] = ()

    def __post_init__(self):
        if self.x == self.y:
            raise ValueError("x and y must differ")
        if self.x in self.given or self.y in self.given:
            raise ValueError("x and y must not be in the conditioning set")
        object.__setattr__(self, "given", tuple(sorted(self.given)))

    def swapped(self):
        return IndependenceStatement(self.y, self.x, self.given)

    def __str__(self):
        cond = ", ".join(self.given)
        return f"{self.x} _|_ {self.y} | {{{cond}}}"


class CausalDag:
    """Immutable DAG over named nodes.

    >>> dag = CausalDag(["A", "Y"], [("A", "Y")])
    >>> sorted(dag.children("A"))
    ['Y']
    """

    def __init__(self, nodes: Iterable[str] = (), edges: Iterable[tuple[str, str]] = ()):
        edges = list(edges)
        node_set = set(nodes)
        for u, v in edges:
            for end in (u, v):
                if end not in node_set:
                    raise UnknownNodeError(end)
            if u == v:
                raise ValueError(f"self-loop on {u!r}")
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate edge")
        self._nodes = tuple(sorted(node_set))
        self._edges = frozenset(edges)
        self._index = {n: i for i, n in enumerate(self._nodes)}
        if self._topological_order() is None:
            raise CycleError("edge set contains a directed cycle")

    @property
    def nodes(self) -> tuple[str, ...]:
        return self._nodes

    @property
    def edges(self) -> frozenset[tuple[str, str]]:
        return self._edges

    def __len__(self):
        return len(self._nodes)

    def __contains__(self, node):
        return node in self._index

    def __eq__(self, other):
        if not isinstance(other, CausalDag):
            return NotImplemented
        return self._nodes == other._nodes and self._edges == other._edges

    def __hash__(self):
        return hash((self._nodes, self._edges))

    def __repr__(self):
        arcs = ", ".join(f"{u}->{v}" for u, v in sorted(self._edges))
        return f"CausalDag(nodes={list(self._nodes)}, edges=[{arcs}])"

    def index(self, node: str) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise UnknownNodeError(node) from None

    @cached_property
    def _parent_masks(self) -> list[int]:
        masks = [0] * len(self._nodes)
        for u, v in self._edges:
            masks[self._index[v]] |= 1 << self._index[u]
        return masks

    @cached_property
    def _child_masks(self) -> list[int]:
        masks = [0] * len(self._nodes)
        for u, v in self._edges:
            masks[self._index[u]] |= 1 << self._index[v]
        return masks

    @cached_property
    def _kernel_adjacency(self):
        if len(self._nodes) <= kernels.MAX_COMPILED_NODES:
            return (np.array(self._parent_masks, dtype=np.uint64),
                    np.array(self._child_masks, dtype=np.uint64))
        return self._parent_masks, self._child_masks

    def _names(self, mask: int) -> set[str]:
        return {n for i, n in enumerate(self._nodes) if mask >> i & 1}

    def parents(self, node: str) -> set[str]:
        return self._names(self._parent_masks[self.index(node)])

    def children(self, node: str) -> set[str]:
        return self._names(self._child_masks[self.index(node)])

    def neighbors(self, node: str) -> set[str]:
        return self.parents(node) | self.children(node)

    def has_edge(self, u: str, v: str) -> bool:
        return (u, v) in self._edges

    def descendants(self, node: str) -> set[str]:
        """Proper descendants of ``node``."""
        seen, stack = set(), [node]
        while stack:
            for ch in self.children(stack.pop()):
                if ch not in seen:
                    seen.add(ch)
                    stack.append(ch)
        return seen

    def ancestors(self, node: str) -> set[str]:
        seen, stack = set(), [node]
        while stack:
            for pa in self.parents(stack.pop()):
                if pa not in seen:
                    seen.add(pa)
                    stack.append(pa)
        return seen

    def _topological_order(self):
        indeg = {n: 0 for n in self._nodes}
        out = {n: [] for n in self._nodes}
        for u, v in self._edges:
            indeg[v] += 1
            out[u].append(v)
        ready = sorted(n for n, d in indeg.items() if d == 0)
        order = []
        while ready:
            n = ready.pop(0)
            order.append(n)
            for ch in sorted(out[n]):
                indeg[ch] -= 1
                if indeg[ch] == 0:
                    ready.append(ch)
            ready.sort()
        return order if len(order) == len(self._nodes) else None

    def topological_order(self) -> list[str]:
        """Kahn's order with lexicographic tie-breaking."""
        return self._topological_order()

    def with_node(self, node: str) -> CausalDag:
        return CausalDag(self._nodes + (node,), self._edges)


def add_edge(dag: CausalDag, source: str, target: str) -> CausalDag:
    """Return a new DAG with ``source -> target`` added."""
    dag.index(source)
    dag.index(target)
    if source == target:
        raise ValueError(f"self-loop on {source!r}")
    if dag.has_edge(source, target):
        raise ValueError(f"duplicate edge {source} -> {target}")
    if source in dag.descendants(target):
        raise CycleError(f"edge {source} -> {target} would create a directed cycle")
    return CausalDag(dag.nodes, dag.edges | {(source, target)})


def classify_triplet(dag: CausalDag, a: str, b: str, c: str) -> TripletKind:
    for u, v in ((a, b), (b, c)):
        dag.index(u)
        dag.index(v)
        if not (dag.has_edge(u, v) or dag.has_edge(v, u)):
            raise NotAdjacentError(f"{u} and {v} are not adjacent")
    into_b_from_a = dag.has_edge(a, b)
    into_b_from_c = dag.has_edge(c, b)
    if into_b_from_a and into_b_from_c:
        return TripletKind.COLLIDER
    if not into_b_from_a and not into_b_from_c:
        return TripletKind.FORK
    return TripletKind.CHAIN


def _check_query(dag, x, y, given):
    given = set(given)
    for n in (x, y, *given):
        dag.index(n)
    if x == y:
        raise ValueError("x and y must differ")
    if x in given or y in given:
        raise ValueError("x and y must not be in the conditioning set")
    return given


def d_separated(dag: CausalDag, x: str, y: str, given: Iterable[str] = (), backend=None) -> bool:
    """True when every trail between ``x`` and ``y`` is blocked by ``given``."""
    given = _check_query(dag, x, y, given)
    zmask = 0
    for n in given:
        zmask |= 1 << dag.index(n)
    parents, children = dag._kernel_adjacency
    return kernels.dsep(parents, children, dag.index(x), dag.index(y), zmask, backend=backend)


def simple_paths(dag: CausalDag, x: str, y: str) -> list[tuple[str, ...]]:
    """All simple paths from x to y in the undirected skeleton, sorted."""
    adj = {n: sorted(dag.neighbors(n)) for n in dag.nodes}
    paths = []

    def walk(path, on_path):
        tail = path[-1]
        if tail == y:
            paths.append(tuple(path))
            return
        for nb in adj[tail]:
            if nb not in on_path:
                path.append(nb)
                on_path.add(nb)
                walk(path, on_path)
                on_path.discard(nb)
                path.pop()

    walk([x], {x})
    return sorted(paths)


def path_blocked(dag: CausalDag, path, given: set[str], descendants=None) -> bool:
    """True when some interior triplet of ``path`` is inactive under ``given``."""
    for a, b, c in zip(path, path[1:], path[2:]):
        if classify_triplet(dag, a, b, c) is TripletKind.COLLIDER:
            desc = descendants[b] if descendants is not None else dag.descendants(b)
            if b not in given and not (desc & given):
                return True
        elif b in given:
            return True
    return False


def d_separated_by_paths(dag: CausalDag, x: str, y: str, given: Iterable[str] = ()) -> bool:
    """Brute-force oracle: enumerate every simple path and test each triplet."""
    given = _check_query(dag, x, y, given)
    return all(path_blocked(dag, p, given) for p in simple_paths(dag, x, y))


def oracle_table(dag: CausalDag) -> dict[tuple[str, str, frozenset], bool]:
    """Oracle verdicts for every unordered pair and every conditioning subset.

    Paths are enumerated once per pair, so this is much cheaper than calling
    ``d_separated_by_paths`` per query.
    """
    desc = {n: dag.descendants(n) for n in dag.nodes}
    out = {}
    for x, y in itertools.combinations(dag.nodes, 2):
        paths = simple_paths(dag, x, y)
        rest = [n for n in dag.nodes if n not in (x, y)]
        for r in range(len(rest) + 1):
            for z in itertools.combinations(rest, r):
                zs = set(z)
                out[(x, y, frozenset(z))] = all(path_blocked(dag, p, zs, desc) for p in paths)
    return out


def implied_independencies(dag: CausalDag) -> list[IndependenceStatement]:
    """Every d-separation statement of ``dag``, both orientations, sorted."""
    if len(dag) > MAX_IMPLIED_NODES:
        raise TooLargeError(f"{len(dag)} nodes exceeds the limit of {MAX_IMPLIED_NODES}")
    out = []
    for x, y in itertools.permutations(dag.nodes, 2):
        rest = [n for n in dag.nodes if n not in (x, y)]
        for r in range(len(rest) + 1):
            for z in itertools.combinations(rest, r):
                if d_separated(dag, x, y, z):
                    out.append(IndependenceStatement(x, y, z))
    return sorted(out)


A, Y, YHAT, C, U_C = "A", "Y", "Yhat", "C", "U_C"

_CANONICAL = {
    "dp": [(A, Y), (YHAT, Y)],
    "eo_chain_ay": [(A, Y), (Y, YHAT)],
    "eo_chain_ya": [(YHAT, Y), (Y, A)],
    "eo_fork": [(Y, A), (Y, YHAT)],
    "pp_chain_ay": [(A, YHAT), (YHAT, Y)],
    "pp_chain_ya": [(Y, YHAT), (YHAT, A)],
    "pp_fork": [(YHAT, A), (YHAT, Y)],
    # A -> Yhat carries the dependence of the fairness fallback on the group
    "correction": [(A, C), (U_C, C), (A, Y), (Y, YHAT), (C, YHAT), (A, YHAT)],
}
CANONICAL_KINDS = tuple(_CANONICAL)
FAIRNESS_KINDS = CANONICAL_KINDS[:-1]


def canonical_graph(kind: str) -> CausalDag:
    """Minimal DAGs for each fairness regime; each unblocked path is one edge."""
    try:
        edges = _CANONICAL[kind]
    except KeyError:
        raise ValueError(f"unknown canonical graph {kind!r}; choose from {CANONICAL_KINDS}") from None
    nodes = {n for e in edges for n in e}
    return CausalDag(nodes, edges)


def parse_edge_list(text: str) -> CausalDag:
    """Parse ``from -> to`` lines; blank lines and ``#`` comments are skipped.

    A line holding a single name declares an isolated node.
    """
    nodes, edges = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split("->")]
        if len(parts) == 1 and NODE_NAME.fullmatch(parts[0]):
            nodes.append(parts[0])
            continue
        if len(parts) != 2 or not all(NODE_NAME.fullmatch(p) for p in parts):
            raise SchemaError(f"line {lineno}: expected 'from -> to', got {raw!r}")
        nodes.extend(parts)
        edges.append(tuple(parts))
    if len(set(edges)) != len(edges):
        raise SchemaError("duplicate edge in edge list")
    try:
        return CausalDag(nodes, edges)
    except (CycleError, ValueError) as exc:
        raise SchemaError(str(exc)) from exc


def format_edge_list(dag: CausalDag) -> str:
    lines = [f"{u} -> {v}" for u, v in sorted(dag.edges)]
    touched = {n for e in dag.edges for n in e}
    lines += [n for n in dag.nodes if n not in touched]
    return "\n".join(lines) + "\n"
