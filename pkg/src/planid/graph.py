"""Causal diagrams: node kinds, reachability, mutilation and plan orderings.

Every node counts as its own descendant and its own ancestor. Node sets are
returned as frozensets; use :meth:`CausalDiagram.ordered` whenever a
deterministic iteration order (declaration order) is required.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from planid.errors import CycleError, InternalInvariantError, InvalidQueryError, UnknownNodeError


class NodeKind(enum.Enum):
    CONTROL = "control"
    COVARIATE = "covariate"
    LATENT = "latent"


@dataclass(frozen=True)
class Node:
    name: str
    kind: NodeKind
    outcome: bool = False

    def __post_init__(self):
        if not isinstance(self.kind, NodeKind):
            object.__setattr__(self, "kind", NodeKind(self.kind))
        if self.outcome and self.kind is not NodeKind.COVARIATE:
            raise InvalidQueryError(
                f"node {self.name!r}: only covariate nodes may carry the outcome flag"
            )


def _as_node(spec) -> Node:
    if isinstance(spec, Node):
        return spec
    if isinstance(spec, str):
        return Node(spec, NodeKind.COVARIATE)
    return Node(*spec)


class CausalDiagram:
    """An immutable DAG whose nodes are partitioned into controls, covariates and latents.

    >>> g = CausalDiagram([("x", "control"), ("y", "covariate", True)], [("x", "y")])
    >>> g.controls, g.outcomes
    (('x',), ('y',))
    """

    def __init__(self, nodes: Iterable, edges: Iterable[tuple[str, str]] = ()):
        nodes = tuple(_as_node(n) for n in nodes)
        index: dict[str, int] = {}
        for i, node in enumerate(nodes):
            if node.name in index:
                raise InvalidQueryError(f"duplicate node {node.name!r}")
            index[node.name] = i
        self._nodes = nodes
        self._index = index
        self._kinds = {n.name: n.kind for n in nodes}

        parents: dict[str, list[str]] = {n.name: [] for n in nodes}
        children: dict[str, list[str]] = {n.name: [] for n in nodes}
        seen = set()
        edge_list = []
        for a, b in edges:
            for v in (a, b):
                if v not in index:
                    raise UnknownNodeError(v)
            if a == b:
                raise CycleError((a, a))
            if (a, b) in seen:
                continue
            seen.add((a, b))
            edge_list.append((a, b))
            parents[b].append(a)
            children[a].append(b)
        edge_list.sort(key=lambda e: (index[e[0]], index[e[1]]))
        self._edges = tuple(edge_list)
        by_index = index.__getitem__
        self._parents = {v: tuple(sorted(p, key=by_index)) for v, p in parents.items()}
        self._children = {v: tuple(sorted(c, key=by_index)) for v, c in children.items()}
        self._topo = self._toposort()

    def _toposort(self) -> tuple[str, ...]:
        # Kahn's algorithm; ties broken by declaration order.
        indeg = {v: len(p) for v, p in self._parents.items()}
        ready = [n.name for n in self._nodes if indeg[n.name] == 0]
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            fresh = []
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    fresh.append(c)
            ready = sorted(ready + fresh, key=self._index.__getitem__)
        if len(order) < len(self._nodes):
            raise CycleError(self._find_cycle({v for v, d in indeg.items() if d > 0}))
        return tuple(order)

    def _find_cycle(self, candidates: set[str]) -> list[str]:
        start = min(candidates, key=self._index.__getitem__)
        path, pos, v = [], {}, start
        while v not in pos:
            pos[v] = len(path)
            path.append(v)
            v = next(p for p in self._parents[v] if p in candidates)
        cycle = path[pos[v]:] + [v]
        return cycle[::-1]

    # -- basic accessors -------------------------------------------------

    @property
    def nodes(self) -> tuple[Node, ...]:
        return self._nodes

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n.name for n in self._nodes)

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        return self._edges

    def kind(self, name: str) -> NodeKind:
        try:
            return self._kinds[name]
        except KeyError:
            raise UnknownNodeError(name) from None

    def node(self, name: str) -> Node:
        return self._nodes[self.index(name)]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownNodeError(name) from None

    def _of_kind(self, kind: NodeKind) -> tuple[str, ...]:
        return tuple(n.name for n in self._nodes if n.kind is kind)

    @property
    def controls(self) -> tuple[str, ...]:
        return self._of_kind(NodeKind.CONTROL)

    @property
    def covariates(self) -> tuple[str, ...]:
        return self._of_kind(NodeKind.COVARIATE)

    @property
    def latents(self) -> tuple[str, ...]:
        return self._of_kind(NodeKind.LATENT)

    @property
    def observed(self) -> tuple[str, ...]:
        return tuple(n.name for n in self._nodes if n.kind is not NodeKind.LATENT)

    @property
    def outcomes(self) -> tuple[str, ...]:
        return tuple(n.name for n in self._nodes if n.outcome)

    def parents(self, name: str) -> tuple[str, ...]:
        self.index(name)
        return self._parents[name]

    def children(self, name: str) -> tuple[str, ...]:
        self.index(name)
        return self._children[name]

    def topological_order(self) -> tuple[str, ...]:
        return self._topo

    def ordered(self, names: Iterable[str]) -> tuple[str, ...]:
        """Return ``names`` sorted by declaration order (validating each name)."""
        return tuple(sorted(set(names), key=self.index))

    def nodeset(self, names) -> frozenset[str]:
        """Validate and freeze a node-name collection; a bare string is one node."""
        if isinstance(names, str):
            names = (names,)
        out = frozenset(names)
        for v in out:
            self.index(v)
        return out

    def with_edges(self, edges: Iterable[tuple[str, str]]) -> "CausalDiagram":
        return CausalDiagram(self._nodes, edges)

    def __eq__(self, other):
        if not isinstance(other, CausalDiagram):
            return NotImplemented
        return self._nodes == other._nodes and set(self._edges) == set(other._edges)

    def __hash__(self):
        return hash((self._nodes, frozenset(self._edges)))

    def __repr__(self):
        edges = ", ".join(f"{a}->{b}" for a, b in self._edges)
        return f"CausalDiagram(nodes={list(self.names)}, edges=[{edges}])"


def _closure(step, start: Iterable[str]) -> frozenset[str]:
    seen = set(start)
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        for w in step(v):
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return frozenset(seen)


def descendants(g: CausalDiagram, nodes) -> frozenset[str]:
    """All nodes reachable from ``nodes`` along directed edges, ``nodes`` included."""
    return _closure(g.children, g.nodeset(nodes))


def ancestors(g: CausalDiagram, nodes) -> frozenset[str]:
    """All nodes with a directed path into ``nodes``, ``nodes`` included."""
    return _closure(g.parents, g.nodeset(nodes))


def mutilate(g: CausalDiagram, bar=(), underline=()) -> CausalDiagram:
    """Delete edges pointing into ``bar`` and edges emerging from ``underline``."""
    bar = g.nodeset(bar)
    underline = g.nodeset(underline)
    kept = [(a, b) for a, b in g.edges if b not in bar and a not in underline]
    return g.with_edges(kept)


def check_order(g: CausalDiagram, order: Sequence[str]) -> tuple[str, ...]:
    """Validate a plan ordering: every control exactly once, later controls never ancestors."""
    order = tuple(order)
    if len(set(order)) != len(order):
        raise InvalidQueryError(f"ordering {order} repeats a node")
    for v in order:
        if g.kind(v) is not NodeKind.CONTROL:
            raise InvalidQueryError(f"{v!r} in plan ordering is not a control node")
    if set(order) != set(g.controls):
        missing = g.ordered(set(g.controls) - set(order))
        raise InvalidQueryError(f"plan ordering omits control nodes {list(missing)}")
    for k, x in enumerate(order):
        later = order[k + 1:]
        if later and x in descendants(g, later):
            raise InvalidQueryError(
                f"ordering {list(order)} is inconsistent: {x!r} descends from a later control"
            )
    return order


def nondescendant_covariates(g: CausalDiagram, order: Sequence[str], k: int) -> frozenset[str]:
    """N_k: observed non-control nodes that descend from none of ``order[k-1:]`` (1-based k)."""
    n = len(order)
    if not 1 <= k <= n:
        raise IndexError(f"stage index {k} out of range 1..{n}")
    desc = descendants(g, order[k - 1:])
    return frozenset(v for v in g.covariates if v not in desc)


def consistent_orderings(g: CausalDiagram) -> list[tuple[str, ...]]:
    """Every consistent ordering of the control nodes, lexicographic by node name."""
    controls = g.controls
    desc = {x: descendants(g, x) for x in controls}
    out: list[tuple[str, ...]] = []

    def extend(prefix: tuple[str, ...], remaining: frozenset[str]):
        if not remaining:
            out.append(prefix)
            return
        for x in sorted(remaining):
            # x goes next only if it is not a descendant of anything still to come
            if any(x in desc[o] for o in remaining if o != x):
                continue
            extend(prefix + (x,), remaining - {x})

    extend((), frozenset(controls))
    return out


def build_g_star(g: CausalDiagram, order: Sequence[str], z_seq: Sequence[Iterable[str]]) -> CausalDiagram:
    """Augment ``g`` with the arrows into and out of the controls that leave admissibility unchanged.

    For each stage k: X_k points to every later control and to every descendant
    of a later control, and every member of Z_1..Z_k points to X_k.
    """
    order = check_order(g, order)
    z_seq = [g.nodeset(z) for z in z_seq]
    if len(z_seq) != len(order):
        raise InvalidQueryError("covariate sequence length differs from plan length")
    for k, z in enumerate(z_seq, start=1):
        bad = z - nondescendant_covariates(g, order, k)
        if bad:
            raise InvalidQueryError(f"Z_{k} contains nodes outside N_{k}: {list(g.ordered(bad))}")
    edges = list(g.edges)
    seen_z: set[str] = set()
    for k, x in enumerate(order):
        later = order[k + 1:]
        if later:
            edges.extend((x, d) for d in g.ordered(descendants(g, later)))
        seen_z |= z_seq[k]
        edges.extend((z, x) for z in g.ordered(seen_z))
    try:
        return g.with_edges(edges)
    except CycleError as exc:
        raise InternalInvariantError(f"G* construction produced a cycle: {exc}") from exc
