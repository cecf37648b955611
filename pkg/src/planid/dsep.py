"""d-separation by reachability over (node, direction) states, and ancestral sets."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from planid.errors import InvalidQueryError
from planid.graph import CausalDiagram, ancestors, descendants, mutilate

_UP, _DOWN = 0, 1


def reachable(g: CausalDiagram, source, given=()) -> frozenset[str]:
    """Nodes d-connected to ``source`` given ``given`` (the classic Bayes-ball sweep).

    Conditioned nodes are never reported as reachable.
    """
    source = g.nodeset(source)
    given = g.nodeset(given)
    opens_collider = ancestors(g, given)
    visited: set[tuple[str, int]] = set()
    found: set[str] = set()
    # a source is entered "from below" so that both its parents and children are explored
    queue = deque((x, _UP) for x in source)
    while queue:
        v, d = queue.popleft()
        if (v, d) in visited:
            continue
        visited.add((v, d))
        if v not in given:
            found.add(v)
        if d == _UP and v not in given:
            queue.extend((p, _UP) for p in g.parents(v))
            queue.extend((c, _DOWN) for c in g.children(v))
        elif d == _DOWN:
            if v not in given:
                queue.extend((c, _DOWN) for c in g.children(v))
            if v in opens_collider:
                queue.extend((p, _UP) for p in g.parents(v))
    return frozenset(found)


def d_separated(g: CausalDiagram, x, y, z=()) -> bool:
    """True iff ``z`` blocks every path between ``x`` and ``y`` in ``g``.

    The three sets must be pairwise disjoint; an empty ``x`` or ``y`` is
    trivially separated.

    >>> g = CausalDiagram(["a", "b", "c"], [("a", "b"), ("c", "b")])
    >>> d_separated(g, "a", "c"), d_separated(g, "a", "c", "b")
    (True, False)
    """
    x, y, z = g.nodeset(x), g.nodeset(y), g.nodeset(z)
    if x & y:
        raise InvalidQueryError(f"separation query sides overlap on {sorted(x & y)}")
    if z & (x | y):
        raise InvalidQueryError(f"conditioning set overlaps the query sides on {sorted(z & (x | y))}")
    if not x or not y:
        return True
    return not (reachable(g, x, z) & y)


def ancestral_set(g: CausalDiagram, x, y) -> frozenset[str]:
    """A(X, Y): every node having a descendant in X or Y (X and Y themselves included)."""
    x, y = g.nodeset(x), g.nodeset(y)
    if x & y:
        raise InvalidQueryError(f"ancestral_set arguments overlap on {sorted(x & y)}")
    return ancestors(g, x | y)


def _fmt(g: CausalDiagram, s) -> str:
    return "{" + ",".join(g.ordered(s)) + "}"


@dataclass(frozen=True)
class SeparationQuery:
    """(X _||_ Y | Z) to be tested in ``mutilate(G, bar, under)``."""

    x: frozenset
    y: frozenset
    z: frozenset = frozenset()
    bar: frozenset = field(default=frozenset())
    under: frozenset = field(default=frozenset())

    def __post_init__(self):
        for name in ("x", "y", "z", "bar", "under"):
            value = getattr(self, name)
            if isinstance(value, str):
                value = (value,)
            object.__setattr__(self, name, frozenset(value))

    def graph(self, g: CausalDiagram) -> CausalDiagram:
        return mutilate(g, self.bar, self.under) if (self.bar or self.under) else g

    def holds(self, g: CausalDiagram) -> bool:
        return d_separated(self.graph(g), self.x, self.y, self.z)

    def render(self, g: CausalDiagram) -> str:
        text = f"({_fmt(g, self.y)} _||_ {_fmt(g, self.x)} | {_fmt(g, self.z)})"
        return text + f" in G[bar={_fmt(g, self.bar)};under={_fmt(g, self.under)}]"


__all__ = [
    "SeparationQuery",
    "ancestral_set",
    "d_separated",
    "descendants",
    "reachable",
]
