"""Discrete parameterisations of causal diagrams and the interventional oracle.

Tables are dense numpy arrays with one axis per variable. The oracle computes
post-intervention distributions by truncated factorisation (drop the CPT of
each intervened node and clamp its value) and cross-checks that against the
latent-inclusive G-formula computed from the observational joint.
"""
from __future__ import annotations

import math
import string
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from planid.errors import (
    FeasibilityError,
    InternalInvariantError,
    InvalidQueryError,
    PositivityError,
)
from planid.graph import CausalDiagram, NodeKind, check_order, descendants

MAX_CELLS = 2 ** 24
EPSILON = 1e-3
_LETTERS = string.ascii_letters


def _einsum(operands, out_vars):
    """Contract (vars, array) pairs onto ``out_vars`` with generated subscripts."""
    letters: dict[str, str] = {}
    for vars_, _ in operands:
        for v in vars_:
            letters.setdefault(v, _LETTERS[len(letters)])
    for v in out_vars:
        letters.setdefault(v, _LETTERS[len(letters)])
    spec = ",".join("".join(letters[v] for v in vars_) for vars_, _ in operands)
    spec += "->" + "".join(letters[v] for v in out_vars)
    arrays = [arr for _, arr in operands]
    if len(arrays) == 1:
        return np.einsum(spec, *arrays)
    return np.einsum(spec, *arrays, optimize=True)


@dataclass(frozen=True, eq=False)
class Distribution:
    """A probability table over an ordered scope of discrete variables."""

    scope: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(self.scope))
        table = np.asarray(self.table, dtype=float)
        object.__setattr__(self, "table", table)
        if table.ndim != len(self.scope):
            raise InvalidQueryError(f"table has {table.ndim} axes for scope {self.scope}")
        if len(set(self.scope)) != len(self.scope):
            raise InvalidQueryError(f"scope {self.scope} repeats a variable")
        if (table < 0).any():
            raise InvalidQueryError("distribution table has negative entries")

    @property
    def cards(self) -> tuple[int, ...]:
        return self.table.shape

    def axis(self, var: str) -> int:
        try:
            return self.scope.index(var)
        except ValueError:
            raise InvalidQueryError(f"{var!r} is not in scope {self.scope}") from None

    def total(self) -> float:
        return float(self.table.sum())

    def marginal(self, vars_: Sequence[str]) -> "Distribution":
        vars_ = tuple(vars_)
        for v in vars_:
            self.axis(v)
        return Distribution(vars_, _einsum([(self.scope, self.table)], vars_))

    def reduce(self, evidence: Mapping[str, int]) -> "Distribution":
        """Slice out ``evidence`` without renormalising."""
        index = []
        for v, card in zip(self.scope, self.cards):
            if v in evidence:
                value = int(evidence[v])
                if not 0 <= value < card:
                    raise InvalidQueryError(f"value {value} out of range for {v!r} (card {card})")
                index.append(value)
            else:
                index.append(slice(None))
        for v in evidence:
            self.axis(v)
        keep = tuple(v for v in self.scope if v not in evidence)
        return Distribution(keep, self.table[tuple(index)])

    def condition(self, evidence: Mapping[str, int]) -> "Distribution":
        sliced = self.reduce(evidence)
        mass = sliced.total()
        if mass <= 0.0:
            raise PositivityError("P(" + ",".join(sliced.scope) + ")", evidence)
        return Distribution(sliced.scope, sliced.table / mass)

    def conditional(self, target: Sequence[str], given: Sequence[str]) -> np.ndarray:
        """P(target | given) as an array with axes ``given + target``.

        Raises :class:`PositivityError` when some configuration of ``given`` has zero mass.
        """
        target, given = tuple(target), tuple(given)
        num = self.marginal(given + target).table
        den = self.marginal(given).table
        if given and (den <= 0).any():
            bad = np.argwhere(den <= 0)[0]
            raise PositivityError(
                f"P({','.join(target)}|{','.join(given)})", dict(zip(given, map(int, bad)))
            )
        return num / den.reshape(den.shape + (1,) * len(target))

    def prob(self, assignment: Mapping[str, int]) -> float:
        return self.reduce(assignment).total()

    def max_abs_diff(self, other: "Distribution") -> float:
        aligned = other.marginal(self.scope)
        return float(np.max(np.abs(self.table - aligned.table))) if self.table.size else 0.0


class DiscreteModel:
    """A causal diagram with a cardinality and a CPT for every node, latents included.

    ``cpts[v]`` has axes ``diagram.parents(v) + (v,)``; each slice along the
    last axis is a distribution.
    """

    def __init__(self, diagram: CausalDiagram, cards: Mapping[str, int], cpts: Mapping[str, np.ndarray]):
        self.diagram = diagram
        self.cards = {v: int(cards[v]) for v in diagram.names if v in cards}
        missing = [v for v in diagram.names if v not in self.cards]
        if missing:
            raise InvalidQueryError(f"no cardinality for nodes {missing}")
        for v, c in self.cards.items():
            if c < 2:
                raise InvalidQueryError(f"cardinality of {v!r} must be at least 2, got {c}")
        extra = set(cpts) - set(diagram.names)
        if extra:
            raise InvalidQueryError(f"CPTs given for unknown nodes {sorted(extra)}")
        self.cpts: dict[str, np.ndarray] = {}
        for v in diagram.names:
            if v not in cpts:
                raise InvalidQueryError(f"no CPT for node {v!r}")
            table = np.asarray(cpts[v], dtype=float)
            shape = tuple(self.cards[p] for p in diagram.parents(v)) + (self.cards[v],)
            if table.shape != shape:
                raise InvalidQueryError(f"CPT of {v!r} has shape {table.shape}, expected {shape}")
            if (table < 0).any():
                raise InvalidQueryError(f"CPT of {v!r} has negative entries")
            if np.abs(table.sum(axis=-1) - 1.0).max() > 1e-12:
                raise InvalidQueryError(f"CPT of {v!r} does not sum to one")
            table.setflags(write=False)
            self.cpts[v] = table

    def family(self, v: str) -> tuple[str, ...]:
        return self.diagram.parents(v) + (v,)

    def cells(self, vars_=None) -> int:
        vars_ = self.diagram.names if vars_ is None else vars_
        return math.prod(self.cards[v] for v in vars_)


def _check_size(m: DiscreteModel) -> None:
    cells = m.cells()
    if cells > MAX_CELLS:
        raise FeasibilityError(f"joint table would have {cells} cells (limit {MAX_CELLS})")


def joint(m: DiscreteModel) -> Distribution:
    """Full joint over every node (declaration order) as the product of all CPTs."""
    _check_size(m)
    names = m.diagram.names
    table = _einsum([(m.family(v), m.cpts[v]) for v in names], names)
    return Distribution(names, table)


def observed_joint(m: DiscreteModel) -> Distribution:
    return joint(m).marginal(m.diagram.observed)


def intervene(m: DiscreteModel, assignment: Mapping[str, int], keep_intervened: bool = False) -> Distribution:
    """Truncated factorisation for ``do(assignment)``.

    By default the result ranges over the non-intervened nodes. With
    ``keep_intervened`` the intervened nodes stay in scope carrying zero mass
    away from their clamped values.
    """
    _check_size(m)
    g = m.diagram
    for v, value in assignment.items():
        g.index(v)
        if not 0 <= int(value) < m.cards[v]:
            raise InvalidQueryError(f"value {value} out of range for {v!r} (card {m.cards[v]})")
    operands = []
    for v in g.names:
        if v in assignment:
            point = np.zeros(m.cards[v])
            point[int(assignment[v])] = 1.0
            operands.append(((v,), point))
        else:
            operands.append((m.family(v), m.cpts[v]))
    names = g.names if keep_intervened else tuple(v for v in g.names if v not in assignment)
    return Distribution(names, _einsum(operands, names))


def _plan_values(q) -> dict[str, int]:
    values = dict(q.values or {})
    missing = [x for x in q.order if x not in values]
    if missing:
        raise InvalidQueryError(f"plan assigns no value to controls {missing}")
    return {x: int(values[x]) for x in q.order}


def latent_blocks(g: CausalDiagram, order: Sequence[str]) -> list[tuple[str, ...]]:
    """Default blocks L_1..L_n for the latent-inclusive G-formula.

    L_k holds the non-control nodes (observed or latent) that descend from none
    of X_k..X_n and were not already placed in an earlier block.
    """
    placed: set[str] = set()
    blocks = []
    for k in range(len(order)):
        desc = descendants(g, order[k:])
        block = tuple(
            v for v in g.names
            if g.kind(v) is not NodeKind.CONTROL and v not in desc and v not in placed
        )
        placed.update(block)
        blocks.append(block)
    return blocks


def check_blocks(g: CausalDiagram, order: Sequence[str], blocks: Sequence[Sequence[str]]) -> None:
    """Raise unless L_1, X_1, ..., L_n, X_n lists an ancestrally closed prefix of ``g``."""
    if len(blocks) != len(order):
        raise InvalidQueryError("need exactly one L-block per control")
    prefix: set[str] = set()
    for k, (block, x) in enumerate(zip(blocks, order), start=1):
        for v in block:
            if g.kind(v) is NodeKind.CONTROL:
                raise InvalidQueryError(f"L_{k} contains the control {v!r}")
            if v in prefix:
                raise InvalidQueryError(f"{v!r} appears in more than one L-block")
        if set(block) & descendants(g, order[k - 1:]):
            raise InvalidQueryError(f"L_{k} contains a descendant of X_{k}..X_n")
        prefix.update(block)
        for v in tuple(block) + (x,):
            outside = set(g.parents(v)) - prefix
            if outside:
                raise InvalidQueryError(
                    f"parents {sorted(outside)} of {v!r} come after it in the L/X sequence"
                )
        prefix.add(x)


def g_formula_latent(m: DiscreteModel, q, blocks: Sequence[Sequence[str]] | None = None) -> Distribution:
    """P(y | do(plan)) from the latent-inclusive joint via the G-formula over L-blocks.

    sum_l P(y | l_1..l_n, x_1..x_n) * prod_k P(l_k | l_1..l_{k-1}, x_1..x_{k-1}),
    with outcome components that fall inside an L-block held fixed rather
    than summed.
    """
    g = m.diagram
    order = tuple(q.order)
    blocks = latent_blocks(g, order) if blocks is None else [tuple(b) for b in blocks]
    check_blocks(g, order, blocks)
    values = _plan_values(q)
    outcome = tuple(q.outcome)
    full = joint(m)
    operands = []
    seen: list[str] = []
    for k, block in enumerate(blocks):
        if block:
            given = tuple(seen) + order[:k]
            operands.append((given + block, full.conditional(block, given)))
        seen.extend(block)
    rest_y = tuple(y for y in outcome if y not in seen)
    if rest_y:
        given = tuple(seen) + order
        operands.append((given + rest_y, full.conditional(rest_y, given)))
    sliced = []
    for vars_, arr in operands:
        index = tuple(values[v] if v in values else slice(None) for v in vars_)
        sliced.append((tuple(v for v in vars_ if v not in values), arr[index]))
    out_vars = tuple(v for v in g.names if v in outcome)
    table = _einsum(sliced, out_vars) if sliced else np.ones(())
    return Distribution(out_vars, table).marginal(outcome)


def causal_effect_oracle(m: DiscreteModel, q, cross_check: bool = True, tol: float = 1e-12) -> Distribution:
    """Ground-truth P(y | do(plan)): truncated factorisation marginalised onto the outcome.

    With ``cross_check`` the latent-inclusive G-formula is evaluated as well
    and any disagreement beyond ``tol`` raises :class:`InternalInvariantError`.
    """
    values = _plan_values(q)
    outcome = tuple(q.outcome)
    truth = intervene(m, values).marginal(outcome)
    if cross_check:
        other = g_formula_latent(m, q)
        diff = truth.max_abs_diff(other)
        if diff > tol:
            raise InternalInvariantError(f"oracle routes disagree by {diff:.3e}")
    return truth


def random_model(g: CausalDiagram, seed: int, max_card: int = 2, eps: float = EPSILON) -> DiscreteModel:
    """Random strictly positive model; identical (g, seed, max_card) give identical tables.

    Each CPT row is a Dirichlet(1) draw squeezed into [eps, 1 - (card-1)*eps].
    """
    if max_card < 2:
        raise InvalidQueryError("max_card must be at least 2")
    rng = np.random.default_rng(seed)
    cards = {v: int(rng.integers(2, max_card + 1)) for v in g.names}
    cpts = {}
    for v in g.names:
        shape = tuple(cards[p] for p in g.parents(v))
        rows = rng.dirichlet(np.ones(cards[v]), size=shape)
        rows = eps + (1.0 - cards[v] * eps) * rows
        cpts[v] = rows / rows.sum(axis=-1, keepdims=True)
    return DiscreteModel(g, cards, cpts)


def conditionally_independent(dist: Distribution, x, y, z=(), atol: float = 1e-9) -> bool:
    """Exact test of X _||_ Y | Z in a table: P(x,y,z) P(z) == P(x,z) P(y,z) cellwise."""
    x, y, z = tuple(x), tuple(y), tuple(z)
    if not x or not y:
        return True
    pxyz = dist.marginal(z + x + y).table
    pz = dist.marginal(z).table
    pxz = dist.marginal(z + x).table
    pyz = dist.marginal(z + y).table
    nz, nx, ny = len(z), len(x), len(y)
    lhs = pxyz * pz.reshape(pz.shape + (1,) * (nx + ny))
    rhs = pxz.reshape(pxz.shape + (1,) * ny) * pyz.reshape(pyz.shape[:nz] + (1,) * nx + pyz.shape[nz:])
    return bool(np.allclose(lhs, rhs, atol=atol, rtol=0))
