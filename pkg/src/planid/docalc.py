"""The three do-calculus rules and a bounded search for hat-free rewrites.

An :class:`InterventionalExpr` is a single term P(y | do(x), w). The search
works on sums of products of such terms; besides the three rules it may
expand a term over one covariate c,

    P(y | do(x), w) = sum_c P(y | do(x), w, c) P(c | do(x), w),

which is the only administrative move it knows. Failing to find a rewrite
within the depth bound says nothing about identifiability.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from planid.discrete import DiscreteModel, intervene
from planid.dsep import SeparationQuery
from planid.errors import InvalidExpressionError
from planid.estimand import Estimand, Factor
from planid.graph import CausalDiagram, NodeKind, ancestors, mutilate


def _fs(nodes) -> frozenset:
    return frozenset((nodes,)) if isinstance(nodes, str) else frozenset(nodes)


@dataclass(frozen=True)
class InterventionalExpr:
    """P(target | do(interventions), observations)."""

    target: frozenset
    interventions: frozenset = frozenset()
    observations: frozenset = frozenset()

    def __post_init__(self):
        for name in ("target", "interventions", "observations"):
            object.__setattr__(self, name, _fs(getattr(self, name)))
        t, x, w = self.target, self.interventions, self.observations
        if not t:
            raise InvalidExpressionError("empty target")
        if t & x or t & w or x & w:
            raise InvalidExpressionError("target, interventions and observations must be disjoint")

    @property
    def hat_free(self) -> bool:
        return not self.interventions

    def validate(self, g: CausalDiagram) -> "InterventionalExpr":
        for v in self.target | self.interventions | self.observations:
            if g.kind(v) is NodeKind.LATENT:
                raise InvalidExpressionError(f"latent node {v!r} in an interventional expression")
        return self

    def render(self, g: CausalDiagram) -> str:
        cond = [v.lower() for v in _given_order(g, self.observations)]
        if self.interventions:
            cond.append("do(" + ",".join(v.lower() for v in _given_order(g, self.interventions)) + ")")
        text = "P(" + ",".join(v.lower() for v in g.ordered(self.target))
        return text + ("|" + ",".join(cond) if cond else "") + ")"


def _given_order(g: CausalDiagram, nodes) -> tuple[str, ...]:
    """Non-controls first, then controls, each in declaration order."""
    nodes = g.ordered(nodes)
    return tuple(v for v in nodes if g.kind(v) is not NodeKind.CONTROL) + tuple(
        v for v in nodes if g.kind(v) is NodeKind.CONTROL
    )


@dataclass(frozen=True)
class RuleCheck:
    rule: int
    ok: bool
    moved: frozenset
    direction: str
    query: SeparationQuery

    def __bool__(self):
        return self.ok


def rule_applicable(g: CausalDiagram, rule: int, expr: InterventionalExpr, z) -> RuleCheck:
    """Test whether ``rule`` may move ``z`` in ``expr``; the query records the justification.

    Rule 1 inserts or deletes observations, rule 2 swaps do(z) and z, rule 3
    inserts or deletes do(z). The direction is read off where ``z`` sits in
    ``expr``.
    """
    expr.validate(g)
    z = g.nodeset(z)
    for v in z:
        if g.kind(v) is NodeKind.LATENT:
            raise InvalidExpressionError(f"latent node {v!r} cannot be moved")
    if z & expr.target:
        raise InvalidExpressionError("moved set overlaps the target")
    y, x, w = expr.target, expr.interventions, expr.observations
    fresh = not (z & (x | w))
    if rule == 1:
        if z <= w and z:
            direction = "delete"
        elif fresh:
            direction = "insert"
        else:
            raise InvalidExpressionError("rule 1 moves observations: z must be observed or fresh")
        query = SeparationQuery(z, y, x | (w - z), bar=x)
    elif rule == 2:
        if z <= x and z:
            direction = "action-to-observation"
        elif z <= w and z:
            direction = "observation-to-action"
        elif not z:
            direction = "action-to-observation"
        else:
            raise InvalidExpressionError("rule 2 moves a set that is entirely actions or entirely observations")
        xs, ws = x - z, w - z
        query = SeparationQuery(z, y, xs | ws, bar=xs, under=z)
    elif rule == 3:
        if z <= x and z:
            direction = "delete"
        elif fresh:
            direction = "insert"
        else:
            raise InvalidExpressionError("rule 3 moves actions: z must be intervened or fresh")
        xs = x - z
        z_w = z - ancestors(mutilate(g, bar=xs), w)
        query = SeparationQuery(z, y, xs | w, bar=xs | z_w)
    else:
        raise ValueError(f"unknown rule {rule!r}")
    return RuleCheck(rule, query.holds(g), z, direction, query)


def apply_rule(expr: InterventionalExpr, check: RuleCheck) -> InterventionalExpr:
    """The expression on the other side of an accepted rule application."""
    z, x, w = check.moved, expr.interventions, expr.observations
    new = {
        (1, "delete"): (x, w - z),
        (1, "insert"): (x, w | z),
        (2, "action-to-observation"): (x - z, w | z),
        (2, "observation-to-action"): (x | z, w - z),
        (3, "delete"): (x - z, w),
        (3, "insert"): (x | z, w),
    }[(check.rule, check.direction)]
    return InterventionalExpr(expr.target, *new)


@dataclass(frozen=True)
class Term:
    """sum over ``sum_vars`` of the product of ``atoms``."""

    sum_vars: frozenset
    atoms: frozenset

    @property
    def hat_free(self) -> bool:
        return all(a.hat_free for a in self.atoms)

    def variables(self) -> frozenset:
        out = set(self.sum_vars)
        for a in self.atoms:
            out |= a.target | a.interventions | a.observations
        return frozenset(out)

    def sorted_atoms(self, g: CausalDiagram) -> list[InterventionalExpr]:
        return sorted(self.atoms, key=lambda a: (-max(map(g.index, a.target)), a.render(g)))

    def render(self, g: CausalDiagram) -> str:
        body = " * ".join(a.render(g) for a in self.sorted_atoms(g))
        if self.sum_vars:
            return "sum_{" + ",".join(v.lower() for v in g.ordered(self.sum_vars)) + "} " + body
        return body


@dataclass(frozen=True)
class RewriteStep:
    rule: int | str
    moved: frozenset
    direction: str
    query: SeparationQuery | None
    result: Term

    def render(self, g: CausalDiagram) -> str:
        moved = "{" + ",".join(g.ordered(self.moved)) + "}"
        if self.query is None:
            head = f"expand {moved}"
        else:
            head = f"rule {self.rule} {self.direction} {moved} by {self.query.render(g)}"
        return f"{head} => {self.result.render(g)}"


def _moves(g: CausalDiagram, term: Term):
    used = term.variables()
    for atom in sorted(term.atoms, key=lambda a: a.render(g)):
        if atom.hat_free:
            continue
        rest = term.atoms - {atom}
        for rule in (2, 3):
            for v in g.ordered(atom.interventions):
                check = rule_applicable(g, rule, atom, {v})
                if check:
                    yield RewriteStep(rule, check.moved, check.direction, check.query,
                                      Term(term.sum_vars, rest | {apply_rule(atom, check)}))
        for v in g.ordered(atom.observations):
            check = rule_applicable(g, 1, atom, {v})
            if check:
                yield RewriteStep(1, check.moved, check.direction, check.query,
                                  Term(term.sum_vars, rest | {apply_rule(atom, check)}))
        for c in g.covariates:
            if c in used:
                continue
            split = {
                InterventionalExpr(atom.target, atom.interventions, atom.observations | {c}),
                InterventionalExpr(frozenset({c}), atom.interventions, atom.observations),
            }
            yield RewriteStep("sum", frozenset({c}), "expand", None,
                              Term(term.sum_vars | {c}, rest | split))


def default_depth(g: CausalDiagram) -> int:
    return 2 * (len(g.controls) + len(g.covariates))


def reduce(g: CausalDiagram, expr: InterventionalExpr, depth: int | None = None) -> list[RewriteStep] | None:
    """Breadth-first search for a hat-free rewrite of ``expr``.

    Returns the shortest trace found (empty if ``expr`` is already hat-free)
    or ``None`` when the depth bound is exhausted.
    """
    expr.validate(g)
    depth = default_depth(g) if depth is None else depth
    if depth < 0:
        raise ValueError("depth must be non-negative")
    start = Term(frozenset(), frozenset({expr}))
    if start.hat_free:
        return []
    seen = {start}
    queue = deque([(start, [])])
    while queue:
        term, trace = queue.popleft()
        if len(trace) >= depth:
            continue
        for step in _moves(g, term):
            if step.result in seen:
                continue
            seen.add(step.result)
            new_trace = trace + [step]
            if step.result.hat_free:
                return new_trace
            queue.append((step.result, new_trace))
    return None


def term_to_estimand(g: CausalDiagram, term: Term, outcome: Sequence[str]) -> Estimand:
    """Read a hat-free term as an :class:`Estimand`, outcome factor first."""
    if not term.hat_free:
        raise InvalidExpressionError("term still contains interventions")
    outcome = set(outcome)
    atoms = sorted(term.atoms, key=lambda a: (not (a.target & outcome), g.index(g.ordered(a.target)[0])))
    factors = [Factor(g.ordered(a.target), _given_order(g, a.observations)) for a in atoms]
    return Estimand(g.ordered(term.sum_vars), tuple(factors))


def render_trace(g: CausalDiagram, trace: Sequence[RewriteStep]) -> str:
    return "\n".join(f"{i}. {step.render(g)}" for i, step in enumerate(trace, start=1))


def interventional_table(m: DiscreteModel, expr: InterventionalExpr) -> tuple[tuple[str, ...], np.ndarray]:
    """P(target | do(x), w) for every value combination, by truncated factorisation.

    Returns ``(axes, table)`` with axes ordered interventions, observations, target.
    """
    g = m.diagram
    xs = g.ordered(expr.interventions)
    ws = g.ordered(expr.observations)
    ys = g.ordered(expr.target)
    shape = tuple(m.cards[v] for v in xs + ws + ys)
    table = np.empty(shape)
    for xval in itertools.product(*(range(m.cards[v]) for v in xs)):
        post = intervene(m, dict(zip(xs, xval)))
        table[xval] = post.conditional(ys, ws)
    return xs + ws + ys, table
