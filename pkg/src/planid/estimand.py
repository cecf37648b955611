"""Sum-of-products G-formula estimands: construction, canonical text, parsing, evaluation.

Text grammar (variables are lower-cased node names)::

    expr    := "sum_{" varlist "} " product | product
    product := factor (" * " factor)*
    factor  := "P(" varlist ("|" varlist)? ")"
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from planid.discrete import Distribution, _einsum
from planid.errors import InvalidQueryError, PositivityError


@dataclass(frozen=True)
class Factor:
    """A conditional probability P(target | given)."""

    target: tuple[str, ...]
    given: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "target", tuple(self.target))
        object.__setattr__(self, "given", tuple(self.given))
        if not self.target:
            raise InvalidQueryError("a factor needs a non-empty target")
        if set(self.target) & set(self.given) or len(set(self.variables)) != len(self.variables):
            raise InvalidQueryError(f"factor variables repeat: {self.target} | {self.given}")

    @property
    def variables(self) -> tuple[str, ...]:
        return self.target + self.given

    def render(self) -> str:
        text = "P(" + ",".join(v.lower() for v in self.target)
        if self.given:
            text += "|" + ",".join(v.lower() for v in self.given)
        return text + ")"


@dataclass(frozen=True)
class Estimand:
    """sum over ``sum_vars`` of the product of ``factors``.

    Estimands produced by :func:`build` put the outcome factor first, followed
    by one factor per non-empty stage.
    """

    sum_vars: tuple[str, ...]
    factors: tuple[Factor, ...]

    def __post_init__(self):
        object.__setattr__(self, "sum_vars", tuple(self.sum_vars))
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise InvalidQueryError("an estimand needs at least one factor")
        used = {v for f in self.factors for v in f.variables}
        unused = [v for v in self.sum_vars if v not in used]
        if unused:
            raise InvalidQueryError(f"summation variables {unused} appear in no factor")

    @property
    def outcome_factor(self) -> Factor:
        return self.factors[0]

    @property
    def stage_factors(self) -> tuple[Factor, ...]:
        return self.factors[1:]

    def variables(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for f in self.factors:
            for v in f.variables:
                seen.setdefault(v)
        return tuple(seen)

    def free_variables(self) -> tuple[str, ...]:
        return tuple(v for v in self.variables() if v not in self.sum_vars)

    def canonical(self):
        """Order-insensitive form, for comparing estimands built along different routes."""
        return (
            frozenset(self.sum_vars),
            frozenset((frozenset(f.target), frozenset(f.given)) for f in self.factors),
        )

    def __str__(self):
        return render(self)


def build(q, seq: Sequence[Sequence[str]]) -> Estimand:
    """The G-formula over covariate stages ``seq`` for plan query ``q``.

    sum_z P(y | z_1..z_n, x_1..x_n) * prod_k P(z_k | z_1..z_{k-1}, x_1..x_{k-1}).
    A node already listed in an earlier stage is not repeated; stages left
    empty contribute no factor; outcome components inside a stage are held
    fixed instead of summed.
    """
    order = tuple(q.order)
    outcome = tuple(q.outcome)
    if len(seq) != len(order):
        raise InvalidQueryError(f"covariate sequence has {len(seq)} stages for a plan of {len(order)}")
    seen: list[str] = []
    stages = []
    for k, stage in enumerate(seq):
        fresh = []
        for v in stage:
            if v not in seen and v not in fresh:
                fresh.append(v)
        if fresh:
            stages.append(Factor(tuple(fresh), tuple(seen) + order[:k]))
        seen.extend(fresh)
    y_target = tuple(y for y in outcome if y not in seen)
    factors = [Factor(y_target, tuple(seen) + order)] if y_target else []
    return Estimand(tuple(v for v in seen if v not in outcome), tuple(factors + stages))


def render(e: Estimand) -> str:
    body = " * ".join(f.render() for f in e.factors)
    if e.sum_vars:
        return "sum_{" + ",".join(v.lower() for v in e.sum_vars) + "} " + body
    return body


_VAR = r"[a-z0-9_]+"
_VARLIST = rf"{_VAR}(?:,{_VAR})*"
_FACTOR = rf"P\(({_VARLIST})(?:\|({_VARLIST}))?\)"
_FACTOR_RE = re.compile(_FACTOR)
_EXPR_RE = re.compile(rf"(?:sum_\{{({_VARLIST})\}} )?(P\({_VARLIST}(?:\|{_VARLIST})?\)(?: \* P\({_VARLIST}(?:\|{_VARLIST})?\))*)")


def parse(text: str, diagram=None) -> Estimand:
    """Parse canonical estimand text.

    With a ``diagram`` every lower-case variable is mapped back to the node
    whose lower-cased name matches it; otherwise names stay lower-case.
    """
    m = _EXPR_RE.fullmatch(text)
    if m is None:
        raise InvalidQueryError(f"not a canonical estimand: {text!r}")
    resolve = _resolver(diagram)
    sum_vars = tuple(resolve(v) for v in m.group(1).split(",")) if m.group(1) else ()
    factors = []
    for fm in _FACTOR_RE.finditer(m.group(2)):
        target = tuple(resolve(v) for v in fm.group(1).split(","))
        given = tuple(resolve(v) for v in fm.group(2).split(",")) if fm.group(2) else ()
        factors.append(Factor(target, given))
    return Estimand(sum_vars, tuple(factors))


def _resolver(diagram):
    if diagram is None:
        return lambda v: v
    table: dict[str, list[str]] = {}
    for name in diagram.names:
        table.setdefault(name.lower(), []).append(name)

    def resolve(v):
        hits = table.get(v, [])
        if len(hits) != 1:
            what = "ambiguous" if hits else "unknown"
            raise InvalidQueryError(f"{what} estimand variable {v!r}")
        return hits[0]

    return resolve


def evaluate(
    e: Estimand,
    joint: Distribution,
    plan_values: Mapping[str, int],
    outcome: Sequence[str] | None = None,
) -> Distribution:
    """Evaluate ``e`` exactly from an observational joint.

    Variables fixed by ``plan_values`` are sliced, summation variables are
    summed, and the result ranges over the remaining free variables (ordered
    as in ``joint.scope``). Passing ``outcome`` asserts what those free
    variables must be, which catches a control left without a value.
    """
    for v in e.variables():
        joint.axis(v)
    free = [v for v in e.free_variables() if v not in plan_values]
    if outcome is not None:
        missing = [v for v in free if v not in outcome]
        if missing:
            raise InvalidQueryError(f"missing plan value for {missing}")
        absent = [v for v in outcome if v not in e.free_variables()]
        if absent:
            raise InvalidQueryError(f"outcome variables {absent} do not occur free in the estimand")
    operands = []
    for f in e.factors:
        axes = f.given + f.target
        table = joint.marginal(axes).table
        if f.given:
            den = joint.marginal(f.given)
            fixed = {v: plan_values[v] for v in f.given if v in plan_values}
            den_slice = den.reduce(fixed).table
            if (den_slice <= 0).any():
                bad = np.argwhere(den_slice <= 0)[0]
                event = dict(fixed)
                event.update(zip([v for v in f.given if v not in fixed], map(int, bad)))
                raise PositivityError(f.render(), event)
            with np.errstate(divide="ignore", invalid="ignore"):
                table = table / den.table.reshape(den.table.shape + (1,) * len(f.target))
        index = tuple(int(plan_values[v]) if v in plan_values else slice(None) for v in axes)
        operands.append((tuple(v for v in axes if v not in plan_values), table[index]))
    out_vars = tuple(v for v in joint.scope if v in free)
    return Distribution(out_vars, _einsum(operands, out_vars))
