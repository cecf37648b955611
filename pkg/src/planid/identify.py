"""G-identifiability of sequential plans.

A covariate sequence Z_1..Z_n is admissible when, for every stage k,
Z_k only holds observed non-control nondescendants of X_k..X_n (N_k) and

    (Y _||_ X_k | X_1..X_{k-1}, Z_1..Z_k)  in  G with arrows out of X_k and
                                           arrows into X_{k+1}..X_n removed.

Outcome components that are themselves conditioned on are dropped from the
Y side of that test, so Y may overlap the covariates.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from planid.dsep import SeparationQuery, ancestral_set
from planid.errors import FeasibilityError, InvalidQueryError
from planid.estimand import Estimand, build
from planid.graph import (
    CausalDiagram,
    NodeKind,
    check_order,
    consistent_orderings,
    descendants,
    mutilate,
    nondescendant_covariates,
)

EXHAUSTIVE_LIMIT = 20
PARTITION_LIMIT = 15

CovariateSequence = tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class PlanQuery:
    """An ordered plan over every control plus the outcome set it targets."""

    order: tuple[str, ...]
    outcome: tuple[str, ...]
    values: Mapping[str, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))
        outcome = (self.outcome,) if isinstance(self.outcome, str) else tuple(self.outcome)
        object.__setattr__(self, "outcome", outcome)
        if self.values is not None:
            object.__setattr__(self, "values", {k: int(v) for k, v in dict(self.values).items()})

    @property
    def n(self) -> int:
        return len(self.order)

    def validate(self, g: CausalDiagram) -> "PlanQuery":
        check_order(g, self.order)
        if not self.outcome:
            raise InvalidQueryError("the outcome set is empty")
        if len(set(self.outcome)) != len(self.outcome):
            raise InvalidQueryError(f"outcome {self.outcome} repeats a node")
        for y in self.outcome:
            if g.kind(y) is not NodeKind.COVARIATE:
                raise InvalidQueryError(f"outcome {y!r} must be an observed non-control node")
        for x in self.values or {}:
            if x not in self.order:
                raise InvalidQueryError(f"plan value given for {x!r}, which is not a control")
        return self

    def with_values(self, values: Mapping[str, int]) -> "PlanQuery":
        return PlanQuery(self.order, self.outcome, values)


def plan_query(g: CausalDiagram, order=None, outcome=None, values=None) -> PlanQuery:
    """Build a validated query, defaulting to the first consistent ordering and the flagged outcomes."""
    if order is None:
        order = consistent_orderings(g)[0]
    if outcome is None:
        outcome = g.outcomes
    return PlanQuery(tuple(order), tuple(outcome), values).validate(g)


@dataclass(frozen=True)
class OutcomeSplit:
    y_k: frozenset
    y_k_star: frozenset


def outcome_split(g: CausalDiagram, q: PlanQuery, k: int) -> OutcomeSplit:
    n_k = nondescendant_covariates(g, q.order, k)
    y = frozenset(q.outcome)
    return OutcomeSplit(y & n_k, y - n_k)


def stage_graph(g: CausalDiagram, order: Sequence[str], k: int) -> CausalDiagram:
    """G_k: arrows out of X_k and into X_{k+1}..X_n removed."""
    return mutilate(g, bar=order[k:], underline=(order[k - 1],))


def stage_query(q: PlanQuery, k: int, conditioned: Iterable[str]) -> SeparationQuery:
    """The stage-k separation test given the union of Z_1..Z_k."""
    x_k = q.order[k - 1]
    given = frozenset(q.order[: k - 1]) | frozenset(conditioned)
    return SeparationQuery(
        x=frozenset({x_k}),
        y=frozenset(q.outcome) - given,
        z=given,
        bar=frozenset(q.order[k:]),
        under=frozenset({x_k}),
    )


@dataclass(frozen=True)
class StageCheck:
    k: int
    ok: bool
    query: SeparationQuery
    failed_eq: int | None = None
    outside_n_k: frozenset = frozenset()


@dataclass(frozen=True)
class AdmissibilityReport:
    stages: tuple[StageCheck, ...]

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.stages)

    def __bool__(self):
        return self.ok

    @property
    def first_failure(self) -> StageCheck | None:
        return next((s for s in self.stages if not s.ok), None)


@dataclass(frozen=True)
class Identified:
    sequence: CovariateSequence
    estimand: Estimand
    identified = True

    def __bool__(self):
        return True


@dataclass(frozen=True)
class NotGIdentifiable:
    failing_k: int
    witness: SeparationQuery | None
    identified = False

    def __bool__(self):
        return False


IdentificationResult = Identified | NotGIdentifiable


def _check_sequence(g: CausalDiagram, q: PlanQuery, seq) -> list[frozenset]:
    if len(seq) != q.n:
        raise InvalidQueryError(f"covariate sequence has {len(seq)} stages for a plan of {q.n}")
    out = []
    for k, z in enumerate(seq, start=1):
        z = g.nodeset(z)
        for v in g.ordered(z):
            if g.kind(v) is not NodeKind.COVARIATE:
                raise InvalidQueryError(f"Z_{k} contains the {g.kind(v).value} node {v!r}")
        out.append(z)
    return out


def admissible(g: CausalDiagram, q: PlanQuery, seq) -> AdmissibilityReport:
    """Check both conditions at every stage and report each one."""
    q.validate(g)
    seq = _check_sequence(g, q, seq)
    stages = []
    union: frozenset = frozenset()
    for k in range(1, q.n + 1):
        z_k = seq[k - 1]
        union |= z_k
        query = stage_query(q, k, union)
        outside = z_k - nondescendant_covariates(g, q.order, k)
        if outside:
            stages.append(StageCheck(k, False, query, failed_eq=1, outside_n_k=outside))
        elif not query.holds(g):
            stages.append(StageCheck(k, False, query, failed_eq=2))
        else:
            stages.append(StageCheck(k, True, query))
    return AdmissibilityReport(tuple(stages))


def _candidate(g: CausalDiagram, q: PlanQuery, k: int) -> frozenset:
    """W_k = (A_k intersect N_k) union Y_k, with A_k the ancestral set of (X_k, Y_k*) in G_k."""
    split = outcome_split(g, q, k)
    n_k = nondescendant_covariates(g, q.order, k)
    a_k = ancestral_set(stage_graph(g, q.order, k), {q.order[k - 1]}, split.y_k_star)
    return (a_k & n_k) | split.y_k


def w_sequence(g: CausalDiagram, q: PlanQuery) -> CovariateSequence:
    q.validate(g)
    return tuple(g.ordered(_candidate(g, q, k)) for k in range(1, q.n + 1))


def g_identify(g: CausalDiagram, q: PlanQuery) -> IdentificationResult:
    """Complete test for G-identifiability under the given ordering, via the W-sequence."""
    seq = w_sequence(g, q)
    report = admissible(g, q, seq)
    if report.ok:
        return Identified(seq, build(q, seq))
    fail = report.first_failure
    return NotGIdentifiable(fail.k, fail.query)


def greedy_minimal_sequence(g: CausalDiagram, q: PlanQuery) -> IdentificationResult:
    """Stage by stage, pick a minimal set satisfying the separation test.

    Each stage starts from W_k and drops nodes in reverse declaration order
    while the test still passes, repeating until no single node can go.
    """
    q.validate(g)
    chosen: list[tuple[str, ...]] = []
    union: frozenset = frozenset()
    for k in range(1, q.n + 1):
        cand = _candidate(g, q, k)
        query = stage_query(q, k, union | cand)
        if not query.holds(g):
            return NotGIdentifiable(k, query)
        shrinking = True
        while shrinking:
            shrinking = False
            for v in reversed(g.ordered(cand)):
                trial = cand - {v}
                if stage_query(q, k, union | trial).holds(g):
                    cand = trial
                    shrinking = True
        chosen.append(g.ordered(cand))
        union |= cand
    seq = tuple(chosen)
    return Identified(seq, build(q, seq))


def _subsets(items: Sequence[str]):
    for size in range(len(items) + 1):
        for combo in itertools.combinations(items, size):
            yield frozenset(combo)


def exhaustive_identify(g: CausalDiagram, q: PlanQuery) -> IdentificationResult:
    """Depth-first search over every Z_k within N_k, smallest subsets first.

    Later stages only depend on the union of the earlier Z's, so dead
    (stage, union) states are memoised.
    """
    q.validate(g)
    n_sets = [g.ordered(nondescendant_covariates(g, q.order, k)) for k in range(1, q.n + 1)]
    for k, n_k in enumerate(n_sets, start=1):
        if len(n_k) > EXHAUSTIVE_LIMIT:
            raise FeasibilityError(f"|N_{k}| = {len(n_k)} exceeds the exhaustive limit {EXHAUSTIVE_LIMIT}")
    dead: set[tuple[int, frozenset]] = set()
    deepest = {"k": 1, "query": None}

    def search(k: int, union: frozenset):
        if k > q.n:
            return []
        if (k, union) in dead:
            return None
        for z in _subsets(n_sets[k - 1]):
            if stage_query(q, k, union | z).holds(g):
                rest = search(k + 1, union | z)
                if rest is not None:
                    return [g.ordered(z)] + rest
        dead.add((k, union))
        if deepest["query"] is None or k > deepest["k"]:
            deepest["k"] = k
            deepest["query"] = stage_query(q, k, union | frozenset(n_sets[k - 1]))
        return None

    found = search(1, frozenset())
    if found is None:
        return NotGIdentifiable(deepest["k"], deepest["query"])
    seq = tuple(found)
    return Identified(seq, build(q, seq))


def with_outcome_covariates(g: CausalDiagram, q: PlanQuery, seq) -> CovariateSequence:
    """Z_k replaced by Z_k union Y_k at every stage."""
    return tuple(
        g.ordered(set(z) | outcome_split(g, q, k).y_k) for k, z in enumerate(seq, start=1)
    )


def confounder_partition(g: CausalDiagram, q: PlanQuery, seq, k: int):
    """Split the unmeasured-confounder candidates of stage k into (U_a, U_b), or return None.

    The candidates are the non-control nondescendants of X_k..X_n outside
    Z_1..Z_k. A split is valid when, in G with arrows into X_{k+1}..X_n removed,
    U_b is separated from X_k given Z_1..Z_k, X_1..X_{k-1}, and U_a is separated
    from the outcome components outside N_k given X_1..X_k, Z_1..Z_k, U_b.
    ``seq`` is first augmented with the outcome components in each N_k.
    """
    q.validate(g)
    if not 1 <= k <= q.n:
        raise IndexError(f"stage index {k} out of range 1..{q.n}")
    base = _check_sequence(g, q, seq)
    for j, z in enumerate(base, start=1):
        outside = z - nondescendant_covariates(g, q.order, j)
        if outside:
            raise InvalidQueryError(f"Z_{j} contains nodes outside N_{j}: {list(g.ordered(outside))}")
    seq = with_outcome_covariates(g, q, base)
    zs = frozenset().union(*map(frozenset, seq[:k]))
    desc = descendants(g, q.order[k - 1:])
    u_star = tuple(
        v for v in g.names
        if g.kind(v) is not NodeKind.CONTROL and v not in desc and v not in zs
    )
    if len(u_star) > PARTITION_LIMIT:
        raise FeasibilityError(f"|U_{k}*| = {len(u_star)} exceeds the partition limit {PARTITION_LIMIT}")
    g_bar = mutilate(g, bar=q.order[k:])
    x_k = q.order[k - 1]
    y_star = outcome_split(g, q, k).y_k_star
    before = frozenset(q.order[: k - 1])
    for u_b in _subsets(u_star):
        u_a = frozenset(u_star) - u_b
        ok_i = SeparationQuery(u_b, {x_k}, zs | before).holds(g_bar)
        if ok_i and SeparationQuery(u_a, y_star, zs | before | {x_k} | u_b).holds(g_bar):
            return g.ordered(u_a), g.ordered(u_b)
    return None


def identify_all_orderings(g: CausalDiagram, outcome=None) -> list[tuple[tuple[str, ...], IdentificationResult]]:
    """Run :func:`g_identify` under every consistent ordering of the controls."""
    results = []
    for order in consistent_orderings(g):
        results.append((order, g_identify(g, plan_query(g, order, outcome))))
    return results
