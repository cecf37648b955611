"""Seeded random causal diagrams and plan queries for property suites."""
from __future__ import annotations

import numpy as np

from planid.graph import CausalDiagram, Node, NodeKind, consistent_orderings
from planid.identify import PlanQuery


def random_dag(seed: int, n_nodes: int, edge_prob: float = 0.4) -> CausalDiagram:
    """A random DAG on v0..v{n-1} (all covariates), edges only from lower to higher index."""
    rng = np.random.default_rng(seed)
    names = [f"v{i}" for i in range(n_nodes)]
    edges = [
        (names[i], names[j])
        for i in range(n_nodes)
        for j in range(i + 1, n_nodes)
        if rng.random() < edge_prob
    ]
    return CausalDiagram(names, edges)


def random_diagram(
    seed: int,
    max_nodes: int = 9,
    max_controls: int = 3,
    max_latents: int = 3,
    max_outcomes: int = 2,
    edge_prob: float | None = None,
) -> CausalDiagram:
    """A random causal diagram with typed nodes.

    Latents are drawn as root confounders with at least two children when
    possible; at least one outcome exists among the covariates.
    """
    rng = np.random.default_rng(seed)
    n_latents = int(rng.integers(0, max_latents + 1))
    n_controls = int(rng.integers(1, max_controls + 1))
    room = max(2, max_nodes - n_latents - n_controls)
    n_rest = int(rng.integers(2, room + 1))
    n_obs = n_controls + n_rest
    p = float(rng.uniform(0.25, 0.6)) if edge_prob is None else edge_prob

    obs_kinds = [NodeKind.CONTROL] * n_controls + [NodeKind.COVARIATE] * n_rest
    rng.shuffle(obs_kinds)
    obs_names = [f"v{i}" for i in range(n_obs)]
    edges = [
        (obs_names[i], obs_names[j])
        for i in range(n_obs)
        for j in range(i + 1, n_obs)
        if rng.random() < p
    ]
    latent_names = [f"u{i}" for i in range(n_latents)]
    for u in latent_names:
        k = int(rng.integers(2, 4)) if n_obs >= 2 else 1
        for child in rng.choice(n_obs, size=min(k, n_obs), replace=False):
            edges.append((u, obs_names[int(child)]))

    covariates = [v for v, kd in zip(obs_names, obs_kinds) if kd is NodeKind.COVARIATE]
    n_out = int(rng.integers(1, min(max_outcomes, len(covariates)) + 1))
    # later covariates are more often downstream of the controls
    weights = np.arange(1, len(covariates) + 1, dtype=float) ** 2
    outcomes = set(rng.choice(covariates, size=n_out, replace=False, p=weights / weights.sum()))

    nodes = [Node(u, NodeKind.LATENT) for u in latent_names]
    nodes += [Node(v, kd, v in outcomes) for v, kd in zip(obs_names, obs_kinds)]
    return CausalDiagram(nodes, edges)


def random_plan_query(g: CausalDiagram, seed: int) -> PlanQuery:
    """A random consistent ordering of the controls, targeting the flagged outcomes."""
    rng = np.random.default_rng(seed)
    orders = consistent_orderings(g)
    order = orders[int(rng.integers(len(orders)))]
    return PlanQuery(order, g.outcomes).validate(g)


def random_subset(rng: np.random.Generator, items, p: float = 0.5) -> frozenset:
    return frozenset(v for v in items if rng.random() < p)
