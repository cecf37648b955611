"""Identification and evaluation of sequential plans in causal diagrams with hidden variables."""
from planid.discrete import (
    DiscreteModel,
    Distribution,
    causal_effect_oracle,
    intervene,
    joint,
    random_model,
)
from planid.dsep import SeparationQuery, ancestral_set, d_separated
from planid.estimand import Estimand, Factor, build, evaluate, parse, render
from planid.graph import (
    CausalDiagram,
    Node,
    NodeKind,
    build_g_star,
    consistent_orderings,
    descendants,
    mutilate,
    nondescendant_covariates,
)
from planid.identify import (
    Identified,
    NotGIdentifiable,
    PlanQuery,
    admissible,
    exhaustive_identify,
    g_identify,
    greedy_minimal_sequence,
    plan_query,
    confounder_partition,
    w_sequence,
)

__version__ = "0.1.0"
