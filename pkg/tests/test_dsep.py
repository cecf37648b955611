import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_ancestors, brute_d_separated, disjoint_triples, typed_dags
from planid.discrete import conditionally_independent, joint, random_model
from planid.dsep import SeparationQuery, ancestral_set, d_separated, reachable
from planid.errors import InvalidQueryError, UnknownNodeError
from planid.fixtures import two_treatments
from planid.graph import CausalDiagram, Node, NodeKind, mutilate
from planid.identify import stage_graph
from planid.sampling import random_diagram


def test_x1_separated_from_y_when_x2_barred():
    g2a = mutilate(two_treatments(), bar={"X2"}, underline={"X1"})
    assert d_separated(g2a, {"X1"}, {"Y"})


def test_x2_separation_needs_z():
    g2b = mutilate(two_treatments(), underline={"X2"})
    assert not d_separated(g2b, {"X2"}, {"Y"}, {"X1"})
    assert d_separated(g2b, {"X2"}, {"Y"}, {"X1", "Z"})


def test_ancestral_set_examples():
    g = two_treatments()
    g1 = mutilate(g, bar={"X2"}, underline={"X1"})
    assert ancestral_set(g1, {"X1"}, {"Y"}) == {"X1", "U1", "Y", "X2", "U2"}
    g2 = mutilate(g, underline={"X2"})
    assert ancestral_set(g2, {"X2"}, {"Y"}) == {"X2", "X1", "Z", "U1", "U2", "Y"}
    edgeless = CausalDiagram(["a", "b"])
    assert ancestral_set(edgeless, {"a"}, {"b"}) == {"a", "b"}


def test_query_errors():
    g = two_treatments()
    with pytest.raises(InvalidQueryError):
        d_separated(g, {"X1"}, {"X1", "Y"})
    with pytest.raises(InvalidQueryError):
        d_separated(g, {"X1"}, {"Y"}, {"Y"})
    with pytest.raises(UnknownNodeError):
        d_separated(g, {"X1"}, {"W"})
    with pytest.raises(UnknownNodeError):
        ancestral_set(g, {"W"}, {"Y"})


def test_empty_side_is_separated():
    assert d_separated(two_treatments(), set(), {"Y"})


def test_separation_query_render_and_graph():
    q = SeparationQuery(frozenset({"X2"}), frozenset({"Y"}), frozenset({"X1"}), under=frozenset({"X2"}))
    g = two_treatments()
    assert q.render(g) == "({Y} _||_ {X2} | {X1}) in G[bar={};under={X2}]"
    assert q.graph(g) == mutilate(g, underline={"X2"})
    assert not q.holds(g)


def test_reachable_chain_and_collider():
    g = CausalDiagram(["a", "b", "c"], [("a", "b"), ("c", "b")])
    assert reachable(g, {"a"}) == {"a", "b"}
    assert reachable(g, {"a"}, {"b"}) == {"a", "c"}


@settings(max_examples=300, deadline=None)
@given(typed_dags(max_nodes=7), st.data())
def test_matches_path_enumeration(g, data):
    x, y, z = disjoint_triples(data.draw, g.names)
    if x and y:
        assert d_separated(g, x, y, z) == brute_d_separated(g, x, y, z)
        assert d_separated(g, y, x, z) == d_separated(g, x, y, z)


@given(typed_dags(), st.data())
def test_ancestral_set_definition(g, data):
    x, y, _ = disjoint_triples(data.draw, g.names)
    assert ancestral_set(g, x, y) == brute_ancestors(g, x | y)
    assert x | y <= ancestral_set(g, x, y)


def test_separation_implies_independence_in_joint():
    """Forward direction only: every separation shows up as an exact independence."""
    checked = 0
    for seed in range(60):
        g = random_diagram(seed, max_nodes=8)
        m = random_model(g, seed, max_card=2)
        full = joint(m)
        names = list(g.names)
        rng = np.random.default_rng(seed * 7919)
        for _ in range(60):
            labels = rng.integers(0, 4, size=len(names))
            x = [v for v, lab in zip(names, labels) if lab == 0]
            y = [v for v, lab in zip(names, labels) if lab == 1]
            z = [v for v, lab in zip(names, labels) if lab == 2]
            if x and y and d_separated(g, x, y, z):
                assert conditionally_independent(full, x, y, z, atol=1e-12)
                checked += 1
    assert checked > 100


def test_ancestral_sets_across_stages_chain():
    """X1 -> X2 -> Y: the later control is ancestral at stage 1 but not at stage 2.

    In G_1 (arrows out of X1 and into X2 cut) X2 still reaches Y; in G_2 its
    outgoing arrow is cut, so only X2 itself falls out of the containment.
    """
    g = CausalDiagram(
        [Node("X1", NodeKind.CONTROL), Node("X2", NodeKind.CONTROL), Node("Y", NodeKind.COVARIATE, True)],
        [("X1", "X2"), ("X2", "Y")],
    )
    order = ("X1", "X2")
    a_1 = ancestral_set(stage_graph(g, order, 1), {"X1"}, {"Y"})
    a_1_in_g2 = ancestral_set(stage_graph(g, order, 2), {"X1"}, {"Y"})
    assert a_1 == {"X1", "X2", "Y"}
    assert a_1_in_g2 == {"X1", "Y"}
    assert a_1 - {"X2"} <= a_1_in_g2
