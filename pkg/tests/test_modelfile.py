import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planid.discrete import random_model
from planid.errors import ModelSyntaxError
from planid.fixtures import two_treatments, two_treatments_text
from planid.identify import PlanQuery
from planid.modelfile import format_model, parse_model
from planid.sampling import random_diagram, random_plan_query

HEAD = "node A covariate\nnode B covariate outcome\n"


def test_two_treatments_file_parses_to_fixture():
    parsed = parse_model(two_treatments_text())
    assert parsed.diagram == two_treatments()
    assert parsed.model is None
    assert parsed.query == PlanQuery(("X1", "X2"), ("Y",))


def expect_error(text, line, fragment, column=None):
    with pytest.raises(ModelSyntaxError) as err:
        parse_model(text)
    assert err.value.line == line
    assert fragment in str(err.value)
    if column is not None:
        assert err.value.column == column
    return err.value


def test_edge_to_undeclared_node():
    err = expect_error(HEAD + "edge A -> Q\n", 3, "'Q'", column=11)
    assert str(err).startswith("line 3, column 11:")


def test_cycle_reported():
    expect_error(HEAD + "edge A -> B\nedge B -> A\n", 4, "cycle")
    expect_error(HEAD + "edge A -> A\n", 3, "self-loop")


def test_duplicate_node():
    expect_error(HEAD + "node A latent\n", 3, "duplicate node 'A'")


def test_latent_or_control_outcome():
    expect_error("node U latent outcome\n", 1, "cannot be an outcome")
    expect_error("node X control outcome\n", 1, "cannot be an outcome")


def test_unknown_statement_and_kind():
    expect_error(HEAD + "arrow A B\n", 3, "unknown statement 'arrow'")
    expect_error("node A hidden\n", 1, "unknown node kind")
    expect_error("node A covariate card=1\n", 1, "cardinality")
    expect_error("node A covariate fancy\n", 1, "unexpected token")


def test_plan_errors():
    base = "node X1 control\nnode X2 control\nnode Y covariate outcome\n"
    expect_error(base + "plan X1=1 X2\n", 4, "every control")
    expect_error(base + "plan X1\n", 4, "")
    expect_error("node X control\nnode Y covariate\nplan X\n", 3, "outcome")
    expect_error(base + "plan X1=a X2=1\n", 4, "non-negative")


CPT_OK = """node A covariate
node B covariate outcome
edge A -> B
cpt A
  : 0.4 0.6
end
cpt B | A
  0 : 0.9 0.1
  1 : 0.2 0.8
end
"""


def test_cpt_parse():
    parsed = parse_model(CPT_OK)
    np.testing.assert_allclose(parsed.model.cpts["B"], [[0.9, 0.1], [0.2, 0.8]])


@pytest.mark.parametrize(
    "mutation, fragment",
    [
        (("  1 : 0.2 0.8\n", ""), "missing rows"),
        (("  1 : 0.2 0.8\n", "  1 : 0.2 0.7\n"), "sum to 1"),
        (("  1 : 0.2 0.8\n", "  1 : 0.2 0.3 0.5\n"), "probabilities"),
        (("cpt B | A", "cpt B"), "parents"),
        (("  1 : 0.2 0.8\n", "  2 : 0.2 0.8\n"), "out of range"),
        (("  1 : 0.2 0.8\n", "  0 : 0.2 0.8\n"), "duplicate row"),
    ],
)
def test_cpt_shape_errors(mutation, fragment):
    with pytest.raises(ModelSyntaxError) as err:
        parse_model(CPT_OK.replace(*mutation))
    assert fragment in str(err.value)


def test_cpt_for_some_nodes_only():
    text = CPT_OK[: CPT_OK.index("cpt B")]
    with pytest.raises(ModelSyntaxError, match="not for"):
        parse_model(text)


def test_unterminated_cpt():
    with pytest.raises(ModelSyntaxError, match="missing 'end'"):
        parse_model(CPT_OK.rstrip().rsplit("\n", 1)[0])


def test_comments_and_blank_lines():
    parsed = parse_model("# header\n\nnode A covariate  # trailing\n")
    assert parsed.diagram.names == ("A",)


def test_cpt_parent_order_is_free():
    text = """node A covariate
node C covariate
node B covariate
edge A -> B
edge C -> B
cpt A
 : 0.5 0.5
end
cpt C
 : 0.5 0.5
end
cpt B | C A
 0 0 : 0.1 0.9
 0 1 : 0.2 0.8
 1 0 : 0.3 0.7
 1 1 : 0.4 0.6
end
"""
    m = parse_model(text).model
    # stored with the diagram's parent order (A, C)
    assert m.cpts["B"][1, 0, 0] == pytest.approx(0.2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_format_parse_round_trip(seed, with_model):
    g = random_diagram(seed)
    q = random_plan_query(g, seed)
    m = random_model(g, seed, max_card=3) if with_model else None
    if m is not None:
        q = q.with_values({x: 0 for x in q.order})
    parsed = parse_model(format_model(g, m, q))
    assert parsed.diagram == g
    assert parsed.query == q
    if m is not None:
        assert parsed.model.cards == m.cards
        for v in g.names:
            np.testing.assert_allclose(parsed.model.cpts[v], m.cpts[v], rtol=0, atol=1e-15)
