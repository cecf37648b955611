from importlib import resources

import pytest

from planid.cli import main
from planid.discrete import random_model
from planid.estimand import parse, render
from planid.fixtures import bow, two_treatments, ordering_counterexample
from planid.graph import CausalDiagram, Node, NodeKind
from planid.identify import plan_query
from planid.modelfile import format_model

MODEL_FILE = str(resources.files("planid").joinpath("data/fig1.model"))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, diagram, model=None, query=None):
    path = tmp_path / name
    path.write_text(format_model(diagram, model, query))
    return str(path)


def test_identify_model_file_golden(capsys):
    code, out, _ = run(capsys, "identify", MODEL_FILE)
    assert code == 0
    assert out.splitlines() == [
        "ordering: X1,X2",
        "W_1 = {}",
        "W_2 = {Z}",
        "status: identified",
        "estimand: sum_{z} P(y|z,x1,x2) * P(z|x1)",
    ]


def test_identify_estimand_round_trips(capsys):
    _, out, _ = run(capsys, "identify", MODEL_FILE)
    text = out.splitlines()[-1].removeprefix("estimand: ")
    assert render(parse(text, two_treatments())) == text


@pytest.mark.parametrize("command", ["greedy", "exhaustive"])
def test_greedy_and_exhaustive(capsys, command):
    code, out, _ = run(capsys, command, MODEL_FILE)
    assert code == 0
    assert "Z_2 = {Z}" in out and "status: identified" in out


@pytest.mark.parametrize("command", ["identify", "greedy", "exhaustive"])
def test_bow_exits_2_with_witness(capsys, tmp_path, command):
    path = write(tmp_path, "bow.model", bow(), query=plan_query(bow()))
    code, out, _ = run(capsys, command, path)
    assert code == 2
    assert "status: not-g-identifiable" in out
    assert "failing_k: 1" in out
    assert "witness: ({Y} _||_ {X} | {}) in G[bar={};under={X}]" in out


def test_all_orderings(capsys, tmp_path):
    g = ordering_counterexample()
    code, out, _ = run(capsys, "identify", write(tmp_path, "ord.model", g), "--all-orderings")
    assert code == 0
    blocks = out.split("ordering: ")[1:]
    assert blocks[0].startswith("Xa,Xb") and "not-g-identifiable" in blocks[0]
    assert blocks[1].startswith("Xb,Xa") and "status: identified" in blocks[1]


def test_plan_option_overrides_order(capsys, tmp_path):
    g = ordering_counterexample()
    path = write(tmp_path, "ord.model", g)
    assert run(capsys, "identify", path, "--plan", "Xa,Xb")[0] == 2
    assert run(capsys, "identify", path, "--plan", "Xb,Xa")[0] == 0


def test_dsep(capsys):
    code, out, _ = run(capsys, "dsep", MODEL_FILE, "X2", "/", "Y", "/", "X1", "--underline", "X2")
    assert code == 0 and out.strip().endswith(": false")
    code, out, _ = run(capsys, "dsep", MODEL_FILE, "X2/Y/X1,Z", "--underline", "X2")
    assert out.strip() == "({Y} _||_ {X2} | {X1,Z}) in G[bar={};under={X2}]: true"
    assert run(capsys, "dsep", MODEL_FILE, "X2", "Y")[0] == 1
    assert run(capsys, "dsep", MODEL_FILE, "X2", "/", "Q")[0] == 1


def test_eval_matches_oracle(capsys):
    code, out_eval, _ = run(capsys, "eval", MODEL_FILE, "--plan", "X1=1,X2=1", "--seed", "42")
    assert code == 0
    code, out_oracle, _ = run(capsys, "oracle", MODEL_FILE, "--plan", "X1=1,X2=1", "--seed", "42")
    assert code == 0
    ev = [float(line.split(" = ")[1]) for line in out_eval.splitlines() if line.startswith("P(Y=")]
    orc = [float(line.split(" = ")[1]) for line in out_oracle.splitlines()]
    assert ev == pytest.approx(orc, abs=1e-12)
    assert orc == pytest.approx([0.7525440032284437, 0.24745599677155658], abs=1e-15)


def test_eval_needs_values(capsys):
    code, _, err = run(capsys, "eval", MODEL_FILE)
    assert code == 1 and "plan values" in err


def test_verify_seeds(capsys):
    code, out, _ = run(capsys, "verify", MODEL_FILE, "--plan", "X1=0,X2=1", "--seeds", "5")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 6 and lines[-1].endswith("PASS")


def test_verify_with_file_cpts(capsys, tmp_path):
    g = two_treatments()
    q = plan_query(g, values={"X1": 1, "X2": 0})
    path = write(tmp_path, "cpt.model", g, random_model(g, 3), q)
    code, out, _ = run(capsys, "verify", path)
    assert code == 0 and out.startswith("file ")


def test_verify_rejects_out_of_range_value(capsys):
    assert run(capsys, "verify", MODEL_FILE, "--plan", "X1=5,X2=0")[0] == 1


def test_reduce(capsys):
    code, out, _ = run(capsys, "reduce", MODEL_FILE, "--depth", "6")
    assert code == 0
    assert out.splitlines()[0] == "query: P(y|do(x1,x2))"
    assert "status: reduced" in out
    assert out.splitlines()[-1] == "estimand: sum_{z} P(y|z,x1,x2) * P(z|x1)"


def test_reduce_exhausted_is_not_an_error(capsys, tmp_path):
    code, out, _ = run(capsys, "reduce", write(tmp_path, "bow.model", bow()), "--depth", "3")
    assert code == 0 and "status: exhausted" in out


def test_gstar(capsys, tmp_path):
    code, out, _ = run(capsys, "gstar", MODEL_FILE)
    assert code == 0 and "# added" not in out
    assert len(out.splitlines()) == len(two_treatments().edges)
    g = CausalDiagram([Node("a", NodeKind.CONTROL), Node("b", NodeKind.CONTROL), Node("y", NodeKind.COVARIATE, True)], [("b", "y")])
    code, out, _ = run(capsys, "gstar", write(tmp_path, "two.model", g), "--plan", "a,b")
    assert "edge a -> b  # added" in out and "edge a -> y  # added" in out


def test_input_errors_exit_1(capsys, tmp_path):
    assert run(capsys, "identify", str(tmp_path / "missing.model"))[0] == 1
    bad = tmp_path / "bad.model"
    bad.write_text("node A covariate\nedge A -> Q\n")
    code, _, err = run(capsys, "identify", str(bad))
    assert code == 1 and "line 2" in err and "'Q'" in err
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "identify", MODEL_FILE, "--plan", "X2,X1")[0] == 1


def test_feasibility_guard_exit_3(capsys, tmp_path):
    nodes = [Node("X", NodeKind.CONTROL), Node("Y", NodeKind.COVARIATE, True)]
    nodes += [Node(f"c{i}", NodeKind.COVARIATE) for i in range(21)]
    path = write(tmp_path, "wide.model", CausalDiagram(nodes, [("X", "Y")]))
    code, _, err = run(capsys, "exhaustive", path)
    assert code == 3 and "exhaustive limit" in err
