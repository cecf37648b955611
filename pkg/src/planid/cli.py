"""Command-line front end.

Exit codes: 0 success / identified, 1 input error, 2 not G-identifiable,
3 size-guard refusal, 4 numerical verification mismatch.
"""
from __future__ import annotations

import itertools
import sys
from pathlib import Path

import click

from planid import discrete, docalc, estimand, identify
from planid.dsep import SeparationQuery
from planid.errors import FeasibilityError, PlanIdError
from planid.graph import build_g_star, consistent_orderings
from planid.modelfile import ParsedModel, parse_model

EXIT_OK, EXIT_INPUT, EXIT_NOT_IDENTIFIED, EXIT_GUARD, EXIT_MISMATCH = 0, 1, 2, 3, 4
VERIFY_TOL = 1e-9


def _load(path: str) -> ParsedModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise click.UsageError(f"cannot read {path}: {exc.strerror}") from None
    return parse_model(text)


def _names(text: str | None) -> list[str]:
    if not text:
        return []
    return [t for t in text.replace(",", " ").split() if t]


def _parse_plan(text: str | None):
    """'X1=1,X2=0' -> (order, values); bare names give an order without values."""
    if text is None:
        return None, None
    order, values = [], {}
    for item in _names(text):
        name, sep, value = item.partition("=")
        order.append(name)
        if sep:
            if not value.isdigit():
                raise click.BadParameter(f"plan value {value!r} is not a non-negative integer", param_hint="--plan")
            values[name] = int(value)
    if values and len(values) != len(order):
        raise click.BadParameter("give a value for every control or for none", param_hint="--plan")
    return tuple(order), (values or None)


def _query(parsed: ParsedModel, plan: str | None, need_values: bool = False) -> identify.PlanQuery:
    g = parsed.diagram
    order, values = _parse_plan(plan)
    if order is None and parsed.query is not None:
        order, values = parsed.query.order, parsed.query.values
    q = identify.plan_query(g, order, None, values)
    if need_values and not q.values and q.n:
        raise click.UsageError("this command needs plan values, e.g. --plan X1=1,X2=0")
    return q


def _fmt_set(g, nodes) -> str:
    return "{" + ",".join(g.ordered(nodes)) + "}"


def _print_result(g, q, result, label: str) -> int:
    click.echo("ordering: " + ",".join(q.order))
    if result:
        for k, z in enumerate(result.sequence, start=1):
            click.echo(f"{label}_{k} = {_fmt_set(g, z)}")
        click.echo("status: identified")
        click.echo("estimand: " + estimand.render(result.estimand))
        return EXIT_OK
    click.echo("status: not-g-identifiable")
    click.echo(f"failing_k: {result.failing_k}")
    if result.witness is not None:
        click.echo("witness: " + result.witness.render(g))
    return EXIT_NOT_IDENTIFIED


def _print_dist(dist: discrete.Distribution) -> None:
    flat = dist.table.reshape(-1)
    for i, cell in enumerate(itertools.product(*(range(c) for c in dist.cards))):
        assign = ",".join(f"{v}={x}" for v, x in zip(dist.scope, cell))
        click.echo(f"P({assign}) = {float(flat[i])!r}")


def _model(parsed: ParsedModel, seed: int | None, max_card: int) -> discrete.DiscreteModel:
    if parsed.model is not None and seed is None:
        return parsed.model
    return discrete.random_model(parsed.diagram, 0 if seed is None else seed, max_card)


plan_option = click.option("--plan", help="Ordered controls with optional values, e.g. X1=1,X2=0.")


@click.group()
def cli():
    """Identify and evaluate sequential plans in causal diagrams with hidden variables."""


@cli.command("identify")
@click.argument("path")
@plan_option
@click.option("--all-orderings", is_flag=True, help="Report a verdict for every consistent ordering.")
def identify_cmd(path, plan, all_orderings):
    """Print the W-sequence and G-formula estimand, or the failing separation test."""
    parsed = _load(path)
    g = parsed.diagram
    if all_orderings:
        code = EXIT_NOT_IDENTIFIED
        for order in consistent_orderings(g):
            q = identify.plan_query(g, order)
            if _print_result(g, q, identify.g_identify(g, q), "W") == EXIT_OK:
                code = EXIT_OK
        return code
    q = _query(parsed, plan)
    return _print_result(g, q, identify.g_identify(g, q), "W")


@cli.command("greedy")
@click.argument("path")
@plan_option
def greedy_cmd(path, plan):
    """Stage-wise minimal admissible sets."""
    parsed = _load(path)
    q = _query(parsed, plan)
    return _print_result(parsed.diagram, q, identify.greedy_minimal_sequence(parsed.diagram, q), "Z")


@cli.command("exhaustive")
@click.argument("path")
@plan_option
def exhaustive_cmd(path, plan):
    """Brute-force search over all covariate sequences."""
    parsed = _load(path)
    q = _query(parsed, plan)
    return _print_result(parsed.diagram, q, identify.exhaustive_identify(parsed.diagram, q), "Z")


@cli.command("dsep")
@click.argument("path")
@click.argument("sets", nargs=-1, required=True)
@click.option("--bar", default=None, help="Nodes whose incoming arrows are removed.")
@click.option("--underline", default=None, help="Nodes whose outgoing arrows are removed.")
def dsep_cmd(path, sets, bar, underline):
    """Test X / Y / Z: is X d-separated from Y given Z?"""
    parsed = _load(path)
    groups = [[]]
    for tok in sets:
        for part in tok.replace("/", " / ").split():
            if part == "/":
                groups.append([])
            else:
                groups[-1].extend(_names(part))
    if len(groups) not in (2, 3):
        raise click.UsageError("expected X / Y [/ Z]")
    x, y = groups[0], groups[1]
    z = groups[2] if len(groups) == 3 else []
    query = SeparationQuery(frozenset(x), frozenset(y), frozenset(z),
                            bar=frozenset(_names(bar)), under=frozenset(_names(underline)))
    click.echo(f"{query.render(parsed.diagram)}: {'true' if query.holds(parsed.diagram) else 'false'}")
    return EXIT_OK


def _identified_or_exit(g, q):
    result = identify.g_identify(g, q)
    if not result:
        _print_result(g, q, result, "W")
    return result


@cli.command("eval")
@click.argument("path")
@plan_option
@click.option("--seed", type=int, default=None, help="Use a random model with this seed instead of the file's CPTs.")
@click.option("--max-card", type=int, default=2, show_default=True)
def eval_cmd(path, plan, seed, max_card):
    """Evaluate the G-formula estimand on the model's observational joint."""
    parsed = _load(path)
    g = parsed.diagram
    q = _query(parsed, plan, need_values=True)
    result = _identified_or_exit(g, q)
    if not result:
        return EXIT_NOT_IDENTIFIED
    m = _model(parsed, seed, max_card)
    click.echo("estimand: " + estimand.render(result.estimand))
    _print_dist(estimand.evaluate(result.estimand, discrete.observed_joint(m), q.values or {}, q.outcome))
    return EXIT_OK


@cli.command("oracle")
@click.argument("path")
@plan_option
@click.option("--seed", type=int, default=None, help="Use a random model with this seed instead of the file's CPTs.")
@click.option("--max-card", type=int, default=2, show_default=True)
def oracle_cmd(path, plan, seed, max_card):
    """Ground-truth interventional distribution of the outcome."""
    parsed = _load(path)
    q = _query(parsed, plan, need_values=True)
    m = _model(parsed, seed, max_card)
    _print_dist(discrete.causal_effect_oracle(m, q))
    return EXIT_OK


@cli.command("verify")
@click.argument("path")
@plan_option
@click.option("--seeds", type=int, default=None, help="Check random models with seeds 1..N.")
@click.option("--max-card", type=int, default=2, show_default=True)
def verify_cmd(path, plan, seeds, max_card):
    """Compare estimand evaluation against the oracle."""
    parsed = _load(path)
    g = parsed.diagram
    q = _query(parsed, plan, need_values=True)
    result = _identified_or_exit(g, q)
    if not result:
        return EXIT_NOT_IDENTIFIED
    if seeds is None:
        models = [("file", parsed.model)] if parsed.model is not None else [("seed=1", discrete.random_model(g, 1, max_card))]
    else:
        models = [(f"seed={s}", discrete.random_model(g, s, max_card)) for s in range(1, seeds + 1)]
    worst = 0.0
    for label, m in models:
        if any(q.values[x] >= m.cards[x] for x in q.order):
            raise click.BadParameter(f"plan value out of range in model {label}", param_hint="--plan")
        est = estimand.evaluate(result.estimand, discrete.observed_joint(m), q.values, q.outcome)
        diff = discrete.causal_effect_oracle(m, q).max_abs_diff(est)
        worst = max(worst, diff)
        click.echo(f"{label} max_abs_diff={diff:.3e}")
    ok = worst <= VERIFY_TOL
    click.echo(f"worst={worst:.3e} tol={VERIFY_TOL:.0e} {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_MISMATCH


@cli.command("reduce")
@click.argument("path")
@plan_option
@click.option("--depth", type=int, default=None, help="Search depth (default 2*(controls+covariates)).")
def reduce_cmd(path, plan, depth):
    """Search for a do-calculus rewrite of P(y | do(plan)) into a hat-free expression."""
    parsed = _load(path)
    g = parsed.diagram
    q = _query(parsed, plan)
    expr = docalc.InterventionalExpr(frozenset(q.outcome), frozenset(q.order))
    trace = docalc.reduce(g, expr, depth)
    click.echo("query: " + expr.render(g))
    if trace is None:
        click.echo("status: exhausted")
        return EXIT_OK
    if trace:
        click.echo(docalc.render_trace(g, trace))
        final = docalc.term_to_estimand(g, trace[-1].result, q.outcome)
    else:
        final = estimand.Estimand((), (estimand.Factor(g.ordered(expr.target), ()),))
    click.echo("status: reduced")
    click.echo("estimand: " + estimand.render(final))
    return EXIT_OK


@cli.command("gstar")
@click.argument("path")
@plan_option
def gstar_cmd(path, plan):
    """Print G* built from the W-sequence of the chosen ordering."""
    parsed = _load(path)
    g = parsed.diagram
    q = _query(parsed, plan)
    seq = identify.w_sequence(g, q)
    star = build_g_star(g, q.order, seq)
    added = set(star.edges) - set(g.edges)
    for a, b in star.edges:
        click.echo(f"edge {a} -> {b}" + ("  # added" if (a, b) in added else ""))
    return EXIT_OK


def main(argv=None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="planid", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_INPUT
    except click.UsageError as exc:
        exc.show()
        return EXIT_INPUT
    except click.ClickException as exc:
        exc.show()
        return EXIT_INPUT
    except FeasibilityError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_GUARD
    except PlanIdError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
