"""Plain-text model files.

Grammar, one statement per line; ``#`` starts a comment::

    node <name> (control|covariate|latent) [outcome] [card=<int>]
    edge <name> -> <name>
    plan <control>[=<int>] <control>[=<int>] ...
    cpt <name> [| <parent> <parent> ...]
      <parent values ...> : <p_0> <p_1> ... <p_{card-1}>
    end

Names match ``[A-Za-z_][A-Za-z0-9_]*``. Cardinality defaults to 2. A CPT
block has one row per parent configuration (a root node has the single row
``: p_0 p_1 ...``). CPTs are optional, but if any are given every node needs
one. Plan values are all-or-none.
"""
from __future__ import annotations

import itertools
import re
from typing import NamedTuple

import numpy as np

from planid.discrete import DiscreteModel
from planid.errors import CycleError, ModelSyntaxError, PlanIdError
from planid.graph import CausalDiagram, Node, NodeKind
from planid.identify import PlanQuery

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ParsedModel(NamedTuple):
    diagram: CausalDiagram
    model: DiscreteModel | None
    query: PlanQuery | None


def _tokens(line: str):
    """Split on whitespace, keeping 1-based column numbers."""
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]


def _name(tok, lineno):
    text, col = tok
    if not _NAME.match(text):
        raise ModelSyntaxError(f"invalid name {text!r}", lineno, col)
    return text


def parse_model(text: str) -> ParsedModel:
    nodes: list[Node] = []
    node_line: dict[str, int] = {}
    cards: dict[str, int] = {}
    edges: list[tuple[str, str]] = []
    edge_line: dict[tuple[str, str], tuple[int, int]] = {}
    plan: list[tuple[str, int | None, int, int]] = []
    plan_line = None
    cpt_rows: dict[str, tuple[int, list[str], list[tuple[tuple[int, ...], list[float], int]]]] = {}
    open_cpt = None

    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0]
        toks = _tokens(line)
        if not toks:
            continue
        head, col = toks[0]
        if open_cpt is not None:
            if head == "end" and len(toks) == 1:
                open_cpt = None
                continue
            _parse_row(toks, lineno, cpt_rows[open_cpt][2])
            continue
        if head == "node":
            _parse_node(toks, lineno, nodes, node_line, cards)
        elif head == "edge":
            if len(toks) != 4 or toks[2][0] != "->":
                raise ModelSyntaxError("expected 'edge <name> -> <name>'", lineno, col)
            a, b = _name(toks[1], lineno), _name(toks[3], lineno)
            for tok, v in ((toks[1], a), (toks[3], b)):
                if v not in node_line:
                    raise ModelSyntaxError(f"edge mentions undeclared node {v!r}", lineno, tok[1])
            if a == b:
                raise ModelSyntaxError(f"self-loop on {a!r} makes the graph cyclic", lineno, col)
            edges.append((a, b))
            edge_line.setdefault((a, b), (lineno, col))
        elif head == "plan":
            if plan_line is not None:
                raise ModelSyntaxError(f"second plan statement (first on line {plan_line})", lineno, col)
            plan_line = lineno
            for text_tok, c in toks[1:]:
                name, _, value = text_tok.partition("=")
                _name((name, c), lineno)
                if value and not value.isdigit():
                    raise ModelSyntaxError(f"plan value {value!r} is not a non-negative integer", lineno, c)
                plan.append((name, int(value) if value else None, lineno, c))
        elif head == "cpt":
            if len(toks) < 2:
                raise ModelSyntaxError("expected 'cpt <name> [| parents...]'", lineno, col)
            v = _name(toks[1], lineno)
            if v not in node_line:
                raise ModelSyntaxError(f"CPT for undeclared node {v!r}", lineno, toks[1][1])
            if v in cpt_rows:
                raise ModelSyntaxError(f"second CPT for {v!r}", lineno, col)
            parents = []
            if len(toks) > 2:
                if toks[2][0] != "|":
                    raise ModelSyntaxError("expected '|' before the parent list", lineno, toks[2][1])
                parents = [_name(t, lineno) for t in toks[3:]]
            cpt_rows[v] = (lineno, parents, [])
            open_cpt = v
        else:
            raise ModelSyntaxError(f"unknown statement {head!r}", lineno, col)
    if open_cpt is not None:
        raise ModelSyntaxError(f"CPT block for {open_cpt!r} is missing 'end'", len(lines) + 1)

    try:
        diagram = CausalDiagram(nodes, edges)
    except CycleError as exc:
        cyc = exc.cycle
        where = max(edge_line[(a, b)] for a, b in zip(cyc, cyc[1:]))
        raise ModelSyntaxError(f"edges form a cycle {' -> '.join(cyc)}", *where) from None

    model = _build_model(diagram, cards, cpt_rows, node_line) if cpt_rows else None
    query = _build_query(diagram, plan, plan_line) if plan_line is not None else None
    return ParsedModel(diagram, model, query)


def _parse_node(toks, lineno, nodes, node_line, cards):
    if len(toks) < 3:
        raise ModelSyntaxError("expected 'node <name> <kind> [outcome] [card=<int>]'", lineno, toks[0][1])
    name = _name(toks[1], lineno)
    if name in node_line:
        raise ModelSyntaxError(f"duplicate node {name!r} (first on line {node_line[name]})", lineno, toks[1][1])
    kind_text, kcol = toks[2]
    try:
        kind = NodeKind(kind_text)
    except ValueError:
        raise ModelSyntaxError(f"unknown node kind {kind_text!r}", lineno, kcol) from None
    outcome = False
    card = 2
    for text, c in toks[3:]:
        if text == "outcome" and not outcome:
            outcome = True
        elif text.startswith("card="):
            value = text[5:]
            if not value.isdigit() or int(value) < 2:
                raise ModelSyntaxError(f"cardinality must be an integer >= 2, got {value!r}", lineno, c)
            card = int(value)
        else:
            raise ModelSyntaxError(f"unexpected token {text!r}", lineno, c)
    if outcome and kind is not NodeKind.COVARIATE:
        raise ModelSyntaxError(f"{kind.value} node {name!r} cannot be an outcome", lineno, toks[1][1])
    nodes.append(Node(name, kind, outcome))
    node_line[name] = lineno
    cards[name] = card


def _parse_row(toks, lineno, rows):
    texts = [t for t, _ in toks]
    if ":" not in texts:
        raise ModelSyntaxError("CPT row needs ':' between parent values and probabilities", lineno, toks[0][1])
    split = texts.index(":")
    try:
        config = tuple(int(t) for t in texts[:split])
    except ValueError:
        raise ModelSyntaxError("parent values must be integers", lineno, toks[0][1]) from None
    try:
        probs = [float(t) for t in texts[split + 1:]]
    except ValueError:
        raise ModelSyntaxError("probabilities must be numbers", lineno, toks[split][1]) from None
    rows.append((config, probs, lineno))


def _build_model(diagram, cards, cpt_rows, node_line):
    missing = [v for v in diagram.names if v not in cpt_rows]
    if missing:
        raise ModelSyntaxError(f"CPTs given for some nodes but not for {missing}", node_line[missing[0]])
    cpts = {}
    for v in diagram.names:
        lineno, parents, rows = cpt_rows[v]
        true_parents = diagram.parents(v)
        if sorted(parents) != sorted(true_parents) or len(set(parents)) != len(parents):
            raise ModelSyntaxError(
                f"CPT parents {parents} of {v!r} differ from the graph's {list(true_parents)}", lineno
            )
        shape = tuple(cards[p] for p in parents) + (cards[v],)
        table = np.full(shape, np.nan)
        for config, probs, row_line in rows:
            if len(config) != len(parents):
                raise ModelSyntaxError(f"row has {len(config)} parent values, expected {len(parents)}", row_line)
            if len(probs) != cards[v]:
                raise ModelSyntaxError(f"row has {len(probs)} probabilities, expected {cards[v]}", row_line)
            for value, p in zip(config, parents):
                if value >= cards[p]:
                    raise ModelSyntaxError(f"value {value} out of range for {p!r}", row_line)
            if not np.isnan(table[config]).all():
                raise ModelSyntaxError(f"duplicate row for configuration {config}", row_line)
            if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-9:
                raise ModelSyntaxError("row probabilities must be non-negative and sum to 1", row_line)
            table[config] = probs
        if np.isnan(table).any():
            raise ModelSyntaxError(f"CPT of {v!r} is missing rows", lineno)
        table = table / table.sum(axis=-1, keepdims=True)
        perm = [parents.index(p) for p in true_parents] + [len(parents)]
        cpts[v] = np.transpose(table, perm)
    try:
        return DiscreteModel(diagram, cards, cpts)
    except PlanIdError as exc:
        raise ModelSyntaxError(str(exc), 1) from None


def _build_query(diagram, plan, plan_line):
    order = tuple(name for name, *_ in plan)
    given = [value for _, value, *_ in plan]
    if any(v is None for v in given) and any(v is not None for v in given):
        raise ModelSyntaxError("plan values must be given for every control or for none", plan_line)
    values = dict(zip(order, given)) if given and given[0] is not None else None
    if not diagram.outcomes:
        raise ModelSyntaxError("a plan needs at least one node flagged 'outcome'", plan_line)
    try:
        return PlanQuery(order, diagram.outcomes, values).validate(diagram)
    except PlanIdError as exc:
        raise ModelSyntaxError(str(exc), plan_line) from None


def format_model(diagram: CausalDiagram, model: DiscreteModel | None = None, query: PlanQuery | None = None) -> str:
    """Inverse of :func:`parse_model` (up to comments and whitespace)."""
    out = []
    for node in diagram.nodes:
        parts = ["node", node.name, node.kind.value]
        if node.outcome:
            parts.append("outcome")
        if model is not None and model.cards[node.name] != 2:
            parts.append(f"card={model.cards[node.name]}")
        out.append(" ".join(parts))
    out.extend(f"edge {a} -> {b}" for a, b in diagram.edges)
    if query is not None:
        if query.values:
            out.append("plan " + " ".join(f"{x}={query.values[x]}" for x in query.order))
        else:
            out.append("plan " + " ".join(query.order))
    if model is not None:
        for v in diagram.names:
            parents = diagram.parents(v)
            out.append(f"cpt {v}" + (" | " + " ".join(parents) if parents else ""))
            table = model.cpts[v]
            for config in itertools.product(*(range(model.cards[p]) for p in parents)):
                probs = " ".join(repr(float(p)) for p in table[config])
                out.append("  " + " ".join(map(str, config)) + (" : " if config else ": ") + probs)
            out.append("end")
    return "\n".join(out) + "\n"
