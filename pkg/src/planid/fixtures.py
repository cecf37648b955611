"""Named diagrams used by the tests, the acceptance suite and the CLI.

Apart from ``two_treatments``, each is a small construction built to show
one behaviour of the identification procedures.
"""
from __future__ import annotations

from importlib import resources

from planid.graph import CausalDiagram, Node, NodeKind

C, V, L = NodeKind.CONTROL, NodeKind.COVARIATE, NodeKind.LATENT


def two_treatments() -> CausalDiagram:
    """Two treatments X1, X2; Z observed between them; U1, U2 hidden; survival Y."""
    return CausalDiagram(
        [Node("U1", L), Node("U2", L), Node("X1", C), Node("Z", V), Node("X2", C), Node("Y", V, True)],
        [
            ("U1", "X1"), ("U1", "Z"), ("X1", "Z"), ("U2", "Z"), ("U2", "Y"),
            ("X1", "X2"), ("Z", "X2"), ("X2", "Y"), ("X1", "Y"),
        ],
    )


def two_treatments_text() -> str:
    return resources.files("planid").joinpath("data/fig1.model").read_text(encoding="utf-8")


def bow() -> CausalDiagram:
    """X -> Y with a hidden common cause: never G-identifiable."""
    return CausalDiagram(
        [Node("U", L), Node("X", C), Node("Y", V, True)],
        [("U", "X"), ("U", "Y"), ("X", "Y")],
    )


def collider_trap() -> CausalDiagram:
    """Z1 = {W} passes stage 1 but no Z2 can then pass stage 2.

    W is a collider between a hidden parent of X2 and a hidden parent of Y,
    so conditioning on it opens X2 <- Ua -> W <- Ub -> Y, while the empty
    sequence is admissible.
    """
    return CausalDiagram(
        [Node("Ua", L), Node("Ub", L), Node("W", V), Node("X1", C), Node("X2", C), Node("Y", V, True)],
        [
            ("Ua", "W"), ("Ub", "W"), ("Ua", "X2"), ("Ub", "Y"),
            ("X1", "X2"), ("X1", "Y"), ("X2", "Y"),
        ],
    )


def two_minimal_sets() -> CausalDiagram:
    """{A} and {B} are both minimal admissible sets for the single control."""
    return CausalDiagram(
        [Node("A", V), Node("B", V), Node("X", C), Node("Y", V, True)],
        [("A", "X"), ("A", "B"), ("B", "Y"), ("X", "Y")],
    )


def ordering_counterexample() -> CausalDiagram:
    """Both orderings of (Xa, Xb) are consistent, only (Xb, Xa) identifies.

    C confounds Xa through a hidden U and is caused by Xb, so it can only be
    adjusted for once Xb has been placed first.
    """
    return CausalDiagram(
        [Node("U", L), Node("Xa", C), Node("Xb", C), Node("C", V), Node("Y", V, True)],
        [("U", "Xa"), ("U", "C"), ("Xb", "C"), ("C", "Y"), ("Xa", "Y"), ("Xb", "Y")],
    )


FIXTURES = {
    "two_treatments": two_treatments,
    "bow": bow,
    "collider_trap": collider_trap,
    "two_minimal_sets": two_minimal_sets,
    "ordering": ordering_counterexample,
}
