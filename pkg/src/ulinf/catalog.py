"""Small stock structures used across the test suite and the documentation."""

from __future__ import annotations

from fractions import Fraction

from .grading import GradedSpace
from .structures import LinfStructure, ULinfStructure, from_lie, structure_from_shifted

SL2_BRACKETS = {
    ("h", "e"): {"e": 2},
    ("h", "f"): {"f": -2},
    ("e", "f"): {"h": 1},
}

HEISENBERG_BRACKETS = {("e1", "e2"): {"e3": 1}}

AFFINE_BRACKETS = {("e1", "e2"): {"e2": 1}}


def sl2() -> LinfStructure:
    return from_lie(["h", "e", "f"], SL2_BRACKETS)


def heisenberg() -> LinfStructure:
    return from_lie(["e1", "e2", "e3"], HEISENBERG_BRACKETS)


def affine_line() -> LinfStructure:
    """The 2-dimensional algebra [e1, e2] = e2; not unimodular."""
    return from_lie(["e1", "e2"], AFFINE_BRACKETS)


def abelian(n: int, degrees=None) -> LinfStructure:
    degs = degrees if degrees is not None else [0] * n
    space = GradedSpace.from_pairs((f"e{i+1}", degs[i]) for i in range(n))
    return structure_from_shifted(
        GradedSpace(tuple((f"x_e{i+1}", degs[i] - 1) for i in range(n))),
        space=space,
    ).base


def planted_extension(t: Fraction | int = 1) -> tuple[LinfStructure, dict]:
    """A 3-dim structure with d != 0 whose divergence class vanishes.

    On V with degrees a:0, b:1, v:1 the differential sends a to t*v and the
    only bracket is (x_a, x_b) -> x_b.  The divergence of the associated
    vector field is the coordinate dual to x_a, killed by f = -x^v / t, so a
    nonzero finite-weight witness exists.  Returns the structure and the
    expected witness as a {monomial: coefficient} table on shifted names.
    """
    t = Fraction(t)
    if t == 0:
        raise ValueError("t must be nonzero")
    space = GradedSpace.from_pairs([("a", 0), ("b", 1), ("v", 1)])
    struct = structure_from_shifted(
        GradedSpace((("x_a", -1), ("x_b", 0), ("x_v", 0))),
        d_entries=[("x_a", "x_v", t)],
        ell_entries={2: [(("x_a", "x_b"), "x_b", 1)]},
        space=space,
    )
    witness = {("x_v",): Fraction(-1) / t}
    return struct.base, witness


def planted_unimodular(t: Fraction | int = 1) -> ULinfStructure:
    """The unimodular completion of :func:`planted_extension`."""
    base, witness = planted_extension(t)
    q1 = [(("x_v",), None, witness[("x_v",)])]
    return structure_from_shifted(
        base.shifted,
        d_entries=[("x_a", "x_v", Fraction(t))],
        ell_entries={2: [(("x_a", "x_b"), "x_b", 1)]},
        q_entries={1: q1},
        space=base.space,
    )
