"""Homotopy transfer: degenerations, brute-force cross-checks, the theorem as oracle."""

import itertools
import random
from fractions import Fraction

import pytest

from helpers import (
    build_sum_retract,
    conjugate_retract,
    conjugate_structure,
    maps_equal_pointwise,
    planted_retract,
    random_chain_auto,
    random_transfer_instance,
    random_valid_small_structure,
)
from ulinf import catalog
from ulinf.grading import GradedSpace, Unshuffle, ValidationError
from ulinf.multimaps import MultiMap, insert
from ulinf.structures import (
    linf_residuals,
    passes,
    structure_from_shifted,
    ulinf_residuals,
)
from ulinf.transfer import (
    LinearMap,
    RetractData,
    TransferResult,
    differential_as_linear,
    eval_tree,
    transfer,
)
from ulinf.trees import Leaf, Node, QTree, enum_rooted, enum_wheeled


def identity_retract(struct):
    w = struct.base.shifted
    ident = LinearMap.identity(w)
    return RetractData(
        struct.base.space,
        struct.base.space,
        w,
        w,
        struct.base.d,
        struct.base.d,
        ident,
        ident,
        LinearMap(w, w, -1, {}),
    )


def compose_linear_with_map(lin: LinearMap, m: MultiMap) -> MultiMap:
    out = MultiMap(m.space, m.arity, "space", m.degree + lin.degree, m.symmetry, {})
    for key, outs in m.coeffs.items():
        vec = lin.apply(dict(outs))
        if vec:
            out.coeffs[key] = vec
    out.prune()
    return out


def test_identity_retract_recovers_structure():
    s = catalog.planted_unimodular(t=2)
    res = transfer(s, identity_retract(s), up_to=3)
    assert res.verified
    assert res.structure.base.ell == s.base.ell
    assert res.structure.q == s.q


def test_iso_retract_is_conjugation():
    rng = random.Random(7)
    u_struct = random_valid_small_structure(rng, 2)
    big_struct, retract = build_sum_retract(u_struct, ["p0"], [0])
    phi, phi_inv = random_chain_auto(rng, retract.big_shifted, retract.d_big)
    w = retract.big_shifted
    iso = RetractData(
        retract.big,
        retract.big,
        w,
        w,
        retract.d_big,
        retract.d_big,
        phi,
        phi_inv,
        LinearMap(w, w, -1, {}),
    )
    s = conjugate_structure(big_struct, phi, phi_inv)
    res = transfer(s, iso, up_to=3)
    assert res.verified
    # with h = 0 only corollas survive: the conjugation formulas exactly
    direct = conjugate_structure(s, phi_inv, phi)
    assert res.structure.base.ell == direct.base.ell
    assert res.structure.q == direct.q


def test_corolla_eval_tree_is_conjugated_bracket():
    rng = random.Random(11)
    s, retract = random_transfer_instance(rng)
    corolla = Node((Leaf(1), Leaf(2)))
    got = eval_tree(corolla, s, retract)
    wu = retract.small_shifted
    expected = MultiMap(wu, 2, "space", 1, "none", {})
    bracket = s.base.ell_tilde(2)
    for key in itertools.product(wu.indices(), repeat=2):
        args = [retract.incl.apply_basis(i) for i in key]
        val = bracket.eval(*args)
        vec = retract.proj.apply(val)
        if vec:
            expected.coeffs[key] = vec
    expected.prune()
    assert got == expected


def test_trees_with_internal_edges_vanish_when_h_zero():
    s = catalog.planted_unimodular(t=1)
    r = identity_retract(s)
    nested = Node((Leaf(1), Node((Leaf(2), Leaf(3)))))
    assert eval_tree(nested, s, r).is_zero()


def test_two_vertex_tree_matches_insert_built_composite():
    rng = random.Random(13)
    for _ in range(12):
        s, retract = random_transfer_instance(rng)
        h = retract.homotopy
        bracket = s.base.ell_tilde(2)
        if bracket.is_zero():
            continue
        h_bracket = compose_linear_with_map(h, bracket)
        for tree, positions in [
            (Node((Leaf(1), Node((Leaf(2), Leaf(3))))), ((1,), (2, 3))),
            (Node((Leaf(2), Node((Leaf(1), Leaf(3))))), ((2,), (1, 3))),
            (Node((Leaf(3), Node((Leaf(1), Leaf(2))))), ((3,), (1, 2))),
        ]:
            got = eval_tree(tree, s, retract)
            composite = insert(bracket, h_bracket, Unshuffle(positions[0], positions[1], 3))
            wu = retract.small_shifted
            expected = MultiMap(wu, 3, "space", 1, "none", {})
            for key in itertools.product(wu.indices(), repeat=3):
                args = [retract.incl.apply_basis(i) for i in key]
                val = composite.eval(*args)
                vec = retract.proj.apply(val)
                if vec:
                    expected.coeffs[key] = vec
            expected.prune()
            assert maps_equal_pointwise(got, expected)


def test_zero_small_space():
    rng = random.Random(17)
    u_struct = structure_from_shifted(GradedSpace(()), space=GradedSpace(()))
    big_struct, retract = build_sum_retract(u_struct, ["p0"], [0])
    res = transfer(big_struct, retract, up_to=3)
    assert res.verified
    assert not res.structure.base.ell
    assert not res.structure.q


def test_unperturbed_sum_projects_to_small_structure():
    rng = random.Random(19)
    for _ in range(5):
        u_struct = random_valid_small_structure(rng, 2)
        big_struct, retract = build_sum_retract(u_struct, ["p0", "p1"], [0, -1])
        res = transfer(big_struct, retract, up_to=3)
        assert res.verified
        assert res.structure.base.ell == u_struct.base.ell
        assert res.structure.q == u_struct.q


def test_transfer_theorem_on_random_retracts():
    rng = random.Random(23)
    for _ in range(8):
        s, retract = random_transfer_instance(rng)
        res = transfer(s, retract, up_to=3)
        assert res.verified, [
            (x.arity, x.kind, x.witness())
            for x in res.ell_residuals + res.q_residuals
            if not x.is_zero()
        ]


def test_wheel_weighting_is_pinned():
    rng = random.Random(29)
    failures = {"marked-edge": 0, "closure-pairs": 0}
    trials = 0
    while trials < 6:
        s, retract = random_transfer_instance(rng)
        base = transfer(s, retract, up_to=3)
        assert base.verified
        # only instances whose wheels actually contribute can discriminate
        if all(m.is_zero() for m in base.structure.q.values()):
            continue
        trials += 1
        for mode in failures:
            alt = transfer(s, retract, up_to=3, wheel_weighting=mode)
            if not alt.verified:
                failures[mode] += 1
    assert failures["marked-edge"] > 0
    assert failures["closure-pairs"] > 0


def test_scaling_h_grades_by_internal_edges():
    rng = random.Random(31)
    s, retract = random_transfer_instance(rng)
    t = Fraction(3)
    scaled = RetractData(
        retract.big,
        retract.small,
        retract.big_shifted,
        retract.small_shifted,
        retract.d_big,
        retract.d_small,
        retract.incl,
        retract.proj,
        retract.homotopy.scale(t),
    )
    nested = Node((Leaf(1), Node((Leaf(2), Leaf(3)))))
    one_edge = eval_tree(nested, s, retract)
    one_edge_scaled = eval_tree(nested, s, scaled)
    assert maps_equal_pointwise(one_edge.scale(t), one_edge_scaled)
    corolla = Node((Leaf(1), Leaf(2), Leaf(3)))
    assert maps_equal_pointwise(
        eval_tree(corolla, s, retract), eval_tree(corolla, s, scaled)
    )
    # a wheel with one cycle vertex and one pendant leaf has one cycle edge
    wheel = enum_wheeled(1)[0]
    w0 = eval_tree(wheel, s, retract)
    w1 = eval_tree(wheel, s, scaled)
    assert maps_equal_pointwise(w0.scale(t), w1)


def test_invalid_retract_reported():
    s = catalog.planted_unimodular(t=1)
    r = identity_retract(s)
    w = s.base.shifted
    bad = RetractData(
        s.base.space,
        s.base.space,
        w,
        w,
        s.base.d,
        s.base.d,
        r.incl,
        r.proj,
        LinearMap.build(w, w, -1, [("x_b", "x_a", 1)]),
    )
    bad_list = bad.violations()
    assert bad_list and "homotopy identity" in bad_list[0]
    with pytest.raises(ValidationError):
        transfer(s, bad, up_to=2)


def test_invalid_structure_rejected():
    w = GradedSpace((("x", -1), ("y", 0), ("z", 1)))
    s = structure_from_shifted(w, d_entries=[("x", "y", 1), ("y", "z", 1)])
    ident = LinearMap.identity(w)
    r = RetractData(
        s.base.space, s.base.space, w, w, s.base.d, s.base.d,
        ident, ident, LinearMap(w, w, -1, {}),
    )
    with pytest.raises(ValidationError):
        transfer(s, r, up_to=2)
