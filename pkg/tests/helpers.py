"""Shared test utilities: random graded data with exact coefficients."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from ulinf.grading import GradedSpace, shift_structure
from ulinf.multimaps import MultiMap
from ulinf.structures import LinfStructure, ULinfStructure


def random_space(rng: random.Random, dim: int, degree_range=(-2, 2), prefix="w") -> GradedSpace:
    return GradedSpace.from_pairs(
        (f"{prefix}{i}", rng.randint(*degree_range)) for i in range(dim)
    )


def random_fraction(rng: random.Random, zero_bias: float = 0.0) -> Fraction:
    if zero_bias and rng.random() < zero_bias:
        return Fraction(0)
    return Fraction(rng.randint(-4, 4), rng.choice([1, 1, 1, 2, 3]))


def random_multimap(
    rng: random.Random,
    space: GradedSpace,
    arity: int,
    target: str,
    degree: int,
    symmetry: str = "sym",
    density: float = 0.5,
) -> MultiMap:
    """Random degree-respecting map; may be zero."""
    entries = []
    for key in itertools.combinations_with_replacement(space.indices(), arity):
        s = sum(space.degree(i) for i in key)
        if target == "space":
            for out in space.indices():
                if space.degree(out) != s + degree:
                    continue
                if rng.random() < density:
                    entries.append((key, out, random_fraction(rng)))
        else:
            if s + degree != 0:
                continue
            if rng.random() < density:
                entries.append((key, None, random_fraction(rng)))
    return MultiMap.build(space, arity, target, degree, entries, symmetry=symmetry)


def random_ulinf(
    rng: random.Random,
    dim: int = 3,
    max_arity: int = 4,
    degree_range=(-2, 2),
    density: float = 0.35,
) -> ULinfStructure:
    """Random degree-respecting structure data; not necessarily integrable."""
    v = random_space(rng, dim, degree_range, prefix="e")
    w, sh = shift_structure(v)
    d = random_multimap(rng, w, 1, "space", 1, density=density)
    ell = {}
    for n in range(2, max_arity + 1):
        m = random_multimap(rng, w, n, "space", 1, density=density)
        if not m.is_zero():
            ell[n] = m
    q = {}
    for n in range(1, max_arity + 1):
        m = random_multimap(rng, w, n, "scalar", 0, density=density)
        if not m.is_zero():
            q[n] = m
    return ULinfStructure(LinfStructure(v, w, sh, d, ell), q)


def all_tuples(space: GradedSpace, arity: int):
    return itertools.product(space.indices(), repeat=arity)


# -- retract construction for transfer tests ---------------------------------


def random_valid_small_structure(rng: random.Random, dim: int) -> ULinfStructure:
    """Abelian graded space with zero differential and random scalar operations.

    With no differential and no brackets every unimodularity equation holds,
    so any degree-zero q-family is valid.
    """
    from ulinf.structures import structure_from_shifted

    degs = [rng.randint(-1, 1) for _ in range(dim)]
    shifted = GradedSpace(tuple((f"x_u{i}", degs[i] - 1) for i in range(dim)))
    space = GradedSpace(tuple((f"u{i}", degs[i]) for i in range(dim)))
    q_entries = {}
    for n in range(1, 4):
        entries = []
        for key in itertools.combinations_with_replacement(range(dim), n):
            if sum(shifted.degree(i) for i in key) != 0:
                continue
            if rng.random() < 0.6:
                entries.append((key, None, random_fraction(rng)))
        if entries:
            q_entries[n] = entries
    return structure_from_shifted(shifted, q_entries=q_entries, space=space)


def build_sum_retract(u_struct: ULinfStructure, pairs, pair_degrees):
    """Direct sum of a structure with acyclic two-term complexes.

    ``pairs`` are base names, ``pair_degrees[i]`` the degree of the bottom
    generator; returns the extended structure on the big space and the
    standard retract onto the small one.
    """
    from ulinf.structures import structure_from_shifted
    from ulinf.transfer import LinearMap, RetractData

    wu = u_struct.base.shifted
    u_space = u_struct.base.space
    big_pairs = list(u_space.basis)
    big_shift_pairs = list(wu.basis)
    d_entries = [
        (wu.name(key[0]), wu.name(out), c)
        for key, outs in u_struct.base.d.coeffs.items()
        for out, c in outs.items()
    ]
    for name, deg in zip(pairs, pair_degrees):
        big_pairs += [(name + "a", deg), (name + "b", deg + 1)]
        big_shift_pairs += [("x_" + name + "a", deg - 1), ("x_" + name + "b", deg)]
        d_entries.append(("x_" + name + "a", "x_" + name + "b", 1))
    big = GradedSpace(tuple(big_pairs))
    wv = GradedSpace(tuple(big_shift_pairs))

    ell_entries = {
        n: [
            (tuple(wu.name(i) for i in key), wu.name(out), c)
            for key, outs in m.coeffs.items()
            for out, c in outs.items()
        ]
        for n, m in u_struct.base.ell.items()
    }
    q_entries = {
        n: [
            (tuple(wu.name(i) for i in key), None, c)
            for key, c in m.coeffs.items()
        ]
        for n, m in u_struct.q.items()
    }
    big_struct = structure_from_shifted(
        wv, d_entries=d_entries, ell_entries=ell_entries, q_entries=q_entries, space=big
    )
    incl = LinearMap.build(wu, wv, 0, [(n, n, 1) for n, _ in wu.basis])
    proj = LinearMap.build(wv, wu, 0, [(n, n, 1) for n, _ in wu.basis])
    homotopy = LinearMap.build(
        wv, wv, -1,
        [("x_" + name + "b", "x_" + name + "a", -1) for name in pairs],
    )
    retract = RetractData(
        big, u_space, wv, wu, big_struct.base.d, u_struct.base.d, incl, proj, homotopy
    )
    return big_struct, retract


def random_chain_auto(rng: random.Random, space, d_map, steps=None):
    """Unipotent degree-0 chain automorphism of ``(space, d)``.

    Built from square-zero elementary chain maps src -> dst (same degree,
    dst closed, src absent from every differential image), so each step
    inverts exactly and the product inverse is the reversed product of the
    step inverses.
    """
    from ulinf.transfer import LinearMap, differential_as_linear

    dv = differential_as_linear(d_map)
    ident = LinearMap.identity(space)
    image_support = set()
    for row in dv.entries.values():
        image_support.update(row)
    closed = [i for i in space.indices() if not dv.apply_basis(i)]
    candidates = [
        (src, dst)
        for src in space.indices()
        if src not in image_support
        for dst in closed
        if dst != src and space.degree(dst) == space.degree(src)
    ]
    phi, phi_inv = ident, ident
    if not candidates:
        return phi, phi_inv
    for _ in range(steps if steps is not None else rng.randint(1, 3)):
        src, dst = rng.choice(candidates)
        c = random_fraction(rng)
        if c == 0:
            continue
        n_map = LinearMap.build(space, space, 0, [(src, dst, c)])
        phi = (ident + n_map).compose(phi)
        phi_inv = phi_inv.compose(ident + n_map.scale(-1))
    assert (dv.compose(phi) - phi.compose(dv)).is_zero()
    assert (phi.compose(phi_inv) - ident).is_zero()
    return phi, phi_inv


def conjugate_structure(S: ULinfStructure, psi, psi_inv) -> ULinfStructure:
    """Transport a structure along a degree-0 chain automorphism.

    Even conjugation needs no Koszul signs; the differential is untouched
    when psi is a chain map.
    """
    from ulinf.structures import structure_from_shifted

    wv = S.base.shifted
    d_entries = [
        (wv.name(key[0]), wv.name(out), c)
        for key, outs in S.base.d.coeffs.items()
        for out, c in outs.items()
    ]

    def conj_space_map(m):
        entries = []
        for key in itertools.combinations_with_replacement(wv.indices(), m.arity):
            if any(a == b and wv.degree(a) % 2 for a, b in zip(key, key[1:])):
                continue
            args = [psi_inv.apply_basis(i) for i in key]
            val = m.eval(*args)
            out_vec = psi.apply(val)
            for o, c in out_vec.items():
                entries.append((tuple(wv.name(i) for i in key), wv.name(o), c))
        return entries

    def conj_scalar_map(m):
        entries = []
        for key in itertools.combinations_with_replacement(wv.indices(), m.arity):
            if any(a == b and wv.degree(a) % 2 for a, b in zip(key, key[1:])):
                continue
            args = [psi_inv.apply_basis(i) for i in key]
            val = m.eval(*args)
            if val != 0:
                entries.append((tuple(wv.name(i) for i in key), None, val))
        return entries

    return structure_from_shifted(
        wv,
        d_entries=d_entries,
        ell_entries={n: conj_space_map(m) for n, m in S.base.ell.items()},
        q_entries={n: conj_scalar_map(m) for n, m in S.q.items()},
        space=S.base.space,
    )


def conjugate_retract(retract, phi, phi_inv):
    from ulinf.transfer import RetractData

    return RetractData(
        retract.big,
        retract.small,
        retract.big_shifted,
        retract.small_shifted,
        retract.d_big,
        retract.d_small,
        phi.compose(retract.incl),
        retract.proj.compose(phi_inv),
        phi.compose(retract.homotopy).compose(phi_inv),
    )


def planted_retract(t=1):
    """Deformation retract of the planted structure onto its cohomology.

    The planted space has one closed non-exact direction; the homotopy
    kills the acyclic pair, and after conjugation the bracket image leaves
    its kernel, so trees and wheels genuinely contribute.
    """
    from fractions import Fraction as F

    from ulinf import catalog
    from ulinf.structures import structure_from_shifted
    from ulinf.transfer import LinearMap, RetractData

    t = F(t)
    struct = catalog.planted_unimodular(t)
    wv = struct.base.shifted
    small = GradedSpace((("u", 1),))
    wu = GradedSpace((("x_u", 0),))
    small_struct = structure_from_shifted(wu, space=small)
    incl = LinearMap.build(wu, wv, 0, [("x_u", "x_b", 1)])
    proj = LinearMap.build(wv, wu, 0, [("x_b", "x_u", 1)])
    homotopy = LinearMap.build(wv, wv, -1, [("x_v", "x_a", F(-1) / t)])
    retract = RetractData(
        struct.base.space,
        small,
        wv,
        wu,
        struct.base.d,
        small_struct.base.d,
        incl,
        proj,
        homotopy,
    )
    return struct, retract


def random_transfer_instance(rng: random.Random, max_small_dim: int = 2, live: bool = None):
    """A valid unimodular structure on a big space plus a compatible retract.

    ``live=True`` draws from the conjugated planted family, whose brackets
    feed the homotopy (trees and wheels contribute); ``live=False`` builds
    an abelian small structure summed with acyclic pairs.
    """
    if live is None:
        live = rng.random() < 0.5
    if live:
        big_struct, retract = planted_retract(rng.choice([1, 2, F_HALF, 3]))
    else:
        u_struct = random_valid_small_structure(rng, rng.randint(1, max_small_dim))
        n_pairs = rng.randint(1, 2)
        pairs = [f"p{i}" for i in range(n_pairs)]
        degrees = [rng.randint(-1, 1) for _ in range(n_pairs)]
        big_struct, retract = build_sum_retract(u_struct, pairs, degrees)
    psi, psi_inv = random_chain_auto(rng, retract.big_shifted, retract.d_big)
    big_struct = conjugate_structure(big_struct, psi, psi_inv)
    phi, phi_inv = random_chain_auto(rng, retract.big_shifted, retract.d_big)
    retract = conjugate_retract(retract, phi, phi_inv)
    return big_struct, retract


F_HALF = Fraction(1, 2)


def maps_equal_pointwise(a: MultiMap, b: MultiMap) -> bool:
    """Compare two maps (possibly with different storage) on every ordered tuple."""
    if a.space != b.space or a.arity != b.arity or a.target != b.target:
        return False
    for t in all_tuples(a.space, a.arity):
        va, vb = a.lookup_ordered(t), b.lookup_ordered(t)
        if a.target == "space":
            if {o: c for o, c in va.items() if c} != {o: c for o, c in vb.items() if c}:
                return False
        else:
            if va != vb:
                return False
    return True
