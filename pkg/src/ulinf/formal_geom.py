"""Structures as vector fields and measures on the formal pointed manifold.

Coordinates ``x^a`` are dual to the shifted basis, so ``deg x^a = -deg w_a``.
Functions are finite exact polynomial truncations of the completed symmetric
algebra; vector fields are finite-weight derivations.  The dictionary
identifies the stored coefficient of a symmetric map on a sorted multi-index
with the coefficient of the corresponding sorted monomial (factor one, no
multinomial weights); the alternative normalization sits behind
``multinomial`` switches only so the cross-validation test can show it is
wrong.  Under this dictionary the unimodularity residuals agree with
``div Q + Q(f)`` weight by weight, which is what pins both this
normalization and the parity signs in the partial trace.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .grading import GradedSpace, ValidationError, sort_with_sign
from .multimaps import MultiMap
from .structures import LinfStructure, ULinfStructure, structure_from_shifted, ulinf_residuals

Monomial = tuple[int, ...]


def _cdeg(space: GradedSpace, idx: int) -> int:
    return -space.degree(idx)


def _canonical_monomial(space: GradedSpace, idxs) -> tuple[Optional[Monomial], int]:
    degs = [_cdeg(space, i) for i in idxs]
    key, sign = sort_with_sign(tuple(idxs), degs)
    for a, b in zip(key, key[1:]):
        if a == b and _cdeg(space, a) % 2:
            return None, 0
    return key, sign


@dataclass
class PolyFunction:
    """Exact polynomial on the shifted space, sparse on sorted monomials."""

    space: GradedSpace
    terms: dict = field(default_factory=dict)

    @classmethod
    def zero(cls, space: GradedSpace) -> "PolyFunction":
        return cls(space, {})

    @classmethod
    def build(cls, space: GradedSpace, entries: Iterable[tuple]) -> "PolyFunction":
        """Build from ``(names_or_indices, coeff)`` pairs, any monomial order."""
        f = cls(space, {})
        for mono, coeff in entries:
            idxs = tuple(space.index(i) if isinstance(i, str) else int(i) for i in mono)
            f.add_term(idxs, Fraction(coeff))
        f.prune()
        return f

    def add_term(self, idxs, coeff: Fraction) -> None:
        key, sign = _canonical_monomial(self.space, idxs)
        if sign == 0 or coeff == 0:
            return
        self.terms[key] = self.terms.get(key, Fraction(0)) + sign * coeff

    def prune(self) -> None:
        for key in [k for k, v in self.terms.items() if v == 0]:
            del self.terms[key]

    def is_zero(self) -> bool:
        return not self.terms

    def copy(self) -> "PolyFunction":
        return PolyFunction(self.space, dict(self.terms))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyFunction):
            return NotImplemented
        return self.space == other.space and self.terms == other.terms

    def __add__(self, other: "PolyFunction") -> "PolyFunction":
        if self.space != other.space:
            raise ValidationError("functions on different spaces")
        out = self.copy()
        for key, val in other.terms.items():
            out.terms[key] = out.terms.get(key, Fraction(0)) + val
        out.prune()
        return out

    def __sub__(self, other: "PolyFunction") -> "PolyFunction":
        return self + other.scale(-1)

    def scale(self, c) -> "PolyFunction":
        c = Fraction(c)
        if c == 0:
            return PolyFunction.zero(self.space)
        return PolyFunction(self.space, {k: c * v for k, v in self.terms.items()})

    def __mul__(self, other: "PolyFunction") -> "PolyFunction":
        if self.space != other.space:
            raise ValidationError("functions on different spaces")
        out = PolyFunction.zero(self.space)
        for ka, va in self.terms.items():
            for kb, vb in other.terms.items():
                out.add_term(ka + kb, va * vb)
        out.prune()
        return out

    def deriv(self, alpha: int) -> "PolyFunction":
        """Left partial derivative along the coordinate ``alpha``."""
        space = self.space
        d_alpha = _cdeg(space, alpha)
        out = PolyFunction.zero(space)
        for key, val in self.terms.items():
            prefix = 0
            for i, idx in enumerate(key):
                if idx == alpha:
                    sign = -1 if (d_alpha * prefix) % 2 else 1
                    out.add_term(key[:i] + key[i + 1 :], sign * val)
                prefix += _cdeg(space, idx)
        out.prune()
        return out

    def weight_part(self, w: int) -> "PolyFunction":
        return PolyFunction(self.space, {k: v for k, v in self.terms.items() if len(k) == w})

    def max_weight(self) -> int:
        return max((len(k) for k in self.terms), default=0)

    def monomial_degree(self, key: Monomial) -> int:
        return sum(_cdeg(self.space, i) for i in key)

    def degrees(self) -> set[int]:
        return {self.monomial_degree(k) for k in self.terms}

    def is_homogeneous(self, degree: int) -> bool:
        return all(self.monomial_degree(k) == degree for k in self.terms)

    def constant_term(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def pretty(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for key in sorted(self.terms, key=lambda k: (len(k), k)):
            mono = "*".join(self.space.name(i) for i in key) or "1"
            bits.append("%s %s" % (self.terms[key], mono))
        return " + ".join(bits)


@dataclass
class PolyVectorField:
    """Finite-weight derivation ``sum_a V^a d/dx^a`` with polynomial components."""

    space: GradedSpace
    components: dict = field(default_factory=dict)

    @classmethod
    def zero(cls, space: GradedSpace) -> "PolyVectorField":
        return cls(space, {})

    @classmethod
    def build(cls, space: GradedSpace, comps: Mapping) -> "PolyVectorField":
        out = cls(space, {})
        for a, f in comps.items():
            idx = space.index(a) if isinstance(a, str) else int(a)
            if not f.is_zero():
                out.components[idx] = f.copy()
        return out

    def component(self, alpha: int) -> PolyFunction:
        return self.components.get(alpha, PolyFunction.zero(self.space))

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.components.values())

    def prune(self) -> None:
        for a in [a for a, f in self.components.items() if f.is_zero()]:
            del self.components[a]

    def copy(self) -> "PolyVectorField":
        return PolyVectorField(self.space, {a: f.copy() for a, f in self.components.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyVectorField):
            return NotImplemented
        if self.space != other.space:
            return False
        keys = set(self.components) | set(other.components)
        return all(self.component(a) == other.component(a) for a in keys)

    def __add__(self, other: "PolyVectorField") -> "PolyVectorField":
        if self.space != other.space:
            raise ValidationError("fields on different spaces")
        out = self.copy()
        for a, f in other.components.items():
            out.components[a] = out.component(a) + f
        out.prune()
        return out

    def __sub__(self, other: "PolyVectorField") -> "PolyVectorField":
        return self + other.scale(-1)

    def scale(self, c) -> "PolyVectorField":
        return PolyVectorField(
            self.space, {a: f.scale(c) for a, f in self.components.items()}
        )

    def term_degree(self, alpha: int, key: Monomial) -> int:
        """Operator degree of the single term ``x^key d_alpha``."""
        return sum(_cdeg(self.space, i) for i in key) + self.space.degree(alpha)

    def degrees(self) -> set[int]:
        out = set()
        for a, f in self.components.items():
            for key in f.terms:
                out.add(self.term_degree(a, key))
        return out

    def is_homogeneous(self, degree: int) -> bool:
        return all(d == degree for d in self.degrees())

    def homogeneous_parts(self) -> dict:
        parts: dict[int, PolyVectorField] = {}
        for a, f in self.components.items():
            for key, val in f.terms.items():
                d = self.term_degree(a, key)
                part = parts.setdefault(d, PolyVectorField.zero(self.space))
                comp = part.components.setdefault(a, PolyFunction.zero(self.space))
                comp.terms[key] = comp.terms.get(key, Fraction(0)) + val
        return parts

    def max_weight(self) -> int:
        return max((f.max_weight() for f in self.components.values()), default=0)


@dataclass
class VolumeData:
    """The measure exponent: ``rho = e^f`` times the coordinate volume form."""

    f: PolyFunction

    def __post_init__(self):
        if not self.f.is_homogeneous(0):
            raise ValidationError("measure exponent must have degree zero")
        if self.f.constant_term() != 0:
            raise ValidationError("measure exponent must vanish at the basepoint")


def apply(V: PolyVectorField, g: PolyFunction) -> PolyFunction:
    """Derivation action V(g), exact."""
    if V.space != g.space:
        raise ValidationError("field and function on different spaces")
    out = PolyFunction.zero(g.space)
    for alpha, comp in V.components.items():
        out = out + comp * g.deriv(alpha)
    return out


def bracket(V1: PolyVectorField, V2: PolyVectorField) -> PolyVectorField:
    """Commutator of derivations, computed on homogeneous parts."""
    if V1.space != V2.space:
        raise ValidationError("fields on different spaces")
    space = V1.space
    out = PolyVectorField.zero(space)
    for d1, p1 in V1.homogeneous_parts().items():
        for d2, p2 in V2.homogeneous_parts().items():
            sign = -1 if (d1 * d2) % 2 else 1
            comps: dict[int, PolyFunction] = {}
            for a in set(p2.components) | set(p1.components):
                term = apply(p1, p2.component(a)) - apply(p2, p1.component(a)).scale(sign)
                if not term.is_zero():
                    comps[a] = term
            out = out + PolyVectorField(space, comps)
    return out


def divergence(V: PolyVectorField, vol: Optional[VolumeData] = None) -> PolyFunction:
    """Divergence against ``e^f`` times the constant coordinate volume form."""
    space = V.space
    out = PolyFunction.zero(space)
    for alpha, comp in V.components.items():
        da = _cdeg(space, alpha)
        for key, val in comp.terms.items():
            mdeg = sum(_cdeg(space, i) for i in key)
            sign = -1 if (da * mdeg) % 2 else 1
            single = PolyFunction(space, {key: sign * val})
            out = out + single.deriv(alpha)
    if vol is not None:
        out = out + apply(V, vol.f)
    return out


def divergence_f(V: PolyVectorField, f: Optional[PolyFunction]) -> PolyFunction:
    return divergence(V, VolumeData(f) if f is not None and not f.is_zero() else None)


# -- the dictionary --------------------------------------------------------------


# The pinned dictionary: the polynomial coefficient on a sorted monomial is
# the stored map coefficient (an ordered-tuple evaluation) divided by the
# product of the factorials of the index multiplicities.  This is the unique
# normalization for which the unimodularity residuals equal div Q + Q(f)
# weight by weight *and* the bracket residuals equal the components of QQ;
# 'unit' (factor one) and 'multinomial' (n! over the multiplicity
# factorials) are kept only so the pinning tests can exhibit their failure.
DICTIONARY_NORMALIZATION = "evaluation"


def _mult_factorials(key: Monomial) -> int:
    mult = 1
    for b in set(key):
        c = key.count(b)
        for k in range(2, c + 1):
            mult *= k
    return mult


def _dict_factor(key: Monomial, normalization: str) -> Fraction:
    if normalization == "evaluation":
        return Fraction(1, _mult_factorials(key))
    if normalization == "unit":
        return Fraction(1)
    if normalization == "multinomial":
        total = 1
        for k in range(2, len(key) + 1):
            total *= k
        return Fraction(total, _mult_factorials(key))
    raise ValidationError("unknown dictionary normalization %r" % (normalization,))


def map_to_function(m: MultiMap, normalization: str | None = None) -> PolyFunction:
    """Scalar-valued symmetric map as a polynomial under the pinned dictionary."""
    if m.target != "scalar" or m.symmetry != "sym":
        raise ValidationError("map_to_function needs a symmetric scalar map")
    normalization = normalization or DICTIONARY_NORMALIZATION
    out = PolyFunction.zero(m.space)
    for key, val in m.coeffs.items():
        out.terms[key] = out.terms.get(key, Fraction(0)) + _dict_factor(key, normalization) * val
    out.prune()
    return out


def map_to_field(m: MultiMap, normalization: str | None = None) -> PolyVectorField:
    """Space-valued symmetric map as a polynomial vector field."""
    if m.target != "space" or m.symmetry != "sym":
        raise ValidationError("map_to_field needs a symmetric space map")
    normalization = normalization or DICTIONARY_NORMALIZATION
    out = PolyVectorField.zero(m.space)
    for key, outs in m.coeffs.items():
        factor = _dict_factor(key, normalization)
        for alpha, val in outs.items():
            comp = out.components.setdefault(alpha, PolyFunction.zero(m.space))
            comp.terms[key] = comp.terms.get(key, Fraction(0)) + factor * val
    out.prune()
    return out


def function_to_maps(
    f: PolyFunction, degree: int = 0, normalization: str | None = None
) -> dict[int, MultiMap]:
    """Split a polynomial into symmetric scalar maps, one per weight >= 1."""
    normalization = normalization or DICTIONARY_NORMALIZATION
    out: dict[int, MultiMap] = {}
    for key, val in f.terms.items():
        n = len(key)
        if n == 0:
            if val != 0:
                raise ValidationError("constant term has no map counterpart")
            continue
        m = out.setdefault(n, MultiMap(f.space, n, "scalar", degree, "sym", {}))
        c = val / _dict_factor(key, normalization)
        m.coeffs[key] = m.coeffs.get(key, Fraction(0)) + c
    for m in out.values():
        m.prune()
        m.validate_degrees()
    return {n: m for n, m in out.items() if not m.is_zero()}


def field_to_maps(
    V: PolyVectorField, degree: int = 1, normalization: str | None = None
) -> dict[int, MultiMap]:
    """Split a vector field into symmetric space-valued maps by weight."""
    normalization = normalization or DICTIONARY_NORMALIZATION
    out: dict[int, MultiMap] = {}
    for alpha, comp in V.components.items():
        for key, val in comp.terms.items():
            n = len(key)
            if n == 0:
                raise ValidationError("field does not vanish at the basepoint")
            m = out.setdefault(n, MultiMap(V.space, n, "space", degree, "sym", {}))
            slot = m.coeffs.setdefault(key, {})
            slot[alpha] = slot.get(alpha, Fraction(0)) + val / _dict_factor(key, normalization)
    for m in out.values():
        m.prune()
        m.validate_degrees()
    return {n: m for n, m in out.items() if not m.is_zero()}


def to_geometry(S: ULinfStructure, normalization: str | None = None):
    """The structure as (homological vector field candidate, measure exponent)."""
    space = S.base.shifted
    Q = PolyVectorField.zero(space)
    if not S.base.d.is_zero():
        Q = Q + map_to_field(S.base.d, normalization)
    for n in sorted(S.base.ell):
        Q = Q + map_to_field(S.base.ell[n], normalization)
    f = PolyFunction.zero(space)
    for n in sorted(S.q):
        f = f + map_to_function(S.q[n], normalization)
    return Q, f


def from_geometry(
    Q: PolyVectorField, f: PolyFunction, space: Optional[GradedSpace] = None
) -> ULinfStructure:
    """Inverse dictionary; validates degrees and vanishing at the basepoint."""
    shifted = Q.space
    if f.space != shifted:
        raise ValidationError("field and function on different spaces")
    if not Q.is_homogeneous(1):
        raise ValidationError("vector field must have degree +1")
    if not f.is_homogeneous(0):
        raise ValidationError("measure exponent must have degree 0")
    if f.constant_term() != 0:
        raise ValidationError("measure exponent must vanish at the basepoint")
    maps = field_to_maps(Q, degree=1)
    d_entries = []
    d1 = maps.pop(1, None)
    if d1 is not None:
        for key, outs in d1.coeffs.items():
            for alpha, val in outs.items():
                d_entries.append((shifted.name(key[0]), shifted.name(alpha), val))
    ell_entries = {
        n: [
            (tuple(shifted.name(i) for i in key), shifted.name(alpha), val)
            for key, outs in m.coeffs.items()
            for alpha, val in outs.items()
        ]
        for n, m in maps.items()
    }
    q_entries = {
        n: [
            (tuple(shifted.name(i) for i in key), None, val)
            for key, val in m.coeffs.items()
        ]
        for n, m in function_to_maps(f, degree=0).items()
    }
    return structure_from_shifted(shifted, d_entries, ell_entries, q_entries, space=space)


# -- cross-validated unimodularity check ----------------------------------------


@dataclass
class GeomReport:
    """Outcome of the geometric unimodularity check with the algebraic cross-check."""

    residual: PolyFunction
    is_unimodular: bool
    routes_agree: bool
    compared_weights: int

    def witness(self):
        if self.residual.is_zero():
            return None
        key = sorted(self.residual.terms, key=lambda k: (len(k), k))[0]
        names = tuple(self.residual.space.name(i) for i in key)
        return names, self.residual.terms[key]


def check_geometric_unimodularity(S: ULinfStructure) -> GeomReport:
    """Compute div Q + Q(f) and compare it with the algebraic residuals.

    The comparison runs weight by weight over the full finite support of
    both sides; agreement of the two routes is the executable form of the
    equivalence between the structure equations and Q-invariance of the
    measure.
    """
    Q, f = to_geometry(S)
    r = divergence(Q) + apply(Q, f)
    n_ell = S.base.max_arity
    n_q = max((n for n in S.q), default=0)
    top = max(r.max_weight(), n_ell - 1 + n_q, n_ell, 1)
    residuals = ulinf_residuals(S, top)
    agree = True
    for res in residuals:
        lhs = map_to_function(res.map)
        if lhs != r.weight_part(res.arity):
            agree = False
            break
    if agree and r.weight_part(0).is_zero() is False:
        agree = False
    return GeomReport(r, r.is_zero(), agree, top)
