"""(Unimodular) L-infinity structures and exact verification of their equations.

All structure maps live in the shifted picture: on ``W = V[1]`` every bracket
is a graded *symmetric* map of degree ``+1`` and every scalar operation a
graded symmetric map of degree ``0``.  Classical antisymmetric data on ``V``
is converted at the boundary.  The differential is stored as the arity-one
bracket and participates in all unshuffle sums uniformly, so the structure
equation at arity ``n`` reads: the sum over all partitions I | J of [n] with
|J| >= 1 of the insertion of the arity-|J| bracket into the arity-(|I|+1)
one vanishes; the unimodularity equation adds the partial trace of the
arity-(n+1) bracket to the same sum built on the scalar operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .grading import GradedSpace, ShiftMap, ValidationError, shift_structure
from .multimaps import MultiMap, insertion_sum, partial_trace

Brackets = Mapping[tuple[str, str], Mapping[str, Fraction]]


@dataclass
class Residual:
    """Per-arity residual of a structure equation; zero iff the equation holds."""

    arity: int
    kind: str  # 'ell-equation' | 'q-equation'
    map: MultiMap

    def is_zero(self) -> bool:
        return self.map.is_zero()

    def witness(self):
        """First offending coefficient as ``(input names, output name, value)``."""
        return self.map.first_entry()


@dataclass
class LinfStructure:
    """L-infinity structure: differential plus symmetric brackets on ``V[1]``."""

    space: GradedSpace
    shifted: GradedSpace
    shift: ShiftMap
    d: MultiMap
    ell: dict[int, MultiMap] = field(default_factory=dict)

    def __post_init__(self):
        if self.d.space != self.shifted or self.d.arity != 1 or self.d.degree != 1:
            raise ValidationError("differential must be an arity-1 degree +1 map on V[1]")
        if self.d.target != "space" or self.d.symmetry != "sym":
            raise ValidationError("differential must be space-valued symmetric")
        for n, m in self.ell.items():
            if n < 2:
                raise ValidationError("brackets are indexed by arity >= 2")
            if m.space != self.shifted or m.arity != n or m.degree != 1:
                raise ValidationError("bracket at arity %d has wrong shape" % n)
            if m.target != "space" or m.symmetry != "sym":
                raise ValidationError("brackets must be space-valued symmetric")

    @property
    def max_arity(self) -> int:
        live = [n for n, m in self.ell.items() if not m.is_zero()]
        return max(live, default=1)

    def ell_tilde(self, n: int) -> MultiMap:
        """The arity-``n`` shifted bracket; arity 1 is the differential."""
        if n == 1:
            return self.d
        m = self.ell.get(n)
        if m is None:
            return MultiMap.zero(self.shifted, n, "space", 1)
        return m

    def zero_q(self) -> "ULinfStructure":
        return ULinfStructure(self, {})


@dataclass
class ULinfStructure:
    """L-infinity structure together with symmetric scalar operations."""

    base: LinfStructure
    q: dict[int, MultiMap] = field(default_factory=dict)

    def __post_init__(self):
        for n, m in self.q.items():
            if n < 1:
                raise ValidationError("scalar operations are indexed by arity >= 1")
            if m.space != self.base.shifted or m.arity != n or m.degree != 0:
                raise ValidationError("scalar operation at arity %d has wrong shape" % n)
            if m.target != "scalar" or m.symmetry != "sym":
                raise ValidationError("scalar operations must be scalar-valued symmetric")

    @property
    def space(self) -> GradedSpace:
        return self.base.space

    @property
    def shifted(self) -> GradedSpace:
        return self.base.shifted

    @property
    def max_arity(self) -> int:
        live = [n for n, m in self.q.items() if not m.is_zero()]
        return max(self.base.max_arity, max(live, default=1))

    def q_tilde(self, n: int) -> MultiMap:
        m = self.q.get(n)
        if m is None:
            return MultiMap.zero(self.base.shifted, n, "scalar", 0)
        return m


def linf_residuals(struct: LinfStructure, up_to: int) -> list[Residual]:
    """Structure-equation residuals for arities 1..up_to; all zero iff L-infinity."""
    if up_to < 1:
        raise ValidationError("up_to must be >= 1")
    out = []
    for n in range(1, up_to + 1):
        total = MultiMap.zero(struct.shifted, n, "space", 2)
        for j in range(1, n + 1):
            inner = struct.ell_tilde(j)
            outer = struct.ell_tilde(n - j + 1)
            if inner.is_zero() or outer.is_zero():
                continue
            total = total + insertion_sum(outer, inner, n)
        out.append(Residual(n, "ell-equation", total))
    return out


def ulinf_residuals(struct: ULinfStructure, up_to: int) -> list[Residual]:
    """Unimodularity residuals for arities 1..up_to; all zero iff unimodular."""
    if up_to < 1:
        raise ValidationError("up_to must be >= 1")
    base = struct.base
    out = []
    for n in range(1, up_to + 1):
        total = MultiMap.zero(base.shifted, n, "scalar", 1)
        for j in range(1, n + 1):
            inner = base.ell_tilde(j)
            outer = struct.q_tilde(n - j + 1)
            if inner.is_zero() or outer.is_zero():
                continue
            total = total + insertion_sum(outer, inner, n)
        wheel = base.ell_tilde(n + 1)
        if not wheel.is_zero():
            total = total + partial_trace(wheel)
        out.append(Residual(n, "q-equation", total))
    return out


def passes(residuals: Iterable[Residual]) -> bool:
    return all(r.is_zero() for r in residuals)


# -- conversion between the antisymmetric and the shifted symmetric picture ----


def _shift_sign(space: GradedSpace, key: Sequence[int]) -> int:
    """Sign of applying the n-fold suspension factorwise to a basis tuple."""
    n = len(key)
    exp = sum((n - 1 - i) * space.degree(k) for i, k in enumerate(key))
    return -1 if exp % 2 else 1


def shift_family(m: MultiMap, shifted: GradedSpace) -> MultiMap:
    """Convert an antisymmetric map on ``V`` into the symmetric picture on ``V[1]``.

    Input arity n with degree 2-n (space-valued) or -n (scalar-valued) maps
    to degree +1 resp. 0.
    """
    if m.symmetry != "antisym":
        raise ValidationError("shift_family expects antisymmetric storage")
    new_degree = 1 if m.target == "space" else 0
    out = MultiMap(shifted, m.arity, m.target, new_degree, "sym", {})
    for key, val in m.coeffs.items():
        sign = _shift_sign(shifted, key)
        if m.target == "space":
            out.coeffs[key] = {o: sign * c for o, c in val.items()}
        else:
            out.coeffs[key] = sign * val
    out.prune()
    out.validate_degrees()
    return out


def unshift_family(m: MultiMap, space: GradedSpace) -> MultiMap:
    """Inverse of :func:`shift_family`; exact round trip on coefficients."""
    if m.symmetry != "sym":
        raise ValidationError("unshift_family expects symmetric storage")
    n = m.arity
    new_degree = (2 - n) if m.target == "space" else -n
    comp = -1 if (n * (n - 1) // 2) % 2 else 1
    out = MultiMap(space, n, m.target, new_degree, "antisym", {})
    for key, val in m.coeffs.items():
        exp = sum((n - 1 - i) * space.degree(k) for i, k in enumerate(key))
        sign = comp * (-1 if exp % 2 else 1)
        if m.target == "space":
            out.coeffs[key] = {o: sign * c for o, c in val.items()}
        else:
            out.coeffs[key] = sign * val
    out.prune()
    out.validate_degrees()
    return out


def structure_from_unshifted(
    space: GradedSpace,
    d_entries: Iterable[tuple] = (),
    ell_entries: Mapping[int, Iterable[tuple]] = None,
    q_entries: Mapping[int, Iterable[tuple]] = None,
) -> ULinfStructure:
    """Build a structure from classical antisymmetric tables on ``V``.

    ``d_entries`` are ``(name_in, name_out, coeff)``; ``ell_entries[n]`` and
    ``q_entries[n]`` are entry triples as in :meth:`MultiMap.build` with
    degrees ``2-n`` resp. ``-n``.
    """
    shifted, shift = shift_structure(space)
    d_v = MultiMap.build(
        space, 1, "space", 1,
        [((src,), dst, c) for src, dst, c in d_entries],
        symmetry="antisym",
    )
    d_w = shift_family(d_v, shifted)
    ell: dict[int, MultiMap] = {}
    for n, entries in (ell_entries or {}).items():
        m = MultiMap.build(space, n, "space", 2 - n, entries, symmetry="antisym")
        if not m.is_zero():
            ell[n] = shift_family(m, shifted)
    q: dict[int, MultiMap] = {}
    for n, entries in (q_entries or {}).items():
        m = MultiMap.build(space, n, "scalar", -n, entries, symmetry="antisym")
        if not m.is_zero():
            q[n] = shift_family(m, shifted)
    return ULinfStructure(LinfStructure(space, shifted, shift, d_w, ell), q)


def structure_from_shifted(
    shifted: GradedSpace,
    d_entries: Iterable[tuple] = (),
    ell_entries: Mapping[int, Iterable[tuple]] = None,
    q_entries: Mapping[int, Iterable[tuple]] = None,
    space: Optional[GradedSpace] = None,
) -> ULinfStructure:
    """Build a structure directly from symmetric tables on ``W = V[1]``."""
    if space is None:
        space = GradedSpace(tuple((name, deg + 1) for name, deg in shifted.basis))
    shift = ShiftMap(space, shifted)
    d_w = MultiMap.build(
        shifted, 1, "space", 1,
        [((src,), dst, c) for src, dst, c in d_entries],
        symmetry="sym",
    )
    ell: dict[int, MultiMap] = {}
    for n, entries in (ell_entries or {}).items():
        m = MultiMap.build(shifted, n, "space", 1, entries, symmetry="sym")
        if not m.is_zero():
            ell[n] = m
    q: dict[int, MultiMap] = {}
    for n, entries in (q_entries or {}).items():
        m = MultiMap.build(shifted, n, "scalar", 0, entries, symmetry="sym")
        if not m.is_zero():
            q[n] = m
    return ULinfStructure(LinfStructure(space, shifted, shift, d_w, ell), q)


# -- classical Lie algebra input ------------------------------------------------


def _validate_brackets(names: Sequence[str], brackets: Brackets) -> dict:
    table: dict[tuple[str, str], dict[str, Fraction]] = {}
    nameset = set(names)
    for (a, b), row in brackets.items():
        if a not in nameset or b not in nameset:
            raise ValidationError("unknown basis name in bracket (%r, %r)" % (a, b))
        row = {c: Fraction(v) for c, v in row.items() if Fraction(v) != 0}
        for c in row:
            if c not in nameset:
                raise ValidationError("unknown output name %r" % (c,))
        table[(a, b)] = row
    for (a, b), row in table.items():
        if a == b:
            if row:
                raise ValidationError("bracket [%s,%s] must vanish" % (a, a))
            continue
        if (b, a) not in table:
            continue
        mirrored = table[(b, a)]
        keys = set(row) | set(mirrored)
        for c in keys:
            if row.get(c, Fraction(0)) != -mirrored.get(c, Fraction(0)):
                raise ValidationError(
                    "antisymmetry violated on [%s,%s] at output %s" % (a, b, c)
                )
    return table


def from_lie(names: Sequence[str], brackets: Brackets) -> LinfStructure:
    """Strict Lie algebra (all degrees zero) as an L-infinity structure.

    ``brackets[(a, b)]`` maps output names to the structure constants of
    ``[a, b]``; either orientation may be given, antisymmetry is validated.
    """
    table = _validate_brackets(names, brackets)
    space = GradedSpace.from_pairs((n, 0) for n in names)
    entries = []
    seen = set()
    for (a, b), row in table.items():
        if (b, a) in seen:
            continue
        seen.add((a, b))
        for c, v in row.items():
            entries.append(((a, b), c, v))
    return structure_from_unshifted(space, ell_entries={2: entries}).base


def is_unimodular_lie(names: Sequence[str], brackets: Brackets):
    """Check tr(ad x) = 0 on the basis; returns (ok, witness).

    The witness is ``(name, index, trace)`` with a 1-based index, or None.
    """
    table = _validate_brackets(names, brackets)
    for pos, a in enumerate(names):
        trace = Fraction(0)
        for b in names:
            row = table.get((a, b))
            if row is not None:
                trace += row.get(b, Fraction(0))
            else:
                mirrored = table.get((b, a), {})
                trace -= mirrored.get(b, Fraction(0))
        if trace != 0:
            return False, (a, pos + 1, trace)
    return True, None
