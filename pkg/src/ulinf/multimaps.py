"""Sparse graded multilinear maps with exact rational coefficients.

A :class:`MultiMap` is a map ``W^{tensor n} -> W`` or ``W^{tensor n} -> k``
stored sparsely on basis multi-indices.  Symmetric and antisymmetric maps
store one sorted representative per orbit and unfold Koszul (resp. Koszul
times permutation) signs on lookup; ``symmetry='none'`` stores ordered keys
verbatim (used for composites and for non-symmetric A-infinity data).

The partial trace contracts the last input slot against the output.  Its
sign convention carries a parity factor ``(-1)^{|basis element|}`` on the
contracted index; this choice is pinned by the cross-validation against the
divergence computation in :mod:`ulinf.formal_geom` (see the tests), the
alternative convention is available behind the ``parity_signs`` switch only
so the pinning test can demonstrate that it fails.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterable, Mapping, Sequence, Union

from .grading import (
    GradedSpace,
    Unshuffle,
    ValidationError,
    block_koszul_sign,
    sort_with_sign,
)

Coeff = Union[int, Fraction]
VectorLike = Union[str, int, Mapping]

# Pinned: the trace of a map contracts its last input against the output
# with a factor (-1)^{degree of the contracted basis element}.
TRACE_PARITY_SIGNS = True


def _frac(c: Coeff) -> Fraction:
    return c if isinstance(c, Fraction) else Fraction(c)


def canonical_key(
    indices: Sequence[int], degrees: Sequence[int], symmetry: str
) -> tuple[tuple[int, ...], int]:
    """Canonical storage key for a multi-index plus the sign of getting there.

    Returns ``(key, 0)`` when the coefficient is forced to vanish (repeated
    odd index for symmetric maps, repeated even index for antisymmetric).
    """
    if symmetry == "none":
        return tuple(indices), 1
    sgn = symmetry == "antisym"
    key, sign = sort_with_sign(indices, degrees, sgn=sgn)
    for a, b in zip(key, key[1:]):
        if a == b:
            parity = degrees[list(indices).index(a)] % 2
            if symmetry == "sym" and parity == 1:
                return key, 0
            if symmetry == "antisym" and parity == 0:
                return key, 0
    return key, sign


@dataclass
class MultiMap:
    """Sparse graded multilinear map on a :class:`GradedSpace`.

    ``coeffs`` maps an input key to either ``{output index: coefficient}``
    (``target='space'``) or a plain coefficient (``target='scalar'``).
    """

    space: GradedSpace
    arity: int
    target: str  # 'space' | 'scalar'
    degree: int
    symmetry: str = "sym"  # 'sym' | 'antisym' | 'none'
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.target not in ("space", "scalar"):
            raise ValidationError("target must be 'space' or 'scalar'")
        if self.symmetry not in ("sym", "antisym", "none"):
            raise ValidationError("symmetry must be 'sym', 'antisym' or 'none'")
        if self.arity < 0:
            raise ValidationError("arity must be >= 0")

    # -- construction -----------------------------------------------------

    @classmethod
    def zero(cls, space, arity, target, degree, symmetry="sym"):
        return cls(space, arity, target, degree, symmetry, {})

    @classmethod
    def build(
        cls,
        space: GradedSpace,
        arity: int,
        target: str,
        degree: int,
        entries: Iterable[tuple],
        symmetry: str = "sym",
    ) -> "MultiMap":
        """Build a map from ``(inputs, output, coeff)`` triples.

        Inputs are given in arbitrary order (basis names or indices); they
        are canonicalized with the appropriate signs.  ``output`` is ignored
        (may be ``None``) for scalar-valued maps.
        """
        m = cls(space, arity, target, degree, symmetry, {})
        for inputs, output, coeff in entries:
            idxs = tuple(
                space.index(i) if isinstance(i, str) else int(i) for i in inputs
            )
            if len(idxs) != arity:
                raise ValidationError("entry arity mismatch: %r" % (inputs,))
            out = None
            if target == "space":
                if output is None:
                    raise ValidationError("space-valued entry needs an output")
                out = space.index(output) if isinstance(output, str) else int(output)
            m.add_entry(idxs, out, _frac(coeff))
        m.prune()
        m.validate_degrees()
        return m

    def add_entry(self, idxs: tuple[int, ...], out, coeff: Fraction) -> None:
        degs = self.space.degrees(idxs)
        key, sign = canonical_key(idxs, degs, self.symmetry)
        if sign == 0 or coeff == 0:
            return
        if self.target == "space":
            slot = self.coeffs.setdefault(key, {})
            slot[out] = slot.get(out, Fraction(0)) + sign * coeff
        else:
            self.coeffs[key] = self.coeffs.get(key, Fraction(0)) + sign * coeff

    def prune(self) -> None:
        if self.target == "space":
            for key in list(self.coeffs):
                slot = {o: c for o, c in self.coeffs[key].items() if c != 0}
                if slot:
                    self.coeffs[key] = slot
                else:
                    del self.coeffs[key]
        else:
            for key in list(self.coeffs):
                if self.coeffs[key] == 0:
                    del self.coeffs[key]

    def validate_degrees(self) -> None:
        for key, val in self.coeffs.items():
            s = sum(self.space.degree(i) for i in key)
            if self.target == "space":
                for out in val:
                    if self.space.degree(out) != s + self.degree:
                        raise ValidationError(
                            "degree violation: %s -> %s with map degree %d"
                            % (self.key_names(key), self.space.name(out), self.degree)
                        )
            else:
                if s + self.degree != 0:
                    raise ValidationError(
                        "degree violation: scalar map nonzero on %s" % (self.key_names(key),)
                    )

    def key_names(self, key: Sequence[int]) -> tuple[str, ...]:
        return tuple(self.space.name(i) for i in key)

    # -- basic queries -----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.coeffs

    def copy(self) -> "MultiMap":
        co = (
            {k: dict(v) for k, v in self.coeffs.items()}
            if self.target == "space"
            else dict(self.coeffs)
        )
        return MultiMap(self.space, self.arity, self.target, self.degree, self.symmetry, co)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiMap):
            return NotImplemented
        return (
            self.space == other.space
            and self.arity == other.arity
            and self.target == other.target
            and self.symmetry == other.symmetry
            and self.coeffs == other.coeffs
        )

    def first_entry(self):
        """Deterministic first nonzero entry, as ((names...), out_name, value)."""
        for key in sorted(self.coeffs):
            if self.target == "space":
                for out in sorted(self.coeffs[key]):
                    return self.key_names(key), self.space.name(out), self.coeffs[key][out]
            else:
                return self.key_names(key), None, self.coeffs[key]
        return None

    def lookup_ordered(self, idxs: Sequence[int]):
        """Value on an ordered basis tuple: ``{out: coeff}`` or a Fraction."""
        if len(idxs) != self.arity:
            raise ValidationError("arity mismatch in lookup")
        degs = self.space.degrees(idxs)
        key, sign = canonical_key(idxs, degs, self.symmetry)
        empty = {} if self.target == "space" else Fraction(0)
        if sign == 0:
            return empty
        val = self.coeffs.get(key)
        if val is None:
            return empty
        if self.target == "space":
            return {o: sign * c for o, c in val.items()}
        return sign * val

    # -- linear structure ---------------------------------------------------

    def _check_shape(self, other: "MultiMap") -> None:
        if (
            self.space != other.space
            or self.arity != other.arity
            or self.target != other.target
            or self.degree != other.degree
            or self.symmetry != other.symmetry
        ):
            raise ValidationError("shape mismatch between maps")

    def __add__(self, other: "MultiMap") -> "MultiMap":
        self._check_shape(other)
        out = self.copy()
        for key, val in other.coeffs.items():
            if self.target == "space":
                slot = out.coeffs.setdefault(key, {})
                for o, c in val.items():
                    slot[o] = slot.get(o, Fraction(0)) + c
            else:
                out.coeffs[key] = out.coeffs.get(key, Fraction(0)) + val
        out.prune()
        return out

    def __sub__(self, other: "MultiMap") -> "MultiMap":
        return self + other.scale(-1)

    def scale(self, c: Coeff) -> "MultiMap":
        c = _frac(c)
        if c == 0:
            return MultiMap.zero(self.space, self.arity, self.target, self.degree, self.symmetry)
        out = self.copy()
        for key in out.coeffs:
            if self.target == "space":
                out.coeffs[key] = {o: c * v for o, v in out.coeffs[key].items()}
            else:
                out.coeffs[key] = c * out.coeffs[key]
        return out

    def __neg__(self) -> "MultiMap":
        return self.scale(-1)

    # -- evaluation ----------------------------------------------------------

    def _as_vector(self, arg: VectorLike) -> dict[int, Fraction]:
        if isinstance(arg, str):
            return {self.space.index(arg): Fraction(1)}
        if isinstance(arg, int):
            return {arg: Fraction(1)}
        out: dict[int, Fraction] = {}
        for k, v in arg.items():
            idx = self.space.index(k) if isinstance(k, str) else int(k)
            v = _frac(v)
            if v:
                out[idx] = out.get(idx, Fraction(0)) + v
        return out

    def eval(self, *args: VectorLike):
        """Evaluate on vectors (dicts name/index -> coeff) or basis elements.

        Returns a ``{index: coeff}`` vector for space-valued maps, a
        Fraction for scalar-valued ones.
        """
        if len(args) != self.arity:
            raise ValidationError(
                "expected %d arguments, got %d" % (self.arity, len(args))
            )
        vectors = [self._as_vector(a) for a in args]
        if self.target == "space":
            acc: dict[int, Fraction] = {}
        else:
            acc = Fraction(0)
        for combo in itertools.product(*[v.items() for v in vectors]):
            idxs = tuple(i for i, _ in combo)
            scalar = Fraction(1)
            for _, c in combo:
                scalar *= c
            val = self.lookup_ordered(idxs)
            if self.target == "space":
                for o, c in val.items():
                    acc[o] = acc.get(o, Fraction(0)) + scalar * c
            else:
                acc += scalar * val
        if self.target == "space":
            return {o: c for o, c in acc.items() if c != 0}
        return acc

    def eval_names(self, *args):
        """Like :meth:`eval` but returns a name-keyed vector."""
        val = self.eval(*args)
        if self.target == "space":
            return {self.space.name(o): c for o, c in val.items()}
        return val

    # -- conversions -----------------------------------------------------------

    def as_symmetric(self, check: bool = True) -> "MultiMap":
        """Reinterpret an ordered-storage map as graded symmetric.

        With ``check=True`` every stored ordered key is verified against the
        symmetric unfold; a mismatch raises ``ValidationError``.
        """
        if self.symmetry == "sym":
            return self.copy()
        if self.symmetry != "none":
            raise ValidationError("cannot symmetrize antisymmetric storage")
        out = MultiMap(self.space, self.arity, self.target, self.degree, "sym", {})
        for key, val in self.coeffs.items():
            degs = self.space.degrees(key)
            skey, sign = canonical_key(key, degs, "sym")
            if sign == 0:
                if check and _nonzero(val):
                    raise ValidationError(
                        "value on %s should vanish by symmetry" % (self.key_names(key),)
                    )
                continue
            if tuple(key) == skey:
                if self.target == "space":
                    out.coeffs[skey] = dict(val)
                else:
                    out.coeffs[skey] = val
        if check:
            for key, val in self.coeffs.items():
                expected = out.lookup_ordered(key)
                if self.target == "space":
                    got = dict(val)
                    if {o: c for o, c in expected.items() if c} != {o: c for o, c in got.items() if c}:
                        raise ValidationError(
                            "map is not symmetric at %s" % (self.key_names(key),)
                        )
                else:
                    if expected != val:
                        raise ValidationError(
                            "map is not symmetric at %s" % (self.key_names(key),)
                        )
        out.prune()
        return out


def _nonzero(val) -> bool:
    if isinstance(val, dict):
        return any(c != 0 for c in val.values())
    return val != 0


# -- composition ----------------------------------------------------------------


def insert(outer: MultiMap, inner: MultiMap, unshuffle: Unshuffle) -> MultiMap:
    """Composite feeding J-indexed inputs through ``inner`` into ``outer``'s last slot.

    Positions in ``unshuffle`` are 1-based; inputs indexed by I go to the
    first slots of ``outer`` in order.  All Koszul routing signs are
    included.  The result is stored with ordered keys (it is symmetric
    within the I and J blocks only).
    """
    if inner.target != "space":
        raise ValidationError("inner map must be space-valued")
    if outer.space != inner.space:
        raise ValidationError("maps must share a space")
    I = tuple(p - 1 for p in unshuffle.I)
    J = tuple(p - 1 for p in unshuffle.J)
    n = unshuffle.n
    if outer.arity != len(I) + 1 or inner.arity != len(J):
        raise ValidationError("arity mismatch in insert")
    space = outer.space
    result = MultiMap(
        space, n, outer.target, outer.degree + inner.degree, "none", {}
    )
    indices = list(space.indices())
    for t_j in itertools.product(indices, repeat=len(J)):
        inner_val = inner.lookup_ordered(t_j)
        if not inner_val:
            continue
        dj_prefactor = inner.degree
        for t_i in itertools.product(indices, repeat=len(I)):
            d_i = sum(space.degree(i) for i in t_i)
            sign_pass = -1 if (dj_prefactor * d_i) % 2 else 1
            key = [0] * n
            for pos, idx in zip(I, t_i):
                key[pos] = idx
            for pos, idx in zip(J, t_j):
                key[pos] = idx
            key = tuple(key)
            degs = space.degrees(key)
            route = block_koszul_sign(degs, [list(I), list(J)])
            for beta, c_in in inner_val.items():
                outer_val = outer.lookup_ordered(tuple(t_i) + (beta,))
                if not _nonzero(outer_val):
                    continue
                factor = route * sign_pass * c_in
                if outer.target == "space":
                    slot = result.coeffs.setdefault(key, {})
                    for out, c_out in outer_val.items():
                        slot[out] = slot.get(out, Fraction(0)) + factor * c_out
                else:
                    result.coeffs[key] = result.coeffs.get(key, Fraction(0)) + factor * outer_val
    result.prune()
    result.validate_degrees()
    return result


def _remove_one(key: tuple[int, ...], value: int) -> tuple[int, ...]:
    out = list(key)
    out.remove(value)
    return tuple(out)


def insertion_sum(outer: MultiMap, inner: MultiMap, n: int) -> MultiMap:
    """Sum of :func:`insert` over every unshuffle I | J of [n] with |J| = inner.arity.

    Both maps must be symmetric; the sum is again symmetric and is computed
    directly on sorted keys with multiset-split multiplicities.
    """
    if outer.symmetry != "sym" or inner.symmetry != "sym":
        raise ValidationError("insertion_sum needs symmetric maps")
    if inner.target != "space":
        raise ValidationError("inner map must be space-valued")
    if outer.arity + inner.arity != n + 1:
        raise ValidationError("arities do not fit the requested total")
    space = outer.space
    result = MultiMap(space, n, outer.target, outer.degree + inner.degree, "sym", {})
    for key_j, inner_out in inner.coeffs.items():
        d_j_list = space.degrees(key_j)
        for beta, c_in in inner_out.items():
            beta_deg = space.degree(beta)
            for key_o, outer_val in outer.coeffs.items():
                if beta not in key_o:
                    continue
                key_i = _remove_one(key_o, beta)
                # sign of moving beta from the last slot to its sorted place
                tail = sum(space.degree(i) for i in key_i if i > beta)
                sign_beta = -1 if (beta_deg * tail) % 2 else 1
                d_i = sum(space.degree(i) for i in key_i)
                sign_pass = -1 if (inner.degree * d_i) % 2 else 1
                flat = key_i + key_j
                degs = space.degrees(flat)
                full, route = sort_with_sign(flat, degs)
                if _has_repeated_odd(full, space):
                    continue
                mult = _split_multiplicity(full, key_j)
                factor = Fraction(mult) * route * sign_beta * sign_pass * c_in
                if outer.target == "space":
                    for out, c_out in outer_val.items():
                        slot = result.coeffs.setdefault(full, {})
                        slot[out] = slot.get(out, Fraction(0)) + factor * c_out
                else:
                    result.coeffs[full] = result.coeffs.get(full, Fraction(0)) + factor * outer_val
    result.prune()
    result.validate_degrees()
    return result


def _has_repeated_odd(key: tuple[int, ...], space: GradedSpace) -> bool:
    for a, b in zip(key, key[1:]):
        if a == b and space.degree(a) % 2:
            return True
    return False


def _split_multiplicity(full: tuple[int, ...], part: tuple[int, ...]) -> int:
    mult = 1
    for b in set(part):
        mult *= comb(full.count(b), part.count(b))
    return mult


# -- partial traces ---------------------------------------------------------------


def partial_trace(m: MultiMap, parity_signs: bool | None = None) -> MultiMap:
    """Contract the last input slot of a symmetric space-valued map with its output.

    Returns the scalar-valued symmetric map of arity ``m.arity - 1``.  The
    pinned sign convention multiplies the contracted index alpha by
    ``(-1)^{deg alpha}``; pass ``parity_signs=False`` only to demonstrate
    that the other convention breaks the divergence cross-check.
    """
    if m.target != "space":
        raise ValidationError("partial trace needs a space-valued map")
    if m.arity < 1:
        raise ValidationError("partial trace needs arity >= 1")
    if m.symmetry != "sym":
        raise ValidationError("partial trace is defined on symmetric storage")
    if parity_signs is None:
        parity_signs = TRACE_PARITY_SIGNS
    space = m.space
    result = MultiMap(space, m.arity - 1, "scalar", m.degree, "sym", {})
    seen: set[tuple[tuple[int, ...], int]] = set()
    for key, outs in m.coeffs.items():
        for alpha in outs:
            if alpha not in key:
                continue
            base = _remove_one(key, alpha)
            if (base, alpha) in seen:
                continue
            seen.add((base, alpha))
            val = m.lookup_ordered(base + (alpha,))
            c = val.get(alpha, Fraction(0))
            if c == 0:
                continue
            sign = -1 if (parity_signs and space.degree(alpha) % 2) else 1
            result.coeffs[base] = result.coeffs.get(base, Fraction(0)) + sign * c
    result.prune()
    result.validate_degrees()
    return result


def trace_slot(m: MultiMap, slot: int, parity_signs: bool | None = None) -> MultiMap:
    """Contract input ``slot`` (1-based) of an ordered map against its output.

    Defined by moving the slot to the last position with Koszul signs and
    contracting there with the pinned convention.
    """
    if m.target != "space":
        raise ValidationError("trace needs a space-valued map")
    if not 1 <= slot <= m.arity:
        raise ValidationError("slot out of range")
    if m.symmetry != "none":
        raise ValidationError("trace_slot works on ordered storage")
    if parity_signs is None:
        parity_signs = TRACE_PARITY_SIGNS
    space = m.space
    result = MultiMap(space, m.arity - 1, "scalar", m.degree, "none", {})
    s0 = slot - 1
    for key, outs in m.coeffs.items():
        alpha = key[s0]
        c = outs.get(alpha)
        if not c:
            continue
        rest = key[:s0] + key[s0 + 1 :]
        tail = sum(space.degree(i) for i in key[s0 + 1 :])
        exp = space.degree(alpha) * tail
        if parity_signs:
            exp += space.degree(alpha)
        sign = -1 if exp % 2 else 1
        result.coeffs[rest] = result.coeffs.get(rest, Fraction(0)) + sign * c
    result.prune()
    result.validate_degrees()
    return result
