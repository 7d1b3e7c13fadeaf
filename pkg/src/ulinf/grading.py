"""Graded vector spaces over the rationals and the sign calculus they carry.

Degrees are plain integers, scalars are ``fractions.Fraction``; all signs are
computed exactly.  Two sign rules coexist and are never inferred: the plain
Koszul rule (for graded *symmetric* data) and Koszul times the permutation
sign (for graded *antisymmetric* data).  Callers always pick explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

MAX_ABS_DEGREE = 10**6


class ValidationError(ValueError):
    """Malformed input data: bad partition, unknown basis name, shape clash."""


@dataclass(frozen=True)
class GradedSpace:
    """Finite dimensional Z-graded vector space with a named basis.

    ``basis`` is an ordered tuple of ``(name, degree)`` pairs; names must be
    unique.  The zero-dimensional space (empty basis) is allowed.
    """

    basis: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [name for name, _ in self.basis]
        if len(set(names)) != len(names):
            raise ValidationError("basis names must be unique: %r" % (names,))
        for name, deg in self.basis:
            if not isinstance(deg, int) or abs(deg) > MAX_ABS_DEGREE:
                raise ValidationError("bad degree %r for basis name %r" % (deg, name))
        object.__setattr__(self, "_index", {name: i for i, (name, _) in enumerate(self.basis)})
        object.__setattr__(self, "_degrees", tuple(deg for _, deg in self.basis))

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[str, int]]) -> "GradedSpace":
        return GradedSpace(tuple((str(n), int(d)) for n, d in pairs))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.basis)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ValidationError("unknown basis name %r" % (name,)) from None

    def name(self, idx: int) -> str:
        return self.basis[idx][0]

    def degree(self, idx: int) -> int:
        return self._degrees[idx]

    def degree_of(self, name: str) -> int:
        return self._degrees[self.index(name)]

    def degrees(self, idxs: Sequence[int]) -> tuple[int, ...]:
        return tuple(self._degrees[i] for i in idxs)

    def indices(self) -> range:
        return range(len(self.basis))


@dataclass(frozen=True)
class ShiftMap:
    """The canonical degree-bookkeeping bijection between a space and its shift.

    ``target`` has the same basis names (prefixed) with every degree lowered
    by one; the map identifies them index by index.
    """

    source: GradedSpace
    target: GradedSpace

    def __post_init__(self):
        if self.source.dim != self.target.dim:
            raise ValidationError("shift must be a bijection of bases")
        for i in range(self.source.dim):
            if self.target.degree(i) != self.source.degree(i) - 1:
                raise ValidationError(
                    "shift degree mismatch at %r" % (self.source.name(i),)
                )


def shift_structure(space: GradedSpace, prefix: str = "x_") -> tuple[GradedSpace, ShiftMap]:
    """Return the shifted space (all degrees lowered by one) and its ShiftMap."""
    shifted = GradedSpace(tuple((prefix + name, deg - 1) for name, deg in space.basis))
    return shifted, ShiftMap(space, shifted)


@dataclass(frozen=True)
class Unshuffle:
    """An ordered partition I | J of {1, ..., n} into two increasing blocks."""

    I: tuple[int, ...]
    J: tuple[int, ...]
    n: int

    def __post_init__(self):
        merged = sorted(self.I + self.J)
        if merged != list(range(1, self.n + 1)):
            raise ValidationError("I, J must partition {1..n}: %r | %r" % (self.I, self.J))
        if list(self.I) != sorted(self.I) or list(self.J) != sorted(self.J):
            raise ValidationError("I and J must be strictly increasing")


def unshuffle_sign(u: Unshuffle) -> int:
    """Sign of the block permutation placing the values of I, then J, in order.

    Equals the parity of the number of pairs (i, j) in I x J with i > j.
    """
    inversions = sum(1 for i in u.I for j in u.J if i > j)
    return -1 if inversions % 2 else 1


def multi_unshuffle_sign(blocks: Sequence[Sequence[int]]) -> int:
    """Sign of the permutation listing several increasing blocks in order."""
    inversions = 0
    for a in range(len(blocks)):
        for b in range(a + 1, len(blocks)):
            inversions += sum(1 for i in blocks[a] for j in blocks[b] if i > j)
    return -1 if inversions % 2 else 1


def koszul_sign(perm: Sequence[int], degrees: Sequence[int], sgn: bool = False) -> int:
    """Sign acquired when reordering homogeneous elements by ``perm``.

    ``perm[i]`` is the original position of the element placed at position
    ``i``; ``degrees[k]`` is the degree of the element originally at ``k``.
    With ``sgn=True`` the permutation sign is included on top of the Koszul
    factors (the antisymmetric convention).
    """
    if len(perm) != len(degrees):
        raise ValidationError("permutation/degree length mismatch")
    if sorted(perm) != list(range(len(perm))):
        raise ValidationError("not a permutation of 0..n-1: %r" % (perm,))
    exponent = 0
    inversions = 0
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                inversions += 1
                exponent += degrees[perm[i]] * degrees[perm[j]]
    if sgn:
        exponent += inversions
    return -1 if exponent % 2 else 1


def sort_with_sign(indices: Sequence[int], degrees: Sequence[int], sgn: bool = False) -> tuple[tuple[int, ...], int]:
    """Stable-sort ``indices`` ascending; return them with the sign of the sort.

    ``degrees[k]`` is the degree of the element at position ``k`` of the
    input.  Stability means equal indices are never moved past each other,
    so repeated labels pick up no spurious sign.
    """
    order = sorted(range(len(indices)), key=lambda k: (indices[k], k))
    sign = koszul_sign(order, degrees, sgn=sgn)
    return tuple(indices[k] for k in order), sign


def block_koszul_sign(degrees: Sequence[int], blocks: Sequence[Sequence[int]]) -> int:
    """Koszul sign routing arguments (in position order) into ordered blocks.

    ``blocks`` are disjoint increasing 0-based position lists covering
    ``range(len(degrees))``; the sign is that of the permutation that lists
    block 0, then block 1, etc., applied to elements of the given degrees.
    """
    flat = [p for block in blocks for p in block]
    if sorted(flat) != list(range(len(degrees))):
        raise ValidationError("blocks must partition the positions")
    return koszul_sign(flat, degrees, sgn=False)
