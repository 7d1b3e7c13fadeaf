"""Homotopy transfer of unimodular structures along a retract.

The transferred brackets sum the rooted-tree maps (root decorated by a
bracket, inner vertices by homotopy-then-bracket) conjugated by the retract
maps; the scalar operations sum the q-trees and the wheels.  A wheel is
evaluated by cutting its canonical cycle edge, evaluating the resulting
tree with the homotopy on every vertex, and contracting the cut slot with
the pinned trace convention.  Wheels are summed one isomorphism class each;
the alternative weightings (by cycle length, or by number of closures) are
selectable only so the tests can show they violate the transferred
structure equations.

All subtree values are memoized per evaluation context; every vertex map
below the root has total degree zero, so the only Koszul signs are the
block-routing signs of the leaf partition, computed on basis degrees.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .grading import GradedSpace, ValidationError, block_koszul_sign
from .multimaps import MultiMap
from .structures import (
    LinfStructure,
    Residual,
    ULinfStructure,
    linf_residuals,
    structure_from_shifted,
    ulinf_residuals,
)
from .trees import (
    Leaf,
    Node,
    QTree,
    WheeledTree,
    close_tree,
    cut_wheel,
    enum_q,
    enum_rooted,
    enum_wheeled,
)

WHEEL_WEIGHTING = "class"  # pinned; 'marked-edge' and 'closure-pairs' fail


@dataclass
class LinearMap:
    """Sparse degree-homogeneous linear map between graded spaces."""

    source: GradedSpace
    target: GradedSpace
    degree: int
    entries: dict = field(default_factory=dict)  # src idx -> {dst idx: coeff}

    @classmethod
    def build(cls, source, target, degree, triples: Iterable[tuple]) -> "LinearMap":
        m = cls(source, target, degree, {})
        for src, dst, coeff in triples:
            si = source.index(src) if isinstance(src, str) else int(src)
            di = target.index(dst) if isinstance(dst, str) else int(dst)
            coeff = Fraction(coeff)
            if coeff == 0:
                continue
            if target.degree(di) != source.degree(si) + degree:
                raise ValidationError(
                    "linear map degree violation at %s -> %s"
                    % (source.name(si), target.name(di))
                )
            slot = m.entries.setdefault(si, {})
            slot[di] = slot.get(di, Fraction(0)) + coeff
        m.prune()
        return m

    @classmethod
    def identity(cls, space: GradedSpace) -> "LinearMap":
        return cls(space, space, 0, {i: {i: Fraction(1)} for i in space.indices()})

    def prune(self) -> None:
        for s in list(self.entries):
            row = {d: c for d, c in self.entries[s].items() if c != 0}
            if row:
                self.entries[s] = row
            else:
                del self.entries[s]

    def is_zero(self) -> bool:
        return not self.entries

    def apply(self, vec: dict) -> dict:
        out: dict[int, Fraction] = {}
        for s, c in vec.items():
            for d, m in self.entries.get(s, {}).items():
                out[d] = out.get(d, Fraction(0)) + c * m
        return {d: c for d, c in out.items() if c != 0}

    def apply_basis(self, idx: int) -> dict:
        return dict(self.entries.get(idx, {}))

    def compose(self, other: "LinearMap") -> "LinearMap":
        """self after other."""
        if other.target != self.source:
            raise ValidationError("composition shape mismatch")
        out = LinearMap(other.source, self.target, self.degree + other.degree, {})
        for s in other.entries:
            row = self.apply(other.entries[s])
            if row:
                out.entries[s] = row
        return out

    def __add__(self, other: "LinearMap") -> "LinearMap":
        if (self.source, self.target, self.degree) != (
            other.source,
            other.target,
            other.degree,
        ):
            raise ValidationError("linear map shape mismatch")
        out = LinearMap(self.source, self.target, self.degree, {})
        for m in (self, other):
            for s, row in m.entries.items():
                slot = out.entries.setdefault(s, {})
                for d, c in row.items():
                    slot[d] = slot.get(d, Fraction(0)) + c
        out.prune()
        return out

    def scale(self, c) -> "LinearMap":
        c = Fraction(c)
        out = LinearMap(self.source, self.target, self.degree, {})
        if c != 0:
            out.entries = {
                s: {d: c * v for d, v in row.items()} for s, row in self.entries.items()
            }
        return out

    def __sub__(self, other: "LinearMap") -> "LinearMap":
        return self + other.scale(-1)

    def first_entry(self):
        for s in sorted(self.entries):
            for d in sorted(self.entries[s]):
                return self.source.name(s), self.target.name(d), self.entries[s][d]
        return None


def differential_as_linear(d: MultiMap) -> LinearMap:
    out = LinearMap(d.space, d.space, d.degree, {})
    for key, outs in d.coeffs.items():
        out.entries[key[0]] = dict(outs)
    return out


@dataclass
class RetractData:
    """Retract diagram between shifted spaces, with both differentials.

    ``proj`` maps the big space onto the small one, ``incl`` the other way,
    ``homotopy`` is the degree -1 map on the big space witnessing that
    incl . proj is homotopic to the identity.
    """

    big: GradedSpace            # V, unshifted
    small: GradedSpace          # U, unshifted
    big_shifted: GradedSpace
    small_shifted: GradedSpace
    d_big: MultiMap
    d_small: MultiMap
    incl: LinearMap             # small_shifted -> big_shifted, degree 0
    proj: LinearMap             # big_shifted -> small_shifted, degree 0
    homotopy: LinearMap         # big_shifted -> big_shifted, degree -1

    def violations(self) -> list[str]:
        """Exact failures of the retract identities, with entry witnesses."""
        out = []
        if self.incl.degree != 0 or self.proj.degree != 0:
            out.append("incl/proj must have degree 0")
        if self.homotopy.degree != -1:
            out.append("homotopy must have degree -1")
        dv = differential_as_linear(self.d_big)
        du = differential_as_linear(self.d_small)
        chain_f = dv.compose(self.incl) - self.incl.compose(du)
        if not chain_f.is_zero():
            out.append("incl is not a chain map; first entry %r" % (chain_f.first_entry(),))
        chain_g = du.compose(self.proj) - self.proj.compose(dv)
        if not chain_g.is_zero():
            out.append("proj is not a chain map; first entry %r" % (chain_g.first_entry(),))
        lhs = self.incl.compose(self.proj) - LinearMap.identity(self.big_shifted)
        rhs = dv.compose(self.homotopy) + self.homotopy.compose(dv)
        diff = lhs - rhs
        if not diff.is_zero():
            out.append(
                "homotopy identity fails; first entry %r" % (diff.first_entry(),)
            )
        return out

    def validate(self) -> None:
        bad = self.violations()
        if bad:
            raise ValidationError("; ".join(bad))


class _TreeEvaluator:
    """Evaluates decorated trees on basis assignments, memoized."""

    def __init__(self, structure: ULinfStructure, homotopy: LinearMap):
        self.s = structure
        self.space = structure.base.shifted
        self.h = homotopy
        self.memo: dict = {}

    def _blocks(self, children, labels):
        pos = {l: i for i, l in enumerate(labels)}
        return [[pos[l] for l in c.leaves()] for c in children]

    def _vertex(self, children, assign: dict) -> list:
        """Routing sign and child value vectors at one vertex."""
        labels = sorted(assign)
        degs = [self.space.degree(assign[l]) for l in labels]
        sign = block_koszul_sign(degs, self._blocks(children, labels))
        vecs = [
            self.subtree(c, {l: assign[l] for l in c.leaves()}) for c in children
        ]
        return sign, vecs

    def subtree(self, tree, assign: dict) -> dict:
        """Value of a non-root subtree: homotopy applied after its top bracket."""
        if isinstance(tree, Leaf):
            return {assign[tree.label]: Fraction(1)}
        key = (tree, tuple(sorted(assign.items())))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        sign, vecs = self._vertex(tree.children, assign)
        bracket = self.s.base.ell_tilde(len(tree.children))
        val = bracket.eval(*vecs) if not bracket.is_zero() else {}
        if sign < 0:
            val = {k: -c for k, c in val.items()}
        val = self.h.apply(val)
        self.memo[key] = val
        return val

    def rooted(self, tree: Node, assign: dict) -> dict:
        """Root decorated by the bare bracket, inner vertices by h after bracket."""
        sign, vecs = self._vertex(tree.children, assign)
        bracket = self.s.base.ell_tilde(len(tree.children))
        val = bracket.eval(*vecs) if not bracket.is_zero() else {}
        return {k: sign * c for k, c in val.items()}

    def qtree(self, tree: QTree, assign: dict) -> Fraction:
        sign, vecs = self._vertex(tree.children, assign)
        q = self.s.q_tilde(len(tree.children))
        if q.is_zero():
            return Fraction(0)
        return sign * q.eval(*vecs)

    def wheel(self, w: WheeledTree, assign: dict) -> Fraction:
        cut, cut_label = cut_wheel(w)
        total = Fraction(0)
        for alpha in self.space.indices():
            ext = dict(assign)
            ext[cut_label] = alpha
            val = self.subtree(cut, ext)
            c = val.get(alpha, Fraction(0))
            if c == 0:
                continue
            sign = -1 if self.space.degree(alpha) % 2 else 1
            total += sign * c
        return total


def _expansions(incl: LinearMap, c_tuple):
    """All big-space basis tuples under the inclusion with their coefficients."""
    rows = [list(incl.apply_basis(i).items()) for i in c_tuple]
    for combo in itertools.product(*rows):
        coeff = Fraction(1)
        for _, c in combo:
            coeff *= c
        yield tuple(i for i, _ in combo), coeff


def _wheel_weights(n: int, mode: str) -> dict:
    if mode == "class":
        return {w: 1 for w in enum_wheeled(n)}
    if mode == "marked-edge":
        return {w: len(w.cycle) for w in enum_wheeled(n)}
    if mode == "closure-pairs":
        out: dict = {}
        for t in enum_rooted(n + 1):
            for leaf in range(1, n + 2):
                w = close_tree(t, leaf)
                out[w] = out.get(w, 0) + 1
        return out
    raise ValidationError("unknown wheel weighting %r" % (mode,))


def eval_tree(graph, S: ULinfStructure, r: RetractData) -> MultiMap:
    """Contribution of a single graph to the transferred structure.

    Rooted trees produce a space-valued map (projected and included through
    the retract), q-trees and wheels scalar-valued ones.  The result is
    stored with ordered keys; only the sum over a whole graph class is
    symmetric.
    """
    if S.base.shifted != r.big_shifted:
        raise ValidationError("structure does not live on the retract's big space")
    ev = _TreeEvaluator(S, r.homotopy)
    n = len(graph.leaves())
    wu = r.small_shifted
    if isinstance(graph, Node):
        result = MultiMap(wu, n, "space", 1, "none", {})
    elif isinstance(graph, (QTree, WheeledTree)):
        result = MultiMap(wu, n, "scalar", 0, "none", {})
    else:
        raise ValidationError("unsupported graph type %r" % (type(graph),))
    for key in itertools.product(wu.indices(), repeat=n):
        if isinstance(graph, Node):
            acc: dict[int, Fraction] = {}
        else:
            acc = Fraction(0)
        for big_key, coeff in _expansions(r.incl, key):
            assign = {l + 1: big_key[l] for l in range(n)}
            if isinstance(graph, Node):
                vec = ev.rooted(graph, assign)
                for i, c in vec.items():
                    acc[i] = acc.get(i, Fraction(0)) + coeff * c
            elif isinstance(graph, QTree):
                acc += coeff * ev.qtree(graph, assign)
            else:
                acc += coeff * ev.wheel(graph, assign)
        if isinstance(graph, Node):
            out_vec = r.proj.apply(acc)
            if out_vec:
                result.coeffs[key] = out_vec
        else:
            if acc != 0:
                result.coeffs[key] = acc
    result.prune()
    result.validate_degrees()
    return result


@dataclass
class TransferResult:
    structure: ULinfStructure
    ell_residuals: list[Residual]
    q_residuals: list[Residual]

    @property
    def verified(self) -> bool:
        return all(r.is_zero() for r in self.ell_residuals + self.q_residuals)


def transfer(
    S: ULinfStructure,
    r: RetractData,
    up_to: int,
    wheel_weighting: Optional[str] = None,
) -> TransferResult:
    """Transferred unimodular structure on the small space, with verification.

    Requires the retract identities exactly and the input structure to pass
    its own checks up to ``up_to + 1``.  The returned residuals re-check the
    output up to ``up_to``; their vanishing is the executable content of the
    transfer theorem.
    """
    wheel_weighting = wheel_weighting or WHEEL_WEIGHTING
    if up_to < 1:
        raise ValidationError("up_to must be >= 1")
    r.validate()
    if S.base.shifted != r.big_shifted:
        raise ValidationError("structure does not live on the retract's big space")
    if S.base.d != r.d_big:
        raise ValidationError("structure differential differs from the retract's")
    if not all(x.is_zero() for x in linf_residuals(S.base, up_to + 1)):
        raise ValidationError("input structure fails its bracket equations")
    if not all(x.is_zero() for x in ulinf_residuals(S, up_to + 1)):
        raise ValidationError("input structure fails its unimodularity equations")

    ev = _TreeEvaluator(S, r.homotopy)
    wu = r.small_shifted
    ell_entries: dict[int, list] = {}
    q_entries: dict[int, list] = {}

    for n in range(2, up_to + 1):
        trees = enum_rooted(n)
        entries = []
        for key in itertools.combinations_with_replacement(wu.indices(), n):
            if any(
                a == b and wu.degree(a) % 2
                for a, b in zip(key, key[1:])
            ):
                continue
            acc: dict[int, Fraction] = {}
            for big_key, coeff in _expansions(r.incl, key):
                assign = {l + 1: big_key[l] for l in range(n)}
                for t in trees:
                    vec = ev.rooted(t, assign)
                    for i, c in vec.items():
                        acc[i] = acc.get(i, Fraction(0)) + coeff * c
            out_vec = r.proj.apply(acc)
            for i, c in out_vec.items():
                entries.append((key, i, c))
        if entries:
            ell_entries[n] = entries

    for n in range(1, up_to + 1):
        graphs: list = list(enum_q(n))
        weights = [1] * len(graphs)
        for w, mult in _wheel_weights(n, wheel_weighting).items():
            graphs.append(w)
            weights.append(mult)
        entries = []
        for key in itertools.combinations_with_replacement(wu.indices(), n):
            if any(
                a == b and wu.degree(a) % 2
                for a, b in zip(key, key[1:])
            ):
                continue
            acc = Fraction(0)
            for big_key, coeff in _expansions(r.incl, key):
                assign = {l + 1: big_key[l] for l in range(n)}
                for gph, mult in zip(graphs, weights):
                    if isinstance(gph, QTree):
                        acc += mult * coeff * ev.qtree(gph, assign)
                    else:
                        acc += mult * coeff * ev.wheel(gph, assign)
            if acc != 0:
                entries.append((key, None, acc))
        if entries:
            q_entries[n] = entries

    d_entries = [
        (key[0], out, c)
        for key, outs in r.d_small.coeffs.items()
        for out, c in outs.items()
    ]
    result = structure_from_shifted(
        wu,
        d_entries=[(wu.name(s), wu.name(d), c) for s, d, c in d_entries],
        ell_entries={
            n: [(tuple(wu.name(i) for i in key), wu.name(o), c) for key, o, c in ents]
            for n, ents in ell_entries.items()
        },
        q_entries={
            n: [(tuple(wu.name(i) for i in key), None, c) for key, _, c in ents]
            for n, ents in q_entries.items()
        },
        space=r.small,
    )
    return TransferResult(
        result,
        linf_residuals(result.base, up_to),
        ulinf_residuals(result, up_to),
    )
