"""Enumeration of the decorated graph classes driving homotopy transfer.

Three classes of leaf-labeled graphs occur: rooted trees (every internal
vertex has at least two inputs), q-trees (the root vertex may have a single
input) and wheeled trees (a directed cycle of vertices, each carrying
pendant rooted inputs, obtained by closing the root of a rooted tree onto
one of its leaves).  All are kept in a canonical form -- children sorted by
minimal leaf, wheels rotated to the lexicographically smallest cycle -- so
that isomorphism classes compare by equality.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .grading import ValidationError


@dataclass(frozen=True)
class Leaf:
    label: int

    def leaves(self) -> tuple[int, ...]:
        return (self.label,)

    def min_leaf(self) -> int:
        return self.label


@dataclass(frozen=True)
class Node:
    children: tuple

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValidationError("internal vertices need at least two inputs")
        object.__setattr__(
            self, "children", tuple(sorted(self.children, key=lambda c: c.min_leaf()))
        )

    def leaves(self) -> tuple[int, ...]:
        out = []
        for c in self.children:
            out.extend(c.leaves())
        return tuple(sorted(out))

    def min_leaf(self) -> int:
        return min(c.min_leaf() for c in self.children)


Tree = Leaf | Node


@dataclass(frozen=True)
class QTree:
    """Tree without root output; the root vertex may have arity one."""

    children: tuple

    def __post_init__(self):
        if len(self.children) < 1:
            raise ValidationError("q-tree root needs at least one input")
        object.__setattr__(
            self, "children", tuple(sorted(self.children, key=lambda c: c.min_leaf()))
        )

    def leaves(self) -> tuple[int, ...]:
        out = []
        for c in self.children:
            out.extend(c.leaves())
        return tuple(sorted(out))


@dataclass(frozen=True)
class WheeledTree:
    """Directed cycle of vertices, each with a tuple of pendant inputs.

    ``cycle[i]`` holds the pendant children of the i-th cycle vertex; the
    cycle edge runs from vertex i into vertex i+1 (indices mod length).
    Stored rotated to the lexicographically smallest serialization.
    """

    cycle: tuple

    def __post_init__(self):
        if not self.cycle:
            raise ValidationError("wheel needs at least one cycle vertex")
        rotations = [
            tuple(self.cycle[(i + k) % len(self.cycle)] for i in range(len(self.cycle)))
            for k in range(len(self.cycle))
        ]
        best = min(rotations, key=_serialize_cycle)
        object.__setattr__(self, "cycle", best)

    def leaves(self) -> tuple[int, ...]:
        out = []
        for pendants in self.cycle:
            for c in pendants:
                out.extend(c.leaves())
        return tuple(sorted(out))


def _serialize(t) -> tuple:
    if isinstance(t, Leaf):
        return (0, t.label)
    return (1, tuple(_serialize(c) for c in t.children))


def _serialize_cycle(cycle) -> tuple:
    return tuple(tuple(_serialize(c) for c in pendants) for pendants in cycle)


def _set_partitions(items: tuple, min_blocks: int) -> Iterator[list[tuple]]:
    """All partitions of ``items`` into at least ``min_blocks`` blocks."""
    if not items:
        if min_blocks <= 0:
            yield []
        return
    first, rest = items[0], items[1:]
    for sub in _set_partitions(rest, 0):
        if len(sub) + 1 >= min_blocks:
            yield [(first,)] + sub
        for i in range(len(sub)):
            cand = sub[:i] + [(first,) + sub[i]] + sub[i + 1 :]
            if len(cand) >= min_blocks:
                yield cand


def _block_options(block: tuple) -> list:
    if len(block) == 1:
        return [Leaf(block[0])]
    return _trees_on(block)


@lru_cache(maxsize=None)
def _trees_on(labels: tuple) -> list:
    """All rooted trees (internal arity >= 2) with the given sorted leaf labels."""
    if len(labels) < 2:
        raise ValidationError("a rooted tree needs at least two leaves")
    out = []
    for partition in _set_partitions(labels, 2):
        for combo in itertools.product(*[_block_options(b) for b in partition]):
            out.append(Node(tuple(combo)))
    return out


def enum_rooted(n: int) -> list[Node]:
    """All leaf-labeled rooted trees on {1..n}; counts 1, 4, 26, 236 for n = 2..5."""
    if n < 2:
        raise ValidationError("rooted trees need n >= 2")
    return list(_trees_on(tuple(range(1, n + 1))))


def enum_q(n: int) -> list[QTree]:
    """All q-trees on {1..n}: the root may be unary, lower vertices may not."""
    if n < 1:
        raise ValidationError("q-trees need n >= 1")
    out = []
    for partition in _set_partitions(tuple(range(1, n + 1)), 1):
        for combo in itertools.product(*[_block_options(b) for b in partition]):
            out.append(QTree(tuple(combo)))
    return out


def relabel(t, mapping: dict):
    if isinstance(t, Leaf):
        return Leaf(mapping[t.label])
    return Node(tuple(relabel(c, mapping) for c in t.children))


def close_tree(t: Node, leaf_label: int) -> WheeledTree:
    """Graft the root output of ``t`` onto the named leaf.

    Remaining leaves are relabeled order-preservingly to 1..n-1.  The cycle
    direction records that each vertex's output feeds the next one; the
    closing edge runs from the old root into the leaf's vertex.
    """
    labels = t.leaves()
    if leaf_label not in labels:
        raise ValidationError("no leaf %d to close onto" % leaf_label)
    keep = [l for l in labels if l != leaf_label]
    mapping = {old: i + 1 for i, old in enumerate(keep)}

    path: list[Node] = []

    def find(v) -> bool:
        # collect the vertices from the leaf's parent up to the root
        if isinstance(v, Leaf):
            return v.label == leaf_label
        for c in v.children:
            if find(c):
                path.append(v)
                return True
        return False

    if not find(t):  # pragma: no cover - guarded above
        raise ValidationError("leaf not found")
    # path[0] is the leaf's vertex, path[-1] the root; the cycle direction
    # follows the outputs: leaf vertex -> ... -> root -> leaf vertex.
    pend: list[tuple] = []
    for i, v in enumerate(path):
        drop = leaf_label if i == 0 else None
        prev = path[i - 1] if i > 0 else None
        pendants = []
        for c in v.children:
            if drop is not None and isinstance(c, Leaf) and c.label == drop:
                drop = None
                continue
            if prev is not None and c is prev:
                prev = None
                continue
            pendants.append(relabel(c, mapping))
        pendants.sort(key=lambda c: c.min_leaf())
        pend.append(tuple(pendants))
    return WheeledTree(tuple(pend))


def enum_wheeled(n: int) -> list[WheeledTree]:
    """All wheels with n external legs: close each leaf of each tree on n+1, dedup."""
    if n < 1:
        raise ValidationError("wheels need n >= 1 external legs")
    seen = {}
    for t in enum_rooted(n + 1):
        for leaf in range(1, n + 2):
            w = close_tree(t, leaf)
            seen.setdefault(_serialize_cycle(w.cycle), w)
    return [seen[k] for k in sorted(seen)]


def cut_wheel(w: WheeledTree) -> tuple[Node, int]:
    """Open the canonical cycle edge; return the cut tree and the new leaf label.

    The cut edge is the one from the last listed cycle vertex into the
    first; the freed input slot becomes a leaf labeled n+1 and the last
    vertex becomes the root.  Every vertex of the cut tree corresponds to a
    cycle or pendant vertex and keeps its inputs.
    """
    n = len(w.leaves())
    cut_label = n + 1
    current: Tree = Leaf(cut_label)
    for pendants in w.cycle:
        current = Node(pendants + (current,))
    return current, cut_label
