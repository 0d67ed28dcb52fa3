"""Simple +-1 lattice paths and their bijections with decorated binary trees."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .trees import DecoratedBinaryTree, INTERNAL, pair_leaves, GROUND

MAX_ENUM_LENGTH = 20
CLASSES = ("walk", "bridge", "excursion", "meander")


@dataclass(frozen=True)
class LatticePath:
    steps: tuple[int, ...]

    def __post_init__(self):
        steps = tuple(int(s) for s in self.steps)
        if any(s not in (-1, 1) for s in steps):
            raise ValueError("steps must be +1 or -1")
        object.__setattr__(self, "steps", steps)

    def __len__(self):
        return len(self.steps)

    def __add__(self, other: "LatticePath") -> "LatticePath":
        return LatticePath(self.steps + other.steps)

    def __neg__(self) -> "LatticePath":
        return LatticePath(tuple(-s for s in self.steps))

    @property
    def heights(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.steps, dtype=np.int64)))

    def height_at(self, k: int) -> int:
        if not 0 <= k <= len(self.steps):
            raise IndexError(f"time {k} outside 0..{len(self.steps)}")
        return int(sum(self.steps[:k]))

    def is_bridge(self) -> bool:
        return sum(self.steps) == 0

    def is_excursion(self) -> bool:
        h = self.heights
        return len(self.steps) > 0 and h[-1] == 0 and bool(np.all(h[1:-1] > 0))

    def is_meander(self) -> bool:
        return bool(np.all(self.heights[1:] > 0))

    def classes(self) -> set[str]:
        out = {"walk"}
        if self.is_bridge():
            out.add("bridge")
        if self.is_excursion():
            out.add("excursion")
        if self.is_meander():
            out.add("meander")
        return out

    def classify(self) -> str:
        """Most specific class: excursion, then bridge, then meander, else walk."""
        for name in ("excursion", "bridge", "meander"):
            if name in self.classes():
                return name
        return "walk"

    def to_ud(self) -> str:
        return "".join("U" if s > 0 else "D" for s in self.steps)

    @classmethod
    def from_ud(cls, text: str) -> "LatticePath":
        table = {"U": 1, "D": -1}
        try:
            return cls(tuple(table[c] for c in text))
        except KeyError as err:
            raise ValueError(f"bad step character {err}") from None

    def to_json(self) -> str:
        return json.dumps(list(self.steps))

    @classmethod
    def from_json(cls, text: str) -> "LatticePath":
        return cls(tuple(json.loads(text)))


EMPTY = LatticePath(())


@dataclass(frozen=True)
class PathStats:
    L: int
    final_height: int
    heights: tuple[int, ...]

    def height_at(self, k: int) -> int:
        if not 0 <= k < len(self.heights):
            raise IndexError(f"time {k} outside 0..{len(self.heights) - 1}")
        return self.heights[k]


def path_stats(p: LatticePath) -> PathStats:
    """Origin visits ``L`` (time 0 included), final height and the height profile."""
    h = p.heights
    return PathStats(L=int(np.sum(h == 0)), final_height=int(h[-1]), heights=tuple(int(v) for v in h))


def origin_visits(p: LatticePath) -> int:
    return int(np.sum(p.heights == 0))


def negative_excursions(p: LatticePath) -> int:
    """Maximal excursions below zero."""
    h = p.heights
    return int(np.sum((h[:-1] == 0) & (h[1:] < 0)))


# -- trees to excursions ------------------------------------------------------------

def _excursion_steps(t: DecoratedBinaryTree, v: int) -> list[int]:
    out: list[int] = []
    stack: list = [v]
    while stack:
        u = stack.pop()
        if isinstance(u, tuple):
            out.append(-1)
            stack.append(u[1])
            continue
        if t.is_leaf(u):
            continue
        out.append(1)
        stack.append(("right", t.right[u]))
        stack.append(t.left[u])
    return out


def tree_to_excursion(t: DecoratedBinaryTree, v: int | None = None) -> LatticePath:
    """Excursion of length ``2n``: ``+1``, then the left-to-right depth-first walk of the tree, then ``-1``."""
    v = t.root if v is None else v
    return LatticePath(tuple([1] + _excursion_steps(t, v) + [-1]))


def excursion_node_times(t: DecoratedBinaryTree) -> dict[int, int]:
    """Time point of each node in :func:`tree_to_excursion` (node reached after that many steps)."""
    times: dict[int, int] = {}
    clock = 1
    stack: list = [t.root]
    while stack:
        u = stack.pop()
        if isinstance(u, tuple):
            clock += 1
            stack.append(u[1])
            continue
        times[u] = clock
        if t.is_leaf(u):
            continue
        clock += 1
        stack.append(("right", t.right[u]))
        stack.append(t.left[u])
    return times


def excursion_time_pairs(t: DecoratedBinaryTree) -> list[tuple[int, int]]:
    """Time pairs (leaf time, partner time); the leaf paired with the ground node gets time 0."""
    times = excursion_node_times(t)
    return [(times[leaf], 0 if partner == GROUND else times[partner])
            for leaf, partner in pair_leaves(t).items()]


def _build_from_steps(steps, pos: int, parent, left, right, label, leaf_labels):
    # a node is internal iff the next unread step is +1
    v = len(parent)
    parent.append(-1)
    left.append(-1)
    right.append(-1)
    label.append(INTERNAL)
    if pos < len(steps) and steps[pos] == 1:
        a, pos = _build_from_steps(steps, pos + 1, parent, left, right, label, leaf_labels)
        if pos >= len(steps) or steps[pos] != -1:
            raise ValueError("not an excursion encoding")
        b, pos = _build_from_steps(steps, pos + 1, parent, left, right, label, leaf_labels)
        left[v], right[v] = a, b
        parent[a] = parent[b] = v
    else:
        label[v] = next(leaf_labels)
    return v, pos


def excursion_to_tree(p: LatticePath) -> DecoratedBinaryTree:
    """Inverse of :func:`tree_to_excursion` on shapes; leaves get labels ``1..n`` left to right."""
    if not p.is_excursion():
        raise ValueError("path is not an excursion")
    inner = p.steps[1:-1]
    parent: list[int] = []
    left: list[int] = []
    right: list[int] = []
    label: list[int] = []
    counter = iter(range(1, len(p.steps)))
    root, pos = _build_from_steps(inner, 0, parent, left, right, label, counter)
    if pos != len(inner):
        raise ValueError("not an excursion encoding")
    return DecoratedBinaryTree(tuple(parent), tuple(left), tuple(right), tuple(label), root)


# -- bridges and meanders ----------------------------------------------------------------

def spine(t: DecoratedBinaryTree, spine_label: int = 1) -> list[int]:
    """Internal nodes on the path from the root down to the marked leaf."""
    return list(reversed(t.path_to_root(t.leaf_index(spine_label))[1:]))


def tree_to_bridge(t: DecoratedBinaryTree, spine_label: int = 1) -> LatticePath:
    """Bridge of length ``2n`` from a tree with ``n+1`` leaves.

    Walking the spine from the root, an off-spine subtree on the left becomes a
    positive excursion (explored counterclockwise) and one on the right a
    negative excursion (explored clockwise).
    """
    steps: list[int] = []
    leaf = t.leaf_index(spine_label)
    on_path = set(t.path_to_root(leaf))
    for v in spine(t, spine_label):
        if t.left[v] in on_path:
            sub = t.mirror().subtree(t.right[v])
            steps.extend(-s for s in tree_to_excursion(sub).steps)
        else:
            steps.extend(tree_to_excursion(t, t.left[v]).steps)
    return LatticePath(tuple(steps))


def bridge_to_meander(b: LatticePath) -> LatticePath:
    """Meander of length ``2n+1``: one up step, then ``|bridge|`` with the last step of every negative excursion flipped."""
    if not b.is_bridge():
        raise ValueError("path is not a bridge")
    h = b.heights
    out = [1]
    for i, s in enumerate(b.steps):
        below = h[i] < 0 or h[i + 1] < 0
        step = -s if below else s
        if below and h[i + 1] == 0:
            step = -step
        out.append(step)
    return LatticePath(tuple(out))


def meander_to_bridge(m: LatticePath) -> LatticePath:
    """Inverse of :func:`bridge_to_meander`.

    From a base level the next segment is a positive excursion if the meander
    comes back to that level; otherwise it is the image of a negative
    excursion, ending just after the last visit to ``base + 1``.
    """
    if len(m.steps) % 2 == 0 or not m.is_meander():
        raise ValueError("need a meander of odd length")
    h = m.heights
    steps = m.steps
    out: list[int] = []
    i = 1
    while i < len(h) - 1:
        base = h[i]
        later = np.flatnonzero(h[i + 1:] == base)
        if later.size:
            j = i + 1 + int(later[0])
            out.extend(steps[i:j])
        else:
            j = int(np.flatnonzero(h == base + 1).max()) + 1
            out.extend(-s for s in steps[i:j - 1])
            out.append(steps[j - 1])
        i = j
    return LatticePath(tuple(out))


def trees_to_walk(t1: DecoratedBinaryTree, t2: DecoratedBinaryTree, sign: int = 1,
                  spine_label: int = 1, meander_label: int = 0) -> LatticePath:
    """Walk of odd length: the bridge of ``t1`` followed by ``sign`` times the meander of ``t2``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    bridge = tree_to_bridge(t1, spine_label)
    meander = bridge_to_meander(tree_to_bridge(t2, meander_label))
    return bridge + (meander if sign > 0 else -meander)


# -- enumeration ----------------------------------------------------------------------------

def enumerate_paths(cls: str, length: int) -> list[LatticePath]:
    """All paths of the given class and length; each has conditional probability ``1/len``."""
    if cls not in CLASSES:
        raise ValueError(f"unknown class {cls!r}")
    if not 0 <= length <= MAX_ENUM_LENGTH:
        raise ValueError(f"length must be in 0..{MAX_ENUM_LENGTH}")
    paths = (LatticePath(s) for s in product((1, -1), repeat=length))
    if cls == "walk":
        return list(paths)
    test = {"bridge": LatticePath.is_bridge, "excursion": LatticePath.is_excursion,
            "meander": LatticePath.is_meander}[cls]
    return [p for p in paths if test(p)]


def path_stat_law(cls: str, length: int, stat: str) -> dict[int, Fraction]:
    """Exact law of ``L``, ``final`` or ``height_uniform`` (height at a uniform time in ``0..length-1``)."""
    paths = enumerate_paths(cls, length)
    if not paths:
        raise ValueError("no paths of that class and length")
    law: dict[int, Fraction] = {}
    w = Fraction(1, len(paths))
    for p in paths:
        if stat == "L":
            outcomes = [(origin_visits(p), w)]
        elif stat == "final":
            outcomes = [(int(p.heights[-1]), w)]
        elif stat == "height_uniform":
            h = p.heights
            outcomes = [(int(h[i]), w / length) for i in range(length)]
        else:
            raise ValueError(f"unknown statistic {stat!r}")
        for value, q in outcomes:
            law[value] = law.get(value, Fraction(0)) + q
    return law
