"""Decorated binary trees grown by Remy's algorithm, the plane-tree bijection and spanning statistics.

Trees live in an index arena: node ``i`` has ``parent[i]``, ``left[i]``,
``right[i]`` (``-1`` when absent) and ``label[i]`` (``-1`` for internal
nodes).  Growth step ``i`` always appends the new internal node and then the
new leaf, so a single tree with ``n`` leaves uses indices ``0 .. 2n-2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterator

import numpy as np

GROUND = -1
INTERNAL = -1


@dataclass(frozen=True, eq=False)
class DecoratedBinaryTree:
    """Rooted plane binary tree with labelled leaves; equality is structure plus labels."""

    parent: tuple[int, ...]
    left: tuple[int, ...]
    right: tuple[int, ...]
    label: tuple[int, ...]
    root: int

    def __post_init__(self):
        sizes = {len(self.parent), len(self.left), len(self.right), len(self.label)}
        if len(sizes) != 1:
            raise ValueError("arena arrays must share one length")

    # -- structure -----------------------------------------------------------

    def nodes(self) -> list[int]:
        """Indices reachable from ``root`` in depth-first, left-before-right order."""
        out, stack = [], [self.root]
        while stack:
            v = stack.pop()
            out.append(v)
            if self.left[v] >= 0:
                stack.append(self.right[v])
                stack.append(self.left[v])
        return out

    def is_leaf(self, v: int) -> bool:
        return self.left[v] < 0

    def leaves(self) -> list[int]:
        return [v for v in self.nodes() if self.is_leaf(v)]

    def internals(self) -> list[int]:
        return [v for v in self.nodes() if not self.is_leaf(v)]

    @property
    def n_leaves(self) -> int:
        return len(self.leaves())

    def size(self) -> int:
        return len(self.nodes())

    def leaf_index(self, label: int) -> int:
        for v in self.nodes():
            if self.is_leaf(v) and self.label[v] == label:
                return v
        raise ValueError(f"no leaf labelled {label}")

    def path_to_root(self, v: int) -> list[int]:
        """Nodes from ``v`` up to the root, both included."""
        path = [v]
        while v != self.root:
            v = self.parent[v]
            path.append(v)
        return path

    def is_left_child(self, v: int) -> bool:
        p = self.parent[v]
        return p >= 0 and v != self.root and self.left[p] == v

    def subtree(self, v: int) -> "DecoratedBinaryTree":
        return DecoratedBinaryTree(self.parent, self.left, self.right, self.label, v)

    def mirror(self) -> "DecoratedBinaryTree":
        """Swap left and right children everywhere."""
        return DecoratedBinaryTree(self.parent, self.right, self.left, self.label, self.root)

    def validate(self) -> None:
        nodes = self.nodes()
        labels = sorted(self.label[v] for v in nodes if self.is_leaf(v))
        for v in nodes:
            if (self.left[v] < 0) != (self.right[v] < 0):
                raise ValueError("internal node with a single child")
            if not self.is_leaf(v):
                if self.parent[self.left[v]] != v or self.parent[self.right[v]] != v:
                    raise ValueError("inconsistent parent links")
        if len(nodes) != 2 * len(labels) - 1:
            raise ValueError("node count is not 2n-1")
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate leaf labels")

    # -- serialization ---------------------------------------------------------

    def to_string(self, v: int | None = None) -> str:
        """Leaf = its label, internal = ``(L R)``."""
        v = self.root if v is None else v
        parts: list[str] = []
        stack: list = [v]
        while stack:
            item = stack.pop()
            if isinstance(item, str):
                parts.append(item)
            elif self.is_leaf(item):
                parts.append(str(self.label[item]))
            else:
                stack.extend([")", self.right[item], " ", self.left[item]])
                parts.append("(")
        return "".join(parts)

    @classmethod
    def from_string(cls, text: str) -> "DecoratedBinaryTree":
        parent: list[int] = []
        left: list[int] = []
        right: list[int] = []
        label: list[int] = []
        tokens = text.replace("(", " ( ").replace(")", " ) ").split()
        pos = 0

        def new(lab: int) -> int:
            parent.append(-1)
            left.append(-1)
            right.append(-1)
            label.append(lab)
            return len(label) - 1

        def parse() -> int:
            nonlocal pos
            tok = tokens[pos]
            pos += 1
            if tok == "(":
                v = new(INTERNAL)
                a = parse()
                b = parse()
                if tokens[pos] != ")":
                    raise ValueError("malformed tree string")
                pos += 1
                left[v], right[v] = a, b
                parent[a] = parent[b] = v
                return v
            if tok == ")":
                raise ValueError("malformed tree string")
            return new(int(tok))

        root = parse()
        if pos != len(tokens):
            raise ValueError("trailing tokens in tree string")
        return cls(tuple(parent), tuple(left), tuple(right), tuple(label), root)

    def shape_key(self) -> str:
        """Serialization with labels erased."""
        return "".join("*" if c.isdigit() else c for c in self.to_string()).replace("**", "*")

    def __eq__(self, other):
        return isinstance(other, DecoratedBinaryTree) and self.to_string() == other.to_string()

    def __hash__(self):
        return hash(self.to_string())

    def __repr__(self):
        return f"DecoratedBinaryTree({self.to_string()!r})"


def single_leaf(label: int = 1) -> DecoratedBinaryTree:
    return DecoratedBinaryTree((-1,), (-1,), (-1,), (label,), 0)


# -- Remy growth -------------------------------------------------------------------

@dataclass
class TreeBatch:
    """``size`` forests grown in lockstep; row ``s`` holds one forest in arena form."""

    parent: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray
    roots: np.ndarray  # (size, n_roots)
    n_nodes: int

    @property
    def size(self) -> int:
        return self.parent.shape[0]

    def tree(self, s: int, which: int = 0) -> DecoratedBinaryTree:
        m = self.n_nodes
        return DecoratedBinaryTree(
            tuple(int(v) for v in self.parent[s, :m]), tuple(int(v) for v in self.left[s, :m]),
            tuple(int(v) for v in self.right[s, :m]), tuple(int(v) for v in self.label[s, :m]),
            int(self.roots[s, which]),
        )


def _empty_batch(size: int, capacity: int, start_labels: tuple[int, ...]) -> TreeBatch:
    shape = (size, capacity)
    batch = TreeBatch(
        parent=np.full(shape, -1, dtype=np.int32), left=np.full(shape, -1, dtype=np.int32),
        right=np.full(shape, -1, dtype=np.int32), label=np.full(shape, INTERNAL, dtype=np.int32),
        roots=np.tile(np.arange(len(start_labels), dtype=np.int32), (size, 1)), n_nodes=len(start_labels),
    )
    batch.label[:, : len(start_labels)] = start_labels
    return batch


def remy_step_batch(batch: TreeBatch, new_label: int, rng: np.random.Generator) -> None:
    """One Remy step on every row: splice a new internal node above a uniform node, attach a new leaf."""
    size, m = batch.size, batch.n_nodes
    rows = np.arange(size)
    x = (rng.random(size) * m).astype(np.int64)
    leaf_left = rng.random(size) < 0.5
    y, leaf = m, m + 1
    p = batch.parent[rows, x]
    batch.parent[rows, y] = p
    has_parent = p >= 0
    pr, pp, px = rows[has_parent], p[has_parent], x[has_parent]
    was_left = batch.left[pr, pp] == px
    batch.left[pr[was_left], pp[was_left]] = y
    batch.right[pr[~was_left], pp[~was_left]] = y
    for j in range(batch.roots.shape[1]):
        hit = batch.roots[:, j] == x
        batch.roots[hit, j] = y
    batch.left[rows, y] = np.where(leaf_left, leaf, x)
    batch.right[rows, y] = np.where(leaf_left, x, leaf)
    batch.parent[rows, x] = y
    batch.parent[rows, leaf] = y
    batch.label[rows, leaf] = new_label
    batch.n_nodes = m + 2


def remy_grow_batch(n_leaves: int, size: int, rng: np.random.Generator,
                    start_labels: tuple[int, ...] = (1,)) -> TreeBatch:
    """``size`` independent forests; each starts from one leaf per entry of ``start_labels``.

    New leaves are labelled ``2, 3, ...``; a forest with ``t`` start leaves ends
    with ``n_leaves`` leaves in total.
    """
    t = len(start_labels)
    if n_leaves < t:
        raise ValueError(f"need at least {t} leaves")
    batch = _empty_batch(size, 2 * n_leaves - t, start_labels)
    for i in range(n_leaves - t):
        remy_step_batch(batch, i + 2, rng)
    return batch


def remy_grow(n_leaves: int, rng: np.random.Generator) -> DecoratedBinaryTree:
    """Uniform decorated binary tree with ``n_leaves`` leaves."""
    if n_leaves < 1:
        raise ValueError("need n_leaves >= 1")
    return remy_grow_batch(n_leaves, 1, rng).tree(0)


def remy_grow_forest(n_leaves: int, rng: np.random.Generator,
                     start_labels: tuple[int, ...] = (1, 0)) -> tuple[DecoratedBinaryTree, ...]:
    """Joint Remy growth of several trees, choosing uniformly among all their nodes."""
    batch = remy_grow_batch(n_leaves, 1, rng, start_labels)
    return tuple(batch.tree(0, j) for j in range(len(start_labels)))


# -- exhaustive enumeration ----------------------------------------------------------

MAX_ENUM_LEAVES = 7


def _children_of(parent, left, right, label, roots, new_label):
    m = len(parent)
    for x in range(m):
        for leaf_left in (True, False):
            p2, l2, r2, lab2 = list(parent), list(left), list(right), list(label)
            rts = list(roots)
            y, leaf = m, m + 1
            p = p2[x]
            p2 += [p, y]
            l2 += [leaf if leaf_left else x, -1]
            r2 += [x if leaf_left else leaf, -1]
            lab2 += [INTERNAL, new_label]
            if p >= 0:
                if l2[p] == x:
                    l2[p] = y
                else:
                    r2[p] = y
            rts = [y if r == x else r for r in rts]
            p2[x] = y
            yield p2, l2, r2, lab2, rts, Fraction(1, 2 * m)


def enumerate_decorated(n_leaves: int, start_labels: tuple[int, ...] = (1,)) -> list[tuple[tuple[DecoratedBinaryTree, ...], Fraction]]:
    """Every forest reachable by Remy growth, with the product of its choice probabilities.

    Returns ``[(trees, probability)]``; ``trees`` has one entry per start leaf.
    """
    t = len(start_labels)
    if n_leaves > MAX_ENUM_LEAVES:
        raise ValueError(f"enumeration is capped at {MAX_ENUM_LEAVES} leaves")
    if n_leaves < t:
        raise ValueError(f"need at least {t} leaves")
    level = [([-1] * t, [-1] * t, [-1] * t, list(start_labels), list(range(t)), Fraction(1))]
    for i in range(n_leaves - t):
        nxt = []
        for parent, left, right, label, roots, prob in level:
            for p2, l2, r2, lab2, rts, q in _children_of(parent, left, right, label, roots, i + 2):
                nxt.append((p2, l2, r2, lab2, rts, prob * q))
        level = nxt
    out = []
    for parent, left, right, label, roots, prob in level:
        arrays = (tuple(parent), tuple(left), tuple(right), tuple(label))
        out.append((tuple(DecoratedBinaryTree(*arrays, r) for r in roots), prob))
    return out


def enumerate_trees(n_leaves: int) -> list[tuple[DecoratedBinaryTree, Fraction]]:
    """All decorated binary trees with ``n_leaves`` leaves and their Remy probabilities."""
    return [(trees[0], prob) for trees, prob in enumerate_decorated(n_leaves)]


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def decorated_count(n_leaves: int) -> int:
    """``C_{n-1} * n!``."""
    return catalan(n_leaves - 1) * math.factorial(n_leaves)


# -- statistics ----------------------------------------------------------------------------

def spanning_nodes(t: DecoratedBinaryTree, leaf_labels) -> set[int]:
    labels = list(leaf_labels)
    if not labels:
        raise ValueError("need at least one leaf label")
    nodes: set[int] = set()
    for lab in labels:
        nodes.update(t.path_to_root(t.leaf_index(lab)))
    return nodes


def spanning_size(t: DecoratedBinaryTree, leaf_labels) -> int:
    """Nodes in the union of the root-to-leaf paths of the given leaves."""
    return len(spanning_nodes(t, leaf_labels))


def left_edge_count(t: DecoratedBinaryTree, leaf_labels) -> int:
    """Spanning-tree edges that lead from a node to its left child."""
    return sum(1 for v in spanning_nodes(t, leaf_labels) if t.is_left_child(v))


def path_length(t: DecoratedBinaryTree, v: int) -> int:
    """Nodes on the path from ``v`` to the root, both included."""
    return len(t.path_to_root(v))


def pair_leaves(t: DecoratedBinaryTree) -> dict[int, int]:
    """Leaf ``->`` first parent of a left child met on the way up; the root counts as a left child of ``GROUND``."""
    out = {}
    for leaf in t.leaves():
        v = leaf
        while v != t.root and not t.is_left_child(v):
            v = t.parent[v]
        out[leaf] = GROUND if v == t.root else t.parent[v]
    return out


# -- batch statistics ------------------------------------------------------------------------

def _leaf_positions(batch: TreeBatch, label: int) -> np.ndarray:
    m = batch.n_nodes
    hit = batch.label[:, :m] == label
    if not hit.any(axis=1).all():
        raise ValueError(f"no leaf labelled {label}")
    return np.argmax(hit, axis=1)


def _mark_paths(batch: TreeBatch, labels) -> np.ndarray:
    m = batch.n_nodes
    rows = np.arange(batch.size)
    mark = np.zeros((batch.size, m), dtype=bool)
    for lab in labels:
        v = _leaf_positions(batch, lab).astype(np.int64)
        live = np.ones(batch.size, dtype=bool)
        while live.any():
            mark[rows[live], v[live]] = True
            v = np.where(live, batch.parent[rows, v], -1)
            live = v >= 0
            v = np.maximum(v, 0)
    return mark


def spanning_size_batch(batch: TreeBatch, labels) -> np.ndarray:
    return _mark_paths(batch, labels).sum(axis=1)


def left_edge_count_batch(batch: TreeBatch, labels) -> np.ndarray:
    mark = _mark_paths(batch, labels)
    m = batch.n_nodes
    idx = np.arange(m)
    par = batch.parent[:, :m]
    safe = np.maximum(par, 0)
    is_left = (par >= 0) & (np.take_along_axis(batch.left[:, :m], safe, axis=1) == idx)
    return (mark & is_left).sum(axis=1)


def uniform_node_depth_batch(batch: TreeBatch, rng: np.random.Generator) -> np.ndarray:
    """Nodes on the path from a uniformly chosen node to the root, per row (single-tree batches)."""
    rows = np.arange(batch.size)
    v = (rng.random(batch.size) * batch.n_nodes).astype(np.int64)
    depth = np.zeros(batch.size, dtype=np.int64)
    live = np.ones(batch.size, dtype=bool)
    while live.any():
        depth += live
        v = np.where(live, batch.parent[rows, v], -1)
        live = v >= 0
        v = np.maximum(v, 0)
    return depth


# -- plane trees ------------------------------------------------------------------------------

@dataclass(frozen=True)
class PlaneTree:
    """Rooted ordered tree; ``children[v]`` lists the children of ``v`` left to right."""

    children: tuple[tuple[int, ...], ...]
    labels: tuple[int, ...]
    root: int = 0

    @property
    def size(self) -> int:
        return len(self.children)

    def parent_map(self) -> dict[int, int]:
        return {c: v for v, cs in enumerate(self.children) for c in cs}

    def node_of_label(self, label: int) -> int:
        return self.labels.index(label)

    def spanning_nodes(self, nodes) -> set[int]:
        parent = self.parent_map()
        out = {self.root}
        for v in nodes:
            while v not in out:
                out.add(v)
                v = parent[v]
        return out

    def to_nested(self, v: int | None = None) -> list:
        """``[label, [child], [child], ...]``."""
        v = self.root if v is None else v
        return [self.labels[v]] + [self.to_nested(c) for c in self.children[v]]

    def to_json(self) -> str:
        return json.dumps(self.to_nested())

    @classmethod
    def from_nested(cls, nested) -> "PlaneTree":
        children: list[list[int]] = []
        labels: list[int] = []

        def build(node) -> int:
            v = len(labels)
            labels.append(node[0])
            children.append([])
            for sub in node[1:]:
                children[v].append(build(sub))
            return v

        build(nested)
        return cls(tuple(tuple(c) for c in children), tuple(labels))


def binary_to_plane(t: DecoratedBinaryTree) -> PlaneTree:
    """Depth-first bijection: a left edge opens a new rightmost child, a right edge returns to the parent.

    Each plane node takes the label of the leaf reached while standing on it.
    """
    children: list[list[int]] = [[]]
    labels: list[int] = [0]
    stack = [(t.root, 0)]
    while stack:
        v, q = stack.pop()
        if t.is_leaf(v):
            labels[q] = t.label[v]
            continue
        child = len(labels)
        children.append([])
        labels.append(0)
        children[q].append(child)
        stack.append((t.right[v], q))
        stack.append((t.left[v], child))
    return PlaneTree(tuple(tuple(c) for c in children), tuple(labels))


def plane_to_binary(pt: PlaneTree) -> DecoratedBinaryTree:
    """Inverse of :func:`binary_to_plane`."""
    parent: list[int] = []
    left: list[int] = []
    right: list[int] = []
    label: list[int] = []

    def new(lab: int) -> int:
        parent.append(-1)
        left.append(-1)
        right.append(-1)
        label.append(lab)
        return len(label) - 1

    def build(q: int, i: int) -> int:
        # binary subtree encoding plane node q from its i-th child onwards
        if i == len(pt.children[q]):
            return new(pt.labels[q])
        v = new(INTERNAL)
        a = build(pt.children[q][i], 0)
        b = build(q, i + 1)
        left[v], right[v] = a, b
        parent[a] = parent[b] = v
        return v

    root = build(pt.root, 0)
    return DecoratedBinaryTree(tuple(parent), tuple(left), tuple(right), tuple(label), root)


def enumerate_plane_shapes(n_nodes: int) -> list[PlaneTree]:
    """All unlabelled plane trees with ``n_nodes`` nodes (labels are node indices in preorder)."""
    if n_nodes < 1:
        raise ValueError("need n_nodes >= 1")

    def forests(m: int) -> Iterator[list]:
        # ordered forests with m nodes, as lists of nested trees
        if m == 0:
            yield []
            return
        for first in range(1, m + 1):
            for head in shapes(first):
                for tail in forests(m - first):
                    yield [head] + tail

    def shapes(m: int) -> Iterator[list]:
        for sub in forests(m - 1):
            yield [0] + sub

    out = []
    for nested in shapes(n_nodes):
        pt = PlaneTree.from_nested(nested)
        out.append(PlaneTree(pt.children, tuple(range(pt.size))))
    return out


def plane_spanning_law(n_nodes: int, k: int) -> dict[int, Fraction]:
    """Exact law of the node count of the spanning tree of the root and ``k`` uniform distinct nodes
    of a uniform plane tree with ``n_nodes`` nodes."""
    if not 1 <= k <= n_nodes:
        raise ValueError("need 1 <= k <= n_nodes")
    shapes = enumerate_plane_shapes(n_nodes)
    subsets = list(combinations(range(n_nodes), k))
    weight = Fraction(1, len(shapes) * len(subsets))
    law: dict[int, Fraction] = {}
    for pt in shapes:
        for nodes in subsets:
            s = len(pt.spanning_nodes(nodes))
            law[s] = law.get(s, Fraction(0)) + weight
    return law


# -- exact laws of tree statistics by enumeration -------------------------------------------------

def exact_tree_stat_law(statistic: str, n: int, k: int = 1) -> dict[int, Fraction]:
    """Law of ``U^b``, ``V^b`` or ``V^p`` by brute force over all trees of the given size."""
    if statistic == "Vp":
        return plane_spanning_law(n, k)
    law: dict[int, Fraction] = {}
    for t, prob in enumerate_trees(n):
        if statistic == "Ub":
            outcomes = [(spanning_size(t, range(1, k + 1)), Fraction(1))]
        elif statistic == "Vb":
            nodes = t.nodes()
            outcomes = [(path_length(t, v), Fraction(1, len(nodes))) for v in nodes]
        else:
            raise ValueError(f"unknown statistic {statistic!r}")
        for value, w in outcomes:
            law[value] = law.get(value, Fraction(0)) + prob * w
    return law


def tree_stat_samples(statistic: str, n: int, k: int, sample_size: int, rng: np.random.Generator) -> np.ndarray:
    """Monte Carlo draws of ``U^b``, ``V^b`` or ``V^p`` (plane spanning node count) over Remy trees.

    ``V^p`` uses the plane tree of the grown binary tree; its uniform ``k``
    nodes are the nodes carrying leaf labels ``1..k``.
    """
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    batch = remy_grow_batch(n, sample_size, rng)
    labels = range(1, k + 1)
    if statistic == "Ub":
        return spanning_size_batch(batch, labels)
    if statistic == "Vb":
        if k != 1:
            raise ValueError("V^b is defined for k = 1 only")
        return uniform_node_depth_batch(batch, rng)
    if statistic == "Vp":
        return left_edge_count_batch(batch, labels) + 1
    raise ValueError(f"unknown statistic {statistic!r}")
