"""Spanning trees over the variables and their conditional-Gaussian edges."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCovarianceError, InvalidArgumentError


@dataclass(frozen=True)
class RootedTree:
    """Spanning tree stored as a parent array.

    ``parent[root] == -1``.  `order` lists the nodes breadth-first from the
    root, so every node appears after its parent; `levels` groups the
    same nodes by depth.
    """

    parent: np.ndarray
    root: int = field(init=False)
    children: tuple = field(init=False, repr=False)
    order: np.ndarray = field(init=False, repr=False)
    levels: tuple = field(init=False, repr=False)

    def __post_init__(self):
        parent = np.asarray(self.parent, dtype=np.intp).copy()
        n = parent.shape[0]
        if parent.ndim != 1 or n < 1:
            raise InvalidArgumentError("parent array must be a nonempty vector")
        roots = np.flatnonzero(parent < 0)
        if roots.size != 1:
            raise InvalidArgumentError(f"tree needs exactly one root, found {roots.size}")
        if np.any(parent >= n):
            raise InvalidArgumentError("parent index out of range")
        root = int(roots[0])
        children = [[] for _ in range(n)]
        for i, p in enumerate(parent):
            if p >= 0:
                children[p].append(i)
        order = [root]
        depth = np.zeros(n, dtype=np.intp)
        for node in order:
            for c in children[node]:
                depth[c] = depth[node] + 1
            order.extend(children[node])
        if len(order) != n:
            raise InvalidArgumentError("parent relation has a cycle or is disconnected")
        order = np.asarray(order, dtype=np.intp)
        levels = []
        for d in range(int(depth.max()) + 1):
            lvl = order[depth[order] == d]
            lvl.setflags(write=False)
            levels.append(lvl)
        parent.setflags(write=False)
        order.setflags(write=False)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "root", root)
        object.__setattr__(self, "children", tuple(tuple(c) for c in children))
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "levels", tuple(levels))

    @property
    def n(self):
        return self.parent.shape[0]

    def edges(self):
        """(child, parent) pairs in breadth-first order."""
        return [(int(i), int(self.parent[i])) for i in self.order[1:]]

    def edge_set(self):
        return frozenset((min(i, p), max(i, p)) for i, p in self.edges())

    def weight(self, weights):
        """Correctly rounded sum of the edge weights."""
        w = np.asarray(weights)
        return math.fsum(w[i, p] for i, p in self.edges())


@dataclass(frozen=True)
class EdgeCPD:
    """Gaussian ``x_child | x_parent``: mean ``mean_offset + slope * x_parent``."""

    child: int
    parent: int
    slope: float
    mean_offset: float
    variance: float

    def mean(self, x_parent):
        return self.mean_offset + self.slope * x_parent


def max_spanning_tree(weights, root=0):
    """Maximum-weight spanning tree of a complete graph by dense Prim.

    Runs in O(N^2): each outside vertex keeps its best edge into the tree,
    no heap.  Ties go to the candidate edge with the lexicographically
    smallest (tree vertex, new vertex) pair.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
        raise InvalidArgumentError("weights must be a nonempty square matrix")
    n = w.shape[0]
    off = ~np.eye(n, dtype=bool)
    if not np.all(np.isfinite(w[off])):
        raise InvalidArgumentError("weights must be finite")
    if np.max(np.abs(w - w.T), initial=0.0) > 1e-9:
        raise InvalidArgumentError("weights must be symmetric")

    # plain lists beat numpy calls at the sizes detection works with
    rows = w.tolist()
    outside = [v for v in range(n) if v != root]
    best = [rows[root][v] for v in outside]
    best_from = [root] * len(outside)
    parent = [-1] * n
    while outside:
        k = 0
        for j in range(1, len(outside)):
            if best[j] > best[k] or (best[j] == best[k] and best_from[j] < best_from[k]):
                k = j
        u = outside.pop(k)
        best.pop(k)
        parent[u] = best_from.pop(k)
        row = rows[u]
        for j, v in enumerate(outside):
            x = row[v]
            if x > best[j] or (x == best[j] and u < best_from[j]):
                best[j] = x
                best_from[j] = u
    return RootedTree(parent)


def line_tree(n):
    """Chain 0 - 1 - ... - (n-1) rooted at 0."""
    if n < 1:
        raise InvalidArgumentError(f"tree needs at least one node, got {n}")
    return RootedTree(np.arange(-1, n - 1))


def edge_cpds(tree, post):
    """Conditional Gaussians of the posterior along every tree edge."""
    z, C = post.z, post.C
    cpds = []
    for i, j in tree.edges():
        slope = C[i, j] / C[j, j]
        var = C[i, i] - slope * C[i, j]
        if not var > 0:
            raise DegenerateCovarianceError(
                f"conditional variance of x{i} given x{j} is {var:g}"
            )
        cpds.append(EdgeCPD(i, j, slope, z[i] - slope * z[j], var))
    return cpds


def format_edges(tree, weights=None):
    """Text dump with one ``child parent weight`` line per edge."""
    lines = []
    for i, p in tree.edges():
        wt = float(weights[i, p]) if weights is not None else float("nan")
        lines.append(f"{i} {p} {wt:.17g}")
    return "\n".join(lines) + ("\n" if lines else "")
