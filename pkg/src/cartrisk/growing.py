"""Greedy recursive partitioning that builds the maximal tree."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InputError
from .sample import LabeledSample
from .tree import Node, Split, Tree, majority_label, preorder_build


@dataclass(frozen=True)
class GrowConfig:
    min_node_size: int = 1
    max_depth: int | None = None
    max_leaves: int | None = None

    def __post_init__(self):
        if self.min_node_size < 1:
            raise InputError("min_node_size must be >= 1")
        for name in ("max_depth", "max_leaves"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise InputError(f"{name} must be positive when given")


def gini(n0: int, n1: int) -> float:
    n = n0 + n1
    if n < 1:
        raise InputError("gini of an empty node")
    p = n1 / n
    return 2.0 * p * (1.0 - p)


def _scaled_impurity(n0, n1):
    # n * gini as an exact fraction: 2 n0 n1 / n
    return Fraction(2 * n0 * n1, n0 + n1)


def best_split(node_sample: LabeledSample, min_node_size: int = 1) -> Split | None:
    """Split minimising (n_L gini_L + n_R gini_R) / n over all features and midpoints.

    Returns None when the node is pure or no admissible split strictly lowers
    the impurity. Scores are compared exactly; ties go to the lower feature,
    then the lower threshold.
    """
    node_sample.require_nonempty("node sample")
    X, y = node_sample.X, node_sample.y
    n = len(y)
    ones = int(y.sum())
    if ones == 0 or ones == n:
        return None
    parent = _scaled_impurity(n - ones, ones)
    nl = np.arange(1, n)
    nr = n - nl
    size_ok = (nl >= min_node_size) & (nr >= min_node_size)
    best = None  # (exact score, feature, threshold)
    for j in range(node_sample.dim):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        l1 = np.cumsum(y[order])[:-1]
        l0 = nl - l1
        r1 = ones - l1
        r0 = nr - r1
        ok = size_ok & (xs[1:] > xs[:-1])
        if not ok.any():
            continue
        score = 2.0 * (l0 * l1 / nl + r0 * r1 / nr)
        score = np.where(ok, score, np.inf)
        lo = score.min()
        # exact resolution among float near-ties
        for i in np.flatnonzero(score <= lo + 1e-9 * max(1.0, lo)):
            exact = Fraction(2 * int(l0[i]) * int(l1[i]), int(nl[i])) + Fraction(2 * int(r0[i]) * int(r1[i]), int(nr[i]))
            t = (xs[i] + xs[i + 1]) / 2.0
            if not xs[i] <= t < xs[i + 1]:
                t = xs[i]
            cand = (exact, j, float(t))
            if best is None or cand < best:
                best = cand
    if best is None or not best[0] < parent:
        return None
    return Split(best[1], best[2])


def grow_maximal(sample: LabeledSample, config: GrowConfig | None = None) -> Tree:
    """Recursively apply :func:`best_split` until nothing admissible remains.

    Nodes are expanded breadth-first so that a ``max_leaves`` cap keeps the
    shallow part of the tree; the result is renumbered in pre-order.
    """
    config = config or GrowConfig()
    sample.require_nonempty()
    X, y = sample.X, sample.y
    # provisional nodes: [indices, depth, split, left, right]
    prov = [[np.arange(len(y)), 0, None, -1, -1]]
    queue = deque([0])
    n_leaves = 1
    while queue:
        k = queue.popleft()
        idx, depth = prov[k][0], prov[k][1]
        if config.max_depth is not None and depth >= config.max_depth:
            continue
        if config.max_leaves is not None and n_leaves >= config.max_leaves:
            break
        sp = best_split(LabeledSample(X[idx], y[idx], sample.dim), config.min_node_size)
        if sp is None:
            continue
        go_left = X[idx, sp.feature] <= sp.threshold
        prov[k][2] = sp
        prov[k][3] = len(prov)
        prov.append([idx[go_left], depth + 1, None, -1, -1])
        prov[k][4] = len(prov)
        prov.append([idx[~go_left], depth + 1, None, -1, -1])
        queue.extend((prov[k][3], prov[k][4]))
        n_leaves += 1

    def expand(k):
        idx, _, sp, lk, rk = prov[k]
        c1 = int(y[idx].sum())
        c0 = len(idx) - c1
        nd = Node(sp, -1, -1, majority_label(c0, c1), c0, c1)
        return nd, None if sp is None else (lk, rk)

    return Tree(preorder_build(0, expand), sample.dim)
