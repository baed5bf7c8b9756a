"""Brute-force ground truth over every pruned subtree of a small tree.

Nothing here shares code with :mod:`cartrisk.pruning`: costs are recomputed
from predictions on the sample, and minimality is checked with
:func:`cartrisk.tree.is_pruned_subtree`.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .distributions import TiledDistribution, node_label_losses
from .errors import InputError, IntegrityError, ResourceCapError
from .pruning import as_rational
from .sample import LabeledSample
from .tree import Tree, fit_leaf_labels, is_pruned_subtree

DEFAULT_CAP = 10**6


def count_pruned_subtrees(tree: Tree) -> int:
    cnt = [0] * len(tree.nodes)
    for i in range(len(tree.nodes) - 1, -1, -1):
        nd = tree.nodes[i]
        cnt[i] = 1 if nd.is_leaf else 1 + cnt[nd.left] * cnt[nd.right]
    return cnt[0]


def _check_cap(tree, cap):
    count = count_pruned_subtrees(tree)
    if count > cap:
        raise ResourceCapError(f"{count} pruned subtrees exceed the enumeration cap {cap}", count)
    return count


def _cut_sets(tree: Tree, i: int = 0):
    """Yield each pruned subtree of the branch at ``i`` as a frozenset of collapsed nodes."""
    nd = tree.nodes[i]
    if nd.is_leaf:
        yield frozenset()
        return
    yield frozenset((i,))
    rights = list(_cut_sets(tree, nd.right))
    for lc in _cut_sets(tree, nd.left):
        for rc in rights:
            yield lc | rc


def enumerate_pruned_subtrees(tree: Tree, cap: int = DEFAULT_CAP):
    """Every pruned subtree of ``tree`` exactly once (lazily)."""
    _check_cap(tree, cap)
    for cut in _cut_sets(tree):
        yield tree.collapse(cut)


def _scan(t_max: Tree, sample: LabeledSample, cap: int):
    _check_cap(t_max, cap)
    rows = []
    n = len(sample)
    for sub in enumerate_pruned_subtrees(t_max, cap):
        fitted = fit_leaf_labels(sub, sample)
        wrong = int(np.count_nonzero(fitted.predict_many(sample.X) != sample.y))
        rows.append((fitted, wrong, fitted.n_leaves))
    return rows, n


def _pick(rows, n, alpha: Fraction) -> Tree:
    costs = [Fraction(w, n) + alpha * leaves / n for _, w, leaves in rows]
    best = min(costs)
    minimizers = [rows[i][0] for i, c in enumerate(costs) if c == best]
    for cand in sorted(minimizers, key=lambda t: t.n_leaves):
        if all(is_pruned_subtree(cand, other) for other in minimizers):
            return cand
    raise IntegrityError(f"no minimiser of C_{alpha} is below all the others")


def brute_force_t_alpha(t_max: Tree, sample: LabeledSample, alpha, cap: int = DEFAULT_CAP) -> Tree:
    """The minimiser of C_alpha that is a pruned subtree of every other minimiser."""
    rows, n = _scan(t_max, sample, cap)
    return _pick(rows, n, as_rational(alpha))


def brute_force_t_alphas(t_max: Tree, sample: LabeledSample, alphas, cap: int = DEFAULT_CAP) -> list[Tree]:
    """:func:`brute_force_t_alpha` for many temperatures, enumerating once."""
    rows, n = _scan(t_max, sample, cap)
    return [_pick(rows, n, as_rational(a)) for a in alphas]


def _best_in_class(tree, label_losses):
    # leaf-wise cheaper label, and the tree labelled that way
    labels = []
    bias = 0.0
    for i in tree.leaf_ids:
        l0, l1 = label_losses[i]
        labels.append(0 if l0 <= l1 else 1)
        bias += min(l0, l1)
    return bias, tree.with_leaf_labels(labels)


def oracle_penalized_infimum(dist: TiledDistribution, t_max: Tree, h: float, n: int, scale: float = 1.0,
                             cap: int = DEFAULT_CAP):
    """inf over pruned subtrees T of [min over leaf labellings of l(f*, f) + scale |T| / (h n)].

    Returns ``(value, argmin tree)``; the argmin carries the best-in-class labels.
    """
    if not 0 < h <= 1:
        raise InputError("h must lie in (0, 1]")
    _check_cap(t_max, cap)
    best = None
    for sub in enumerate_pruned_subtrees(t_max, cap):
        bias, labelled = _best_in_class(sub, node_label_losses(dist, sub))
        value = bias + scale * sub.n_leaves / (h * n)
        if best is None or value < best[0]:
            best = (value, labelled)
    return best


def penalized_infimum(t_max: Tree, label_losses, penalty: float):
    """Same infimum by bottom-up dynamic programming over T_max.

    ``label_losses[i]`` is the (label-0, label-1) loss of node ``i``'s box and
    ``penalty`` the cost per leaf. Linear in the tree size, so it applies to
    maximal trees far beyond enumeration range. Returns ``(value, tree)``.
    """
    m = len(t_max.nodes)
    best = [0.0] * m
    keep_leaf = [False] * m
    for i in range(m - 1, -1, -1):
        nd = t_max.nodes[i]
        as_leaf = min(label_losses[i]) + penalty
        if nd.is_leaf:
            best[i], keep_leaf[i] = as_leaf, True
            continue
        split = best[nd.left] + best[nd.right]
        if as_leaf <= split:
            best[i], keep_leaf[i] = as_leaf, True
        else:
            best[i] = split
    kept = []
    stack = [0]
    while stack:
        i = stack.pop()
        if keep_leaf[i]:
            kept.append(i)
        else:
            stack.extend((t_max.nodes[i].right, t_max.nodes[i].left))
    kept.sort()
    sub = t_max.collapse(i for i in kept if not t_max.nodes[i].is_leaf)
    # leaves of `sub` come in the same pre-order as the kept T_max nodes
    labels = [0 if label_losses[i][0] <= label_losses[i][1] else 1 for i in kept]
    return best[0], sub.with_leaf_labels(labels)

