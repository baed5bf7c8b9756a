"""Random small instances shared by the test modules."""

import numpy as np

from cartrisk import GrowConfig, LabeledSample, fit_leaf_labels, grow_maximal

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def report(criterion, ok, detail):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def coarse_sample(rng, n, d, levels=None, noise=None):
    # coordinates on a coarse lattice so duplicates and ties are common
    levels = levels or int(rng.integers(2, 9))
    X = rng.integers(0, levels, size=(n, d)) / (levels - 1) if levels > 1 else np.zeros((n, d))
    noise = rng.uniform(0, 0.45) if noise is None else noise
    w = rng.normal(size=d)
    y = ((X - 0.5) @ w > 0).astype(int) ^ (rng.random(n) < noise)
    return LabeledSample(X, y.astype(int), d)


def random_instance(rng, max_dim=3, max_n=64, max_leaves=15, replug=None):
    """(T_max fitted on the pruning sample, pruning sample).

    With ``replug`` (random by default) the tree is grown on one sample and
    refitted on an independent one, which produces empty leaves and branches
    that do not help on the pruning sample.
    """
    d = int(rng.integers(1, max_dim + 1))
    n = int(rng.integers(2, max_n + 1))
    levels = int(rng.integers(2, 9))
    noise = rng.uniform(0, 0.45)
    grow_on = coarse_sample(rng, n, d, levels, noise)
    t = grow_maximal(grow_on, GrowConfig(max_leaves=int(rng.integers(1, max_leaves + 1))))
    if replug is None:
        replug = bool(rng.random() < 0.5)
    prune_on = coarse_sample(rng, int(rng.integers(1, max_n + 1)), d, levels, noise) if replug else grow_on
    return fit_leaf_labels(t, prune_on), prune_on


def random_tree(rng, d, max_leaves):
    """Random tree on [0,1]^d without counts."""
    from cartrisk.tree import Tree, leaf, node

    target = int(rng.integers(1, max_leaves + 1))

    def build(budget):
        if budget == 1:
            return leaf(int(rng.integers(0, 2)))
        k = int(rng.integers(1, budget))
        return node(int(rng.integers(0, d)), float(rng.integers(1, 8)) / 8, build(k), build(budget - k))

    return Tree.from_dict(build(target), dim=d)
