from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from cartrisk import (
    InputError,
    ResourceCapError,
    Tree,
    bayes_tree,
    brute_force_t_alpha,
    count_pruned_subtrees,
    enumerate_pruned_subtrees,
    excess_loss,
    fit_leaf_labels,
    preset,
    sample,
)
from cartrisk.distributions import node_label_losses
from cartrisk.oracle import oracle_penalized_infimum, penalized_infimum
from cartrisk.tree import leaf, node

from helpers import random_instance, random_tree

DEPTH1 = Tree.from_dict(node(0, 0.5, leaf(), leaf()), dim=1)
FULL2 = Tree.from_dict(node(0, 0.5, node(0, 0.25, leaf(), leaf()), node(0, 0.75, leaf(), leaf())), dim=1)


def test_counts():
    assert count_pruned_subtrees(Tree.constant(0, 1)) == 1
    assert count_pruned_subtrees(DEPTH1) == 2
    assert count_pruned_subtrees(FULL2) == 5


def test_enumeration_is_exhaustive_and_distinct():
    assert {t.structure_key() for t in enumerate_pruned_subtrees(DEPTH1)} == {
        DEPTH1.structure_key(), Tree.constant(0, 1).structure_key()}
    keys = [t.n_leaves for t in enumerate_pruned_subtrees(FULL2)]
    assert sorted(keys) == [1, 2, 3, 3, 4]
    rng = np.random.default_rng(0)
    for _ in range(30):
        t = random_tree(rng, 2, 10)
        subs = list(enumerate_pruned_subtrees(t))
        assert len(subs) == count_pruned_subtrees(t)
        assert len({s.structure_key() for s in subs}) == len(subs)


def test_cap():
    t = random_tree(np.random.default_rng(1), 2, 14)
    while count_pruned_subtrees(t) < 10:
        t = random_tree(np.random.default_rng(int(t.n_leaves) + 7), 2, 14)
    with pytest.raises(ResourceCapError) as exc:
        list(enumerate_pruned_subtrees(t, cap=3))
    assert exc.value.count == count_pruned_subtrees(t)
    assert exc.value.exit_code == 3


def test_brute_force_extremes():
    rng = np.random.default_rng(2)
    for _ in range(20):
        t, s = random_instance(rng, max_leaves=10, replug=False)
        n = len(s)
        assert brute_force_t_alpha(t, s, n + 1).n_leaves == 1
    # each split strictly helps, so nothing is pruned at alpha = 0
    d = preset("zero-error", dim=1, r=4, pattern="checker")
    s = sample(d, 200, 0)
    t = fit_leaf_labels(bayes_tree(d), s)
    assert brute_force_t_alpha(t, s, 0).structure_key() == t.structure_key()


def _two_stage(dist, t_max, h, n, scale=1.0):
    # every subtree, every leaf labelling, exact excess loss of each
    best = None
    for sub in enumerate_pruned_subtrees(t_max):
        L = sub.n_leaves
        bias = min(excess_loss(dist, sub.with_leaf_labels(lab), exact=True) for lab in product((0, 1), repeat=L))
        v = float(bias) + scale * L / (h * n)
        best = v if best is None else min(best, v)
    return best


def test_infimum_against_labelling_brute_force():
    dist = preset("tiles", dim=2, r=3, pattern="checker")
    rng = np.random.default_rng(3)
    for _ in range(10):
        t = random_tree(rng, 2, 7)
        v, arg = oracle_penalized_infimum(dist, t, 0.6, 50)
        assert v == pytest.approx(_two_stage(dist, t, 0.6, 50), abs=1e-12)
        assert excess_loss(dist, arg) + arg.n_leaves / (0.6 * 50) == pytest.approx(v, abs=1e-12)


def test_dp_matches_enumeration():
    dist = preset("no-margin", dim=2, r=3)
    rng = np.random.default_rng(4)
    for _ in range(40):
        t = random_tree(rng, 2, 12)
        h, n, scale = 0.3, int(rng.integers(5, 500)), float(rng.uniform(0.5, 3))
        v, arg = oracle_penalized_infimum(dist, t, h, n, scale)
        dv, darg = penalized_infimum(t, node_label_losses(dist, t), scale / (h * n))
        assert dv == pytest.approx(v, abs=1e-12)
        assert excess_loss(dist, darg) + scale * darg.n_leaves / (h * n) == pytest.approx(v, abs=1e-12)


def test_infimum_examples():
    dist = preset("tiles", dim=2, r=2, pattern="checker")
    # root only: best constant plus one leaf of penalty
    v, _ = oracle_penalized_infimum(dist, Tree.constant(0, 2), 0.6, 100)
    best_const = min(excess_loss(dist, Tree.constant(c, 2)) for c in (0, 1))
    assert v == pytest.approx(best_const + 1 / (0.6 * 100), abs=1e-15)
    # f* representable with B leaves and n large: pure penalty
    bt = bayes_tree(dist)
    v, arg = oracle_penalized_infimum(dist, bt, 0.6, 10**9)
    assert excess_loss(dist, arg) == 0
    assert v == pytest.approx(bt.n_leaves / (0.6 * 10**9), rel=1e-12)
    with pytest.raises(InputError):
        oracle_penalized_infimum(dist, bt, 0, 10)
    with pytest.raises(InputError):
        oracle_penalized_infimum(dist, bt, 1.5, 10)


def test_brute_force_alpha_is_rational():
    t, s = random_instance(np.random.default_rng(5), max_leaves=8, replug=False)
    assert brute_force_t_alpha(t, s, "1/3") == brute_force_t_alpha(t, s, Fraction(1, 3))
