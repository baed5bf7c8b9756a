"""Cost-complexity pruning with exact rational temperatures.

For a pruned subtree T fitted on n points the penalised criterion is

    C_alpha(T) = gamma_n(T) + alpha * |leaves(T)| / n.

Internally everything is kept in integer misclassification counts: collapsing
node t trades ``e(t) - e(T_t)`` extra errors for ``|T_t| - 1`` fewer leaves,
so the temperature at which that trade breaks even is
``(e(t) - e(T_t)) / (|T_t| - 1)``.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from fractions import Fraction

from .errors import InputError, StateError
from .sample import LabeledSample
from .tree import Tree, empirical_error, fit_leaf_labels


def as_rational(value) -> Fraction:
    """Exact fraction from an int, Fraction, float (its binary value) or 'p/q' string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


def _nonneg_alpha(alpha) -> Fraction:
    a = as_rational(alpha)
    if a < 0:
        raise InputError(f"alpha must be nonnegative, got {alpha}")
    return a


def penalized_cost(tree: Tree, sample: LabeledSample, alpha) -> Fraction:
    a = _nonneg_alpha(alpha)
    fitted = fit_leaf_labels(tree, sample)
    return empirical_error(fitted, sample) + a * fitted.n_leaves / len(sample)


def _branch_stats(tree: Tree):
    """Per-node (errors of the branch rooted there, leaves of that branch)."""
    m = len(tree.nodes)
    err = [0] * m
    for i in range(m - 1, -1, -1):
        nd = tree.nodes[i]
        err[i] = nd.errors if nd.is_leaf else err[nd.left] + err[nd.right]
    return err, tree.leaves_under


def weakest_link(tree: Tree, node: int) -> Fraction:
    """Critical value g(t) = (R(t) - R(T_t)) / (|T_t| - 1), R = errors / n."""
    if not tree.is_fitted:
        raise StateError("weakest_link needs a fitted tree")
    nd = tree.nodes[node]
    if nd.is_leaf:
        raise InputError(f"node {node} is a leaf")
    err, leaves = _branch_stats(tree)
    n = tree.n_samples
    if n == 0:
        raise StateError("tree was fitted on no points")
    return Fraction(nd.errors - err[node], n * (leaves[node] - 1))


@dataclass(frozen=True)
class PruneEntry:
    tree: Tree
    alpha: Fraction

    @property
    def leaves(self) -> int:
        return self.tree.n_leaves

    @property
    def train_error(self) -> Fraction:
        return Fraction(self.tree.training_errors(), self.tree.n_samples)


@dataclass(frozen=True)
class PruneSequence:
    entries: tuple[PruneEntry, ...]
    t_max: Tree | None = None
    sample: LabeledSample | None = None

    @property
    def K(self) -> int:
        return len(self.entries)

    @property
    def trees(self) -> list[Tree]:
        return [e.tree for e in self.entries]

    @property
    def alphas(self) -> list[Fraction]:
        return [e.alpha for e in self.entries]

    def to_list(self) -> list[dict]:
        return [
            {
                "alpha_num": e.alpha.numerator,
                "alpha_den": e.alpha.denominator,
                "tree": e.tree.to_dict(),
                "leaves": e.leaves,
                "train_error_num": e.train_error.numerator,
                "train_error_den": e.train_error.denominator,
            }
            for e in self.entries
        ]

    def to_json(self) -> str:
        return json.dumps(self.to_list(), sort_keys=True)

    @classmethod
    def from_json(cls, text) -> PruneSequence:
        try:
            rows = json.loads(text)
            entries = tuple(
                PruneEntry(Tree.from_dict(r["tree"]), Fraction(r["alpha_num"], r["alpha_den"])) for r in rows
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed sequence JSON: {exc}") from None
        if not entries:
            raise InputError("empty sequence")
        return cls(entries)


class _Pruner:
    """Working copy of T_max; ``cut[i]`` marks nodes turned into leaves."""

    def __init__(self, t_max: Tree):
        self.t = t_max
        self.e = [nd.errors for nd in t_max.nodes]
        self.cut = [nd.is_leaf for nd in t_max.nodes]

    def _live_internal(self):
        out = []
        stack = [0]
        while stack:
            i = stack.pop()
            if self.cut[i]:
                continue
            out.append(i)
            nd = self.t.nodes[i]
            stack.append(nd.right)
            stack.append(nd.left)
        return sorted(out)

    def _stats(self, live):
        err = {}
        lv = {}
        for i in reversed(live):
            nd = self.t.nodes[i]
            e = l = 0
            for c in (nd.left, nd.right):
                if self.cut[c]:
                    e += self.e[c]
                    l += 1
                else:
                    e += err[c]
                    l += lv[c]
            err[i], lv[i] = e, l
        return err, lv

    def collapse_at(self, alpha: Fraction):
        """Bottom-up: collapse every node whose collapse does not raise C_alpha."""
        live = self._live_internal()
        err, lv = {}, {}
        for i in reversed(live):
            nd = self.t.nodes[i]
            e = l = 0
            for c in (nd.left, nd.right):
                if self.cut[c]:
                    e += self.e[c]
                    l += 1
                else:
                    e += err[c]
                    l += lv[c]
            if self.e[i] - e <= alpha * (l - 1):
                self.cut[i] = True
            else:
                err[i], lv[i] = e, l

    def min_link(self) -> Fraction | None:
        live = self._live_internal()
        if not live:
            return None
        err, lv = self._stats(live)
        return min(Fraction(self.e[i] - err[i], lv[i] - 1) for i in live)

    def current(self) -> Tree:
        return self.t.collapse(i for i, c in enumerate(self.cut) if c and not self.t.nodes[i].is_leaf)


def prune_sequence(t_max: Tree, sample: LabeledSample) -> PruneSequence:
    """Nested subtrees T_1 > ... > T_K = root with breakpoints 0 = a_1 < ... < a_K.

    T_1 is the smallest minimiser of C_0. Each later step raises the
    temperature to the smallest critical value among the remaining internal
    nodes and collapses every node that breaks even there.
    """
    if not t_max.is_fitted:
        raise StateError("prune_sequence needs a tree fitted on the pruning sample")
    sample.require_nonempty("pruning sample")
    if fit_leaf_labels(t_max, sample).nodes != t_max.nodes:
        raise StateError("tree counts do not match the pruning sample; call fit_leaf_labels first")
    pr = _Pruner(t_max)
    pr.collapse_at(Fraction(0))
    entries = [PruneEntry(pr.current(), Fraction(0))]
    while True:
        a = pr.min_link()
        if a is None:
            break
        pr.collapse_at(a)
        entries.append(PruneEntry(pr.current(), a))
    return PruneSequence(tuple(entries), t_max, sample)


def t_alpha(seq: PruneSequence, alpha) -> Tree:
    """Sequence tree for the largest breakpoint not above ``alpha``."""
    a = _nonneg_alpha(alpha)
    k = bisect.bisect_right(seq.alphas, a) - 1
    return seq.entries[k].tree


def smallest_minimizer(t_max: Tree, alpha) -> Tree:
    """T_alpha by a single bottom-up pass over a fitted tree."""
    if not t_max.is_fitted:
        raise StateError("tree is not fitted")
    pr = _Pruner(t_max)
    pr.collapse_at(_nonneg_alpha(alpha))
    return pr.current()
