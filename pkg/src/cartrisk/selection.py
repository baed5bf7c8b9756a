"""Final choice among the pruned sequence with an independent test sample."""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import InputError
from .sample import LabeledSample
from .tree import Tree, empirical_error


def holdout_errors(candidates, test: LabeledSample) -> list[Fraction]:
    test.require_nonempty("test sample")
    return [empirical_error(t, test) for t in candidates]


def holdout_select(candidates, test: LabeledSample) -> tuple[int, Tree]:
    """1-based index and tree with the smallest test error.

    Ties go to the tree with fewer leaves, then to the later sequence entry.
    """
    candidates = list(candidates)
    if not candidates:
        raise InputError("no candidates to select from")
    errs = holdout_errors(candidates, test)
    k = min(range(len(candidates)), key=lambda i: (errs[i], candidates[i].n_leaves, -i))
    return k + 1, candidates[k]


def holdout_gap_bound(K: int, n3: int, h: float, c1: float, c2: float) -> float:
    """c1 log(K) / (h n3) + c2 / (h n3)."""
    if K < 1 or n3 < 1:
        raise InputError("K and n3 must be >= 1")
    if not 0 < h <= 1:
        raise InputError("h must lie in (0, 1]")
    if c1 <= 0 or c2 <= 0:
        raise InputError("c1 and c2 must be positive")
    return (c1 * math.log(K) + c2) / (h * n3)
