"""Binary axis-parallel decision trees.

A :class:`Tree` is an immutable arena of :class:`Node` records numbered in
pre-order (root is 0, a left child immediately follows its parent). Routing
sends ``x[feature] <= threshold`` to the left child.

Every node may carry the class counts ``(n0, n1)`` of the sample it was
fitted on; internal counts are the sums of their children's, so collapsing an
internal node into a leaf needs no access to the data.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import InputError, StateError
from .sample import LabeledSample, as_grid

TREE_FORMAT = "cartrisk.tree"
TREE_FORMAT_VERSION = 1


def majority_label(n0, n1) -> int:
    """Majority vote; ties go to label 0."""
    return 1 if n1 > n0 else 0


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float

    def __post_init__(self):
        object.__setattr__(self, "feature", int(self.feature))
        object.__setattr__(self, "threshold", float(self.threshold))


@dataclass(frozen=True)
class Node:
    split: Split | None = None
    left: int = -1
    right: int = -1
    label: int = 0
    n0: int | None = None
    n1: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    @property
    def errors(self) -> int:
        """Misclassification count of the node viewed as a majority-vote leaf."""
        if self.n0 is None:
            raise StateError("node has no class counts")
        return min(self.n0, self.n1)


@dataclass(frozen=True)
class Tree:
    nodes: tuple[Node, ...]
    dim: int

    def __post_init__(self):
        nodes = tuple(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if self.dim < 1:
            raise InputError("dim must be positive")
        if not nodes:
            raise InputError("a tree needs at least a root")
        # pre-order layout check
        expected = 0
        stack = [0]
        while stack:
            i = stack.pop()
            if i != expected or i >= len(nodes):
                raise InputError("nodes are not in canonical pre-order")
            expected += 1
            nd = nodes[i]
            if nd.is_leaf:
                if nd.left != -1 or nd.right != -1:
                    raise InputError(f"leaf {i} has children")
            else:
                if not 0 <= nd.split.feature < self.dim:
                    raise InputError(f"node {i}: feature {nd.split.feature} outside [0, {self.dim})")
                if nd.left != i + 1:
                    raise InputError("nodes are not in canonical pre-order")
                stack.append(nd.right)
                stack.append(nd.left)
            if nd.label not in (0, 1):
                raise InputError("labels must be 0 or 1")
        if expected != len(nodes):
            raise InputError("unreachable nodes in arena")

    # -- structure ---------------------------------------------------------

    def __len__(self):
        return len(self.nodes)

    @cached_property
    def _arrays(self):
        feat = np.array([-1 if nd.is_leaf else nd.split.feature for nd in self.nodes], dtype=np.intp)
        thr = np.array([np.nan if nd.is_leaf else nd.split.threshold for nd in self.nodes])
        left = np.array([nd.left for nd in self.nodes], dtype=np.intp)
        right = np.array([nd.right for nd in self.nodes], dtype=np.intp)
        label = np.array([nd.label for nd in self.nodes], dtype=np.int64)
        return feat, thr, left, right, label

    @cached_property
    def subtree_end(self) -> tuple[int, ...]:
        """``subtree_end[i]``: one past the last pre-order index under node ``i``."""
        end = [0] * len(self.nodes)
        for i in range(len(self.nodes) - 1, -1, -1):
            nd = self.nodes[i]
            end[i] = i + 1 if nd.is_leaf else end[nd.right]
        return tuple(end)

    @cached_property
    def parent(self) -> tuple[int, ...]:
        par = [-1] * len(self.nodes)
        for i, nd in enumerate(self.nodes):
            if not nd.is_leaf:
                par[nd.left] = i
                par[nd.right] = i
        return tuple(par)

    @property
    def leaf_ids(self) -> list[int]:
        return [i for i, nd in enumerate(self.nodes) if nd.is_leaf]

    @property
    def internal_ids(self) -> list[int]:
        return [i for i, nd in enumerate(self.nodes) if not nd.is_leaf]

    @property
    def n_leaves(self) -> int:
        return sum(1 for nd in self.nodes if nd.is_leaf)

    @cached_property
    def leaves_under(self) -> tuple[int, ...]:
        cnt = [0] * len(self.nodes)
        for i in range(len(self.nodes) - 1, -1, -1):
            nd = self.nodes[i]
            cnt[i] = 1 if nd.is_leaf else cnt[nd.left] + cnt[nd.right]
        return tuple(cnt)

    def depth(self) -> int:
        d = [0] * len(self.nodes)
        for i, nd in enumerate(self.nodes):
            if not nd.is_leaf:
                d[nd.left] = d[nd.right] = d[i] + 1
        return max(d)

    @property
    def is_fitted(self) -> bool:
        return all(nd.n0 is not None for nd in self.nodes)

    @property
    def n_samples(self) -> int:
        root = self.nodes[0]
        if root.n0 is None:
            raise StateError("tree is not fitted")
        return root.n0 + root.n1

    def training_errors(self) -> int:
        """Σ over leaves of min(n0, n1)."""
        if not self.is_fitted:
            raise StateError("tree is not fitted")
        return sum(nd.errors for nd in self.nodes if nd.is_leaf)

    def node_boxes(self):
        """Per-node ``(lo, hi)`` coordinate arrays; a node holds x with lo < x <= hi."""
        boxes = [None] * len(self.nodes)
        boxes[0] = (np.full(self.dim, -np.inf), np.full(self.dim, np.inf))
        for i, nd in enumerate(self.nodes):
            if nd.is_leaf:
                continue
            lo, hi = boxes[i]
            f, t = nd.split.feature, nd.split.threshold
            lhi = hi.copy()
            lhi[f] = min(hi[f], t)
            rlo = lo.copy()
            rlo[f] = max(lo[f], t)
            boxes[nd.left] = (lo, lhi)
            boxes[nd.right] = (rlo, hi)
        return boxes

    # -- evaluation --------------------------------------------------------

    def apply(self, X) -> np.ndarray:
        """Index of the leaf reached by every row of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        feat, thr, left, right, _ = self._arrays
        idx = np.zeros(X.shape[0], dtype=np.intp)
        active = np.flatnonzero(feat[idx] >= 0)
        while active.size:
            cur = idx[active]
            go_left = X[active, feat[cur]] <= thr[cur]
            idx[active] = np.where(go_left, left[cur], right[cur])
            active = active[feat[idx[active]] >= 0]
        return idx

    def predict_many(self, X) -> np.ndarray:
        return self._arrays[4][self.apply(X)]

    def __call__(self, X) -> np.ndarray:
        return self.predict_many(X)

    # -- rewriting ---------------------------------------------------------

    def collapse(self, node_ids) -> Tree:
        """Turn every listed node into a leaf (majority label of its counts)."""
        cut = set(node_ids)

        def expand(i):
            nd = self.nodes[i]
            if nd.is_leaf:
                return nd, None
            if i in cut:
                lab = majority_label(nd.n0, nd.n1) if nd.n0 is not None else nd.label
                return Node(None, -1, -1, lab, nd.n0, nd.n1), None
            return nd, (nd.left, nd.right)

        return Tree(preorder_build(0, expand), self.dim)

    def with_leaf_labels(self, labels) -> Tree:
        """Relabel leaves (given in ``leaf_ids`` order), keeping counts."""
        labels = list(labels)
        ids = self.leaf_ids
        if len(labels) != len(ids):
            raise InputError(f"expected {len(ids)} labels, got {len(labels)}")
        nodes = list(self.nodes)
        for i, lab in zip(ids, labels):
            nodes[i] = replace(nodes[i], label=int(lab))
        return Tree(tuple(nodes), self.dim)

    # -- identity ----------------------------------------------------------

    def structure_key(self) -> tuple:
        """Pre-order topology and splits, ignoring labels and counts."""
        return tuple(("leaf",) if nd.is_leaf else (nd.split.feature, nd.split.threshold) for nd in self.nodes)

    def digest(self) -> str:
        """Canonical pre-order structural hash (labels excluded)."""
        h = hashlib.sha256()
        for item in self.structure_key():
            h.update(repr(item).encode())
        return h.hexdigest()

    # -- JSON --------------------------------------------------------------

    def to_dict(self) -> dict:
        def enc(i):
            nd = self.nodes[i]
            if nd.is_leaf:
                leaf = {"label": nd.label}
                if nd.n0 is not None:
                    leaf["n0"], leaf["n1"] = nd.n0, nd.n1
                return {"leaf": leaf}
            return {
                "split": {"feature": nd.split.feature, "threshold": nd.split.threshold},
                "left": enc(nd.left),
                "right": enc(nd.right),
            }

        return {"format": TREE_FORMAT, "version": TREE_FORMAT_VERSION, "dim": self.dim, "root": enc(0)}

    @classmethod
    def from_dict(cls, obj, dim=None) -> Tree:
        """Build from the JSON document, or from a bare nested node object plus ``dim``."""
        if "root" in obj:
            if obj.get("format", TREE_FORMAT) != TREE_FORMAT:
                raise InputError(f"not a tree document: format={obj.get('format')!r}")
            if obj.get("version", TREE_FORMAT_VERSION) != TREE_FORMAT_VERSION:
                raise InputError(f"unsupported tree format version {obj.get('version')}")
            dim = obj["dim"]
            obj = obj["root"]
        if dim is None:
            raise InputError("dim is required")
        out = []

        def dec(o):
            pos = len(out)
            if "leaf" in o:
                lf = o["leaf"]
                n0, n1 = lf.get("n0"), lf.get("n1")
                if (n0 is None) != (n1 is None):
                    raise InputError("leaf needs both n0 and n1 or neither")
                out.append(Node(None, -1, -1, int(lf.get("label", 0)), n0, n1))
                return pos
            if "split" not in o:
                raise InputError(f"node must have 'leaf' or 'split': {o!r}")
            out.append(None)
            lpos = dec(o["left"])
            rpos = dec(o["right"])
            a, b = out[lpos], out[rpos]
            if a.n0 is not None and b.n0 is not None:
                n0, n1 = a.n0 + b.n0, a.n1 + b.n1
                lab = majority_label(n0, n1)
            else:
                n0 = n1 = None
                lab = 0
            sp = o["split"]
            out[pos] = Node(Split(sp["feature"], sp["threshold"]), lpos, rpos, lab, n0, n1)
            return pos

        try:
            dec(obj)
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed tree JSON: {exc!r}") from None
        return cls(tuple(out), int(dim))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text) -> Tree:
        return cls.from_dict(json.loads(text))

    @classmethod
    def constant(cls, label, dim) -> Tree:
        return cls((Node(None, -1, -1, int(label)),), dim)


def preorder_build(root, expand) -> tuple[Node, ...]:
    """Assemble a pre-order arena without recursion.

    ``expand(key)`` returns ``(node, None)`` for a leaf or
    ``(node, (left_key, right_key))`` for an internal node; child positions in
    the returned node are filled in here.
    """
    out = []
    stack = [(root, -1, 0)]
    while stack:
        key, parent, side = stack.pop()
        pos = len(out)
        nd, kids = expand(key)
        out.append(nd)
        if parent >= 0:
            out[parent] = replace(out[parent], **{("left", "right")[side]: pos})
        if kids is not None:
            stack.append((kids[1], pos, 1))
            stack.append((kids[0], pos, 0))
    return tuple(out)


# nested-dict helpers, handy for literals in tests and scripts
def leaf(label=0, n0=None, n1=None) -> dict:
    d = {"label": label}
    if n0 is not None:
        d["n0"], d["n1"] = n0, n1
    return {"leaf": d}


def node(feature, threshold, left, right) -> dict:
    return {"split": {"feature": feature, "threshold": threshold}, "left": left, "right": right}


# -- operations -------------------------------------------------------------


def _check_point(x, dim):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != dim:
        raise InputError(f"point has dimension {x.shape[0]}, expected {dim}")
    if ((x < 0) | (x > 1)).any():
        raise InputError("coordinates must lie in [0, 1]")
    return x


def predict(tree: Tree, x) -> int:
    x = _check_point(x, tree.dim)
    return int(tree.predict_many(x[None, :])[0])


def fit_leaf_labels(tree: Tree, sample: LabeledSample) -> Tree:
    """Recount every node on ``sample`` and relabel leaves by majority vote.

    Empty nodes get counts (0, 0) and label 0.
    """
    sample.require_nonempty()
    if sample.dim != tree.dim:
        raise InputError(f"sample dim {sample.dim} != tree dim {tree.dim}")
    m = len(tree.nodes)
    where = tree.apply(sample.X)
    c1 = np.bincount(where, weights=sample.y, minlength=m).astype(np.int64)
    tot = np.bincount(where, minlength=m).astype(np.int64)
    n0 = (tot - c1).tolist()
    n1 = c1.tolist()
    for i in range(m - 1, -1, -1):
        nd = tree.nodes[i]
        if not nd.is_leaf:
            n0[i] = n0[nd.left] + n0[nd.right]
            n1[i] = n1[nd.left] + n1[nd.right]
    nodes = tuple(replace(nd, label=majority_label(n0[i], n1[i]), n0=n0[i], n1=n1[i]) for i, nd in enumerate(tree.nodes))
    return Tree(nodes, tree.dim)


def _labels(f, X) -> np.ndarray:
    if isinstance(f, Tree):
        return f.predict_many(X)
    out = np.asarray(f(X)).reshape(-1)
    return out.astype(np.int64)


def empirical_error(f, sample: LabeledSample) -> Fraction:
    """Misclassification rate on ``sample`` as an exact fraction."""
    sample.require_nonempty()
    wrong = int(np.count_nonzero(_labels(f, sample.X) != sample.y))
    return Fraction(wrong, len(sample))


def empirical_distance_sq(f, g, grid) -> float:
    """Squared empirical L2 distance of two 0/1 classifiers on ``grid``."""
    X = as_grid(grid)
    return float(np.count_nonzero(_labels(f, X) != _labels(g, X))) / X.shape[0]


def is_pruned_subtree(t1: Tree, t2: Tree) -> bool:
    """True iff ``t1`` is obtained from ``t2`` by collapsing internal nodes."""
    if t1.dim != t2.dim:
        return False
    stack = [(0, 0)]
    while stack:
        i, j = stack.pop()
        a, b = t1.nodes[i], t2.nodes[j]
        if a.is_leaf:
            continue
        if b.is_leaf or a.split != b.split:
            return False
        stack.append((a.left, b.left))
        stack.append((a.right, b.right))
    return True
