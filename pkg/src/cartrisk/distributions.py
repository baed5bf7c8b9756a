"""Synthetic joint laws of (X, Y) with a piecewise-constant regression function.

``[0, 1]^dim`` is cut into ``cells_per_axis ** dim`` equal cells (row-major,
axis 0 most significant) and ``eta`` gives P(Y = 1 | X) on each cell. Cells
are half-open ``[a, b)`` except the last one on each axis, which is closed.

The X-marginal is uniform. With ``resolution=None`` it is the continuous
uniform law; with an integer ``resolution`` G it is the discrete uniform law
on the cell-centred lattice ``{(i + 1/2) / G}^dim`` (G must be a multiple of
``cells_per_axis``). Both are product measures, so the mass of any
axis-aligned box intersected with a cell is a product of per-axis masses, and
every loss below is computed exactly from a tree's node boxes.

Sampling uses numpy's Philox-4x64-10 counter-based generator keyed directly
by the integer seed (no seed hashing), drawing one ``(n, dim + 1)`` block of
53-bit uniforms in row-major order: columns ``0..dim-1`` give X, the last
column u gives ``Y = 1{u < eta(X)}``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ConfigError, InputError
from .sample import LabeledPoint, LabeledSample, as_grid
from .tree import Node, Split, Tree, _labels

__all__ = [
    "TiledDistribution",
    "LabeledPoint",
    "LabeledSample",
    "eta_at",
    "bayes_label",
    "margin_h",
    "sample",
    "excess_loss",
    "disagreement_mass",
    "empirical_excess_loss",
    "bayes_tree",
    "node_label_losses",
    "grid_label_losses",
    "preset",
    "load_distribution",
    "make_rng",
]


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator with key ``seed + stream * 2**64``."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise InputError(f"seed must be in [0, 2**64), got {seed}")
    return np.random.Generator(np.random.Philox(key=seed + (int(stream) << 64)))


@dataclass(frozen=True)
class TiledDistribution:
    dim: int
    cells_per_axis: int
    eta: tuple[float, ...]
    resolution: int | None = None

    def __post_init__(self):
        if int(self.dim) < 1 or int(self.cells_per_axis) < 1:
            raise InputError("dim and cells_per_axis must be positive")
        eta = tuple(float(v) for v in self.eta)
        object.__setattr__(self, "eta", eta)
        if len(eta) != self.cells_per_axis**self.dim:
            raise InputError(f"eta has {len(eta)} entries, expected {self.cells_per_axis ** self.dim}")
        if any(not 0.0 <= v <= 1.0 for v in eta):
            raise InputError("eta entries must lie in [0, 1]")
        if self.resolution is not None and (self.resolution < 1 or self.resolution % self.cells_per_axis):
            raise InputError("resolution must be a positive multiple of cells_per_axis")

    @property
    def n_cells(self) -> int:
        return len(self.eta)

    def cell_coords(self, c: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.dim):
            c, j = divmod(c, self.cells_per_axis)
            out.append(j)
        return tuple(reversed(out))

    def cell_indices(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        r = self.cells_per_axis
        j = np.minimum(np.floor(X * r).astype(np.int64), r - 1)
        idx = np.zeros(X.shape[0], dtype=np.int64)
        for a in range(self.dim):
            idx = idx * r + j[:, a]
        return idx

    def bayes_cells(self) -> np.ndarray:
        return (np.asarray(self.eta) >= 0.5).astype(np.int64)

    def cell_margins(self, exact=False):
        """|2 eta - 1| per cell, as floats or exact fractions of the stored floats."""
        if exact:
            return [abs(2 * Fraction(v) - 1) for v in self.eta]
        return np.abs(2.0 * np.asarray(self.eta) - 1.0)

    def to_dict(self) -> dict:
        d = {"dim": self.dim, "cells_per_axis": self.cells_per_axis, "eta": list(self.eta)}
        if self.resolution is not None:
            d["resolution"] = self.resolution
        return d

    @classmethod
    def from_dict(cls, d) -> TiledDistribution:
        unknown = set(d) - {"dim", "cells_per_axis", "eta", "resolution"}
        if unknown:
            raise ConfigError(f"unknown distribution keys: {sorted(unknown)}")
        try:
            return cls(int(d["dim"]), int(d["cells_per_axis"]), tuple(d["eta"]), d.get("resolution"))
        except KeyError as exc:
            raise ConfigError(f"distribution file missing key {exc}") from None

    # per-axis masses of (lo, hi] against every cell interval on that axis

    def _axis_masses(self, lo, hi, exact):
        r = self.cells_per_axis
        out = []
        if self.resolution is None:
            for j in range(r):
                a, b = Fraction(j, r), Fraction(j + 1, r)
                if exact:
                    lo_ = a if lo == -np.inf else max(a, Fraction(lo))
                    hi_ = b if hi == np.inf else min(b, Fraction(hi))
                    m = hi_ - lo_
                else:
                    m = min(hi, (j + 1) / r) - max(lo, j / r)
                if m > 0:
                    out.append((j, m))
        else:
            G = self.resolution
            per = G // r
            pts = (np.arange(G) + 0.5) / G
            inside = (pts > lo) & (pts <= hi)
            for j in range(r):
                k = int(np.count_nonzero(inside[j * per:(j + 1) * per]))
                if k:
                    out.append((j, Fraction(k, G) if exact else k / G))
        return out

    def box_cell_masses(self, lo, hi, exact=False):
        """Nonzero ``(cell, X-mass)`` pairs for the box ``lo < x <= hi``."""
        axes = [self._axis_masses(lo[a], hi[a], exact) for a in range(self.dim)]
        r = self.cells_per_axis
        out = []
        for combo in itertools.product(*axes):
            c = 0
            m = 1
            for j, w in combo:
                c = c * r + j
                m = m * w
            out.append((c, m))
        return out


def _check_x(dist, x):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != dist.dim:
        raise InputError(f"point has dimension {x.shape[0]}, expected {dist.dim}")
    if ((x < 0) | (x > 1)).any() or not np.isfinite(x).all():
        raise InputError("coordinates must lie in [0, 1]")
    return x


def eta_at(dist: TiledDistribution, x) -> float:
    x = _check_x(dist, x)
    return dist.eta[int(dist.cell_indices(x[None, :])[0])]


def bayes_label(dist: TiledDistribution, x) -> int:
    return 1 if eta_at(dist, x) >= 0.5 else 0


def margin_h(dist: TiledDistribution) -> float:
    """Largest h such that |2 eta - 1| > h' on every cell for all h' < h."""
    return float(min(dist.cell_margins(exact=True)))


def sample(dist: TiledDistribution, n: int, seed: int) -> LabeledSample:
    if int(n) < 1:
        raise InputError(f"n must be >= 1, got {n}")
    u = make_rng(seed).random((int(n), dist.dim + 1))
    X = u[:, : dist.dim]
    if dist.resolution is not None:
        G = dist.resolution
        X = (np.floor(X * G) + 0.5) / G
    eta = np.asarray(dist.eta)[dist.cell_indices(X)]
    y = (u[:, dist.dim] < eta).astype(np.int64)
    return LabeledSample(X, y, dist.dim)


# -- exact losses ------------------------------------------------------------


def _leaf_terms(dist, f, exact):
    if not isinstance(f, Tree):
        raise InputError("exact integration needs a Tree classifier")
    if f.dim != dist.dim:
        raise InputError(f"classifier dim {f.dim} != distribution dim {dist.dim}")
    boxes = f.node_boxes()
    for i in f.leaf_ids:
        lo, hi = boxes[i]
        yield f.nodes[i].label, dist.box_cell_masses(lo, hi, exact)


def excess_loss(dist: TiledDistribution, f: Tree, exact=False):
    """P(f(X) != Y) - P(f*(X) != Y), integrated over leaf-box/cell overlaps."""
    marg = dist.cell_margins(exact)
    bayes = dist.bayes_cells()
    total = Fraction(0) if exact else 0.0
    for lab, masses in _leaf_terms(dist, f, exact):
        for c, m in masses:
            if lab != bayes[c]:
                total += m * marg[c]
    return total


def disagreement_mass(dist: TiledDistribution, f: Tree, exact=False):
    """E[(f(X) - f*(X))^2], the X-mass where f differs from the Bayes rule."""
    bayes = dist.bayes_cells()
    total = Fraction(0) if exact else 0.0
    for lab, masses in _leaf_terms(dist, f, exact):
        for c, m in masses:
            if lab != bayes[c]:
                total += m
    return total


def empirical_excess_loss(dist: TiledDistribution, f, grid, exact=False):
    """Mean over the grid of 1{f != f*} |2 eta - 1| (expected over Y given the grid)."""
    X = as_grid(grid, dist.dim)
    cells = dist.cell_indices(X)
    wrong = _labels(f, X) != dist.bayes_cells()[cells]
    if exact:
        marg = dist.cell_margins(exact=True)
        return sum((marg[c] for c in cells[wrong]), Fraction(0)) / X.shape[0]
    return float(dist.cell_margins()[cells[wrong]].sum()) / X.shape[0]


def node_label_losses(dist: TiledDistribution, tree: Tree, exact=False):
    """For every node box: (excess loss if labelled 0, excess loss if labelled 1)."""
    marg = dist.cell_margins(exact)
    bayes = dist.bayes_cells()
    zero = Fraction(0) if exact else 0.0
    out = []
    for lo, hi in tree.node_boxes():
        l0 = l1 = zero
        for c, m in dist.box_cell_masses(lo, hi, exact):
            if bayes[c] == 1:
                l0 += m * marg[c]
            else:
                l1 += m * marg[c]
        out.append((l0, l1))
    return out


def grid_label_losses(dist: TiledDistribution, tree: Tree, grid):
    """Per-node (empirical excess if labelled 0, if labelled 1) on ``grid``."""
    X = as_grid(grid, dist.dim)
    n = X.shape[0]
    cells = dist.cell_indices(X)
    marg = dist.cell_margins()[cells]
    bayes = dist.bayes_cells()[cells]
    m = len(tree.nodes)
    where = tree.apply(X)
    l0 = np.bincount(where, weights=marg * (bayes == 1), minlength=m)
    l1 = np.bincount(where, weights=marg * (bayes == 0), minlength=m)
    for i in range(m - 1, -1, -1):
        nd = tree.nodes[i]
        if not nd.is_leaf:
            l0[i] = l0[nd.left] + l0[nd.right]
            l1[i] = l1[nd.left] + l1[nd.right]
    return list(zip((l0 / n).tolist(), (l1 / n).tolist()))


def bayes_tree(dist: TiledDistribution) -> Tree:
    """A tree that splits on every cell boundary and labels leaves with f*."""
    r = dist.cells_per_axis
    bayes = dist.bayes_cells()
    nodes = []

    def build(axis, lo, hi, prefix):
        # cells [lo, hi) on `axis`; prefix = fixed coordinates of earlier axes
        pos = len(nodes)
        if hi - lo == 1:
            if axis + 1 < dist.dim:
                return build(axis + 1, 0, r, prefix + (lo,))
            c = 0
            for j in prefix + (lo,):
                c = c * r + j
            nodes.append(Node(None, -1, -1, int(bayes[c])))
            return pos
        mid = (lo + hi) // 2
        nodes.append(None)
        lpos = build(axis, lo, mid, prefix)
        rpos = build(axis, mid, hi, prefix)
        nodes[pos] = Node(Split(axis, mid / r), lpos, rpos)
        return pos

    build(0, 0, r, ())
    return Tree(tuple(nodes), dist.dim)


# -- presets and files -------------------------------------------------------


def _pattern_labels(dim, r, pattern):
    out = []
    for coords in itertools.product(range(r), repeat=dim):
        if pattern == "checker":
            out.append(sum(coords) % 2)
        elif pattern == "stripes":
            out.append(coords[0] % 2)
        elif pattern == "staircase":
            out.append(1 if sum(coords) >= (dim * (r - 1) + 1) / 2 else 0)
        else:
            raise InputError(f"unknown pattern {pattern!r}")
    return out


def preset(name: str, **params) -> TiledDistribution:
    """Named distribution families.

    ``tiles``: eta in {(1-m)/2, (1+m)/2}, margin exactly m.
    ``zero-error``: eta in {0, 1}; X lives on a lattice of ``resolution``
    points per axis (default 4 per cell) so that midpoint thresholds land
    exactly on cell boundaries once every lattice point has been observed.
    ``no-margin``: |2 eta - 1| = m (k+1)/C on the k-th of C cells, so the
    margin is m/C and shrinks as cells are added.
    """
    dim = int(params.pop("dim", 2))
    r = int(params.pop("r", params.pop("cells_per_axis", 4)))
    pattern = params.pop("pattern", "staircase")
    labels = _pattern_labels(dim, r, pattern)
    if name == "tiles":
        m = float(params.pop("m", 0.6))
        if not 0 <= m <= 1:
            raise InputError("m must lie in [0, 1]")
        eta = [(1 + m) / 2 if b else (1 - m) / 2 for b in labels]
        res = params.pop("resolution", None)
    elif name == "zero-error":
        eta = [1.0 if b else 0.0 for b in labels]
        res = params.pop("resolution", 4 * r)
    elif name == "no-margin":
        m = float(params.pop("m", 0.4))
        C = len(labels)
        eta = [(1 + (m * (k + 1) / C) * (1 if b else -1)) / 2 for k, b in enumerate(labels)]
        res = params.pop("resolution", None)
    else:
        raise InputError(f"unknown preset {name!r}")
    if params:
        raise InputError(f"unknown preset parameters: {sorted(params)}")
    return TiledDistribution(dim, r, tuple(eta), None if res is None else int(res))


def _parse_preset(source: str) -> TiledDistribution:
    # preset:name or preset:name:key=value,key=value
    parts = source.split(":", 2)
    params = {}
    if len(parts) == 3 and parts[2]:
        for kv in parts[2].split(","):
            k, _, v = kv.partition("=")
            if not _:
                raise InputError(f"bad preset parameter {kv!r}")
            k = k.strip()
            params[k] = v.strip() if k == "pattern" else float(v) if k == "m" else int(v)
    return preset(parts[1], **params)


def load_distribution(source) -> TiledDistribution:
    """Resolve ``preset:<name>[:k=v,...]``, a JSON file path, or a dict."""
    if isinstance(source, TiledDistribution):
        return source
    if isinstance(source, dict):
        return TiledDistribution.from_dict(source)
    source = str(source)
    if source.startswith("preset:"):
        return _parse_preset(source)
    try:
        text = Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read distribution file {source}: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return TiledDistribution.from_dict(obj)
