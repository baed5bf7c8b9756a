"""Labeled samples and their CSV interchange format."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class LabeledPoint:
    x: tuple[float, ...]
    y: int


@dataclass(frozen=True, eq=False)
class LabeledSample:
    """An immutable (n, dim) feature matrix with 0/1 labels.

    The arrays are stored read-only, so a sample can be shared freely.
    """

    X: np.ndarray
    y: np.ndarray
    dim: int

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, copy=True)
        y = np.array(self.y, dtype=np.int64, copy=True)
        if self.dim < 1:
            raise InputError(f"dim must be positive, got {self.dim}")
        if X.size == 0:
            X = X.reshape(0, self.dim)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise InputError(f"X must have shape (n, {self.dim}), got {X.shape}")
        if y.shape != (X.shape[0],):
            raise InputError("y must have one label per row of X")
        if not np.isin(y, (0, 1)).all():
            raise InputError("labels must be 0 or 1")
        if not np.isfinite(X).all():
            raise InputError("features must be finite")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_points(cls, points, dim=None) -> LabeledSample:
        points = [p if isinstance(p, LabeledPoint) else LabeledPoint(tuple(p[0]), int(p[1])) for p in points]
        if dim is None:
            if not points:
                raise InputError("dim is required for an empty sample")
            dim = len(points[0].x)
        X = np.array([p.x for p in points], dtype=np.float64).reshape(len(points), dim)
        return cls(X, np.array([p.y for p in points], dtype=np.int64), dim)

    def __len__(self) -> int:
        return self.X.shape[0]

    def __eq__(self, other):
        if not isinstance(other, LabeledSample):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.X, other.X) and np.array_equal(self.y, other.y)

    __hash__ = None

    @property
    def points(self) -> tuple[LabeledPoint, ...]:
        return tuple(LabeledPoint(tuple(float(v) for v in row), int(lab)) for row, lab in zip(self.X, self.y))

    def take(self, indices) -> LabeledSample:
        indices = np.asarray(indices, dtype=np.intp)
        return LabeledSample(self.X[indices], self.y[indices], self.dim)

    def require_nonempty(self, what="sample"):
        if len(self) == 0:
            raise InputError(f"{what} must be nonempty")

    # CSV: header x0,...,x{d-1},y ; floats with 17 significant digits

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(self.dim)] + ["y"])
        for row, lab in zip(self.X, self.y):
            w.writerow([format_float(v) for v in row] + [int(lab)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8", newline="")
        return text

    @classmethod
    def from_csv(cls, source) -> LabeledSample:
        """Parse from a path or from CSV text (anything containing a newline)."""
        text = source if isinstance(source, str) and "\n" in source else Path(source).read_text(encoding="utf-8")
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise InputError("empty CSV")
        header = [h.strip() for h in rows[0]]
        dim = len(header) - 1
        if dim < 1 or header != [f"x{j}" for j in range(dim)] + ["y"]:
            raise InputError(f"bad CSV header {rows[0]!r}; expected x0,...,x{{d-1}},y")
        X, y = [], []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != dim + 1:
                raise InputError(f"line {lineno}: expected {dim + 1} fields, got {len(row)}")
            try:
                X.append([float(v) for v in row[:dim]])
                lab = int(row[dim])
            except ValueError as exc:
                raise InputError(f"line {lineno}: {exc}") from None
            if lab not in (0, 1):
                raise InputError(f"line {lineno}: label must be 0 or 1, got {lab}")
            if not all(0.0 <= v <= 1.0 for v in X[-1]):
                raise InputError(f"line {lineno}: coordinates must lie in [0, 1]")
            y.append(lab)
        return cls(np.array(X, dtype=np.float64).reshape(len(X), dim), np.array(y, dtype=np.int64), dim)


def format_float(v) -> str:
    return format(float(v), ".17g")


def as_grid(grid, dim=None) -> np.ndarray:
    """Coerce a sample, array, or sequence of coordinate vectors to an (m, dim) array."""
    if isinstance(grid, LabeledSample):
        arr = grid.X
    else:
        arr = np.asarray(grid, dtype=np.float64)
        if arr.ndim == 1 and dim is not None and arr.size % dim == 0 and arr.size > 0:
            arr = arr.reshape(-1, dim)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise InputError("grid must be a nonempty sequence of coordinate vectors")
    if dim is not None and arr.shape[1] != dim:
        raise InputError(f"grid has dimension {arr.shape[1]}, expected {dim}")
    return arr
