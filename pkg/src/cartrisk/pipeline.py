"""End-to-end grow / prune / select experiments and their bound reports.

M1 grows on L1, prunes on L2 and selects on L3. M2 grows and prunes on L1 and
selects on L3. Each run records exact excess losses of every tree of the
pruned sequence, the penalised-oracle infimum of the matching risk bound and
the hold-out term, plus the fitted ratio

    c_hat = loss(selected) / (oracle infimum + hold-out bound).

The absolute constants of the bounds are unknown, so they are never asserted;
``c_hat`` is what a sweep reports instead.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import distributions as dists
from .distributions import TiledDistribution, make_rng
from .errors import ConfigError, InputError
from .growing import GrowConfig, grow_maximal
from .oracle import penalized_infimum
from .pruning import PruneSequence, prune_sequence
from .sample import LabeledSample, format_float
from .selection import holdout_gap_bound, holdout_select
from .tree import Tree, fit_leaf_labels

REPORT_COLUMNS = (
    "rep", "N", "n1", "n2", "n3", "K", "leaves_selected", "k_selected",
    "excess_loss_sel", "excess_loss_best_k", "oracle_inf", "holdout_bound",
    "h", "V", "alpha_n1V", "seed",
)
EXTRA_COLUMNS = ("method", "leaves_max", "loss_sel", "loss_best_k", "holdout_gap", "c_hat", "margin_ok")
SUMMARY_COLUMNS = (
    "N", "reps", "median_excess_loss_sel", "median_excess_loss_best_k", "median_K",
    "median_oracle_inf", "median_holdout_gap", "median_c_hat", "max_c_hat", "zero_loss_fraction",
)


def vc_dimension_half_spaces(d: int) -> int:
    """VC dimension of the half-spaces of R^d.

    Axis-parallel splits form a subclass, so d + 1 also bounds their dimension.
    """
    if d < 1:
        raise InputError("d must be >= 1")
    return d + 1


def penalty_scale_alpha(n1: int, V: int) -> float:
    """2 + V/2 (1 + log(n1 / V)), defined for n1 >= V >= 1."""
    if V < 1 or n1 < V:
        raise InputError(f"need n1 >= V >= 1, got n1={n1}, V={V}")
    return 2.0 + V / 2.0 * (1.0 + math.log(n1 / V))


def m2_penalty_factor(n1: int, d: int, h: float) -> float:
    """Per-leaf multiplier of |T|/n1 for half-space splits: alpha_{n1, d+1} / h."""
    if not 0 < h <= 1:
        raise InputError("h must lie in (0, 1]")
    return penalty_scale_alpha(n1, vc_dimension_half_spaces(d)) / h


@dataclass(frozen=True)
class SplitScheme:
    method: str
    n1: int
    n2: int
    n3: int
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("m1", "m2"):
            raise InputError(f"method must be 'm1' or 'm2', got {self.method!r}")
        if self.n1 < 1 or self.n3 < 1 or self.n2 < 0:
            raise InputError("n1 and n3 must be >= 1")
        if (self.n2 > 0) != (self.method == "m1"):
            raise InputError("n2 must be positive under m1 and zero under m2")

    @property
    def N(self) -> int:
        return self.n1 + self.n2 + self.n3

    @classmethod
    def default(cls, method: str, N: int, seed: int = 0) -> SplitScheme:
        """Thirds under M1; (2N/3, N/3) under M2."""
        n3 = N // 3
        if method == "m1":
            return cls(method, N - 2 * n3, n3, n3, seed)
        return cls(method, N - n3, 0, n3, seed)


def split_sample(full: LabeledSample, scheme: SplitScheme):
    """Contiguous blocks of a seeded shuffle (Philox stream 1 of the seed)."""
    if len(full) != scheme.N:
        raise InputError(f"sample has {len(full)} points, scheme expects {scheme.N}")
    perm = make_rng(scheme.seed, stream=1).permutation(scheme.N)
    a, b = scheme.n1, scheme.n1 + scheme.n2
    return full.take(perm[:a]), full.take(perm[a:b]), full.take(perm[b:])


@dataclass
class RunRecord:
    rep: int
    N: int
    n1: int
    n2: int
    n3: int
    K: int
    leaves_selected: int
    k_selected: int
    excess_loss_sel: float
    excess_loss_best_k: float
    oracle_inf: float
    holdout_bound: float
    h: float
    V: int
    alpha_n1V: float
    seed: int
    method: str
    leaves_max: int
    loss_sel: float
    loss_best_k: float
    holdout_gap: float
    c_hat: float
    margin_ok: bool
    excess_losses: tuple = field(default=(), repr=False)
    losses: tuple = field(default=(), repr=False)

    def row(self) -> list[str]:
        out = []
        for col in REPORT_COLUMNS + EXTRA_COLUMNS:
            v = getattr(self, col)
            if isinstance(v, bool):
                out.append("1" if v else "0")
            elif isinstance(v, float):
                out.append(format_float(v))
            else:
                out.append(str(v))
        return out


@dataclass
class RunDetails:
    t_max: Tree
    sequence: PruneSequence
    parts: tuple
    selected: Tree


@dataclass
class BoundReport:
    records: list[RunRecord]
    details: list[RunDetails | None] = field(default_factory=list, repr=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS + EXTRA_COLUMNS)
        for r in self.records:
            w.writerow(r.row())
        return buf.getvalue()

    def summary_rows(self) -> list[dict]:
        rows = []
        for N in sorted({r.N for r in self.records}):
            rs = [r for r in self.records if r.N == N]
            rows.append({
                "N": N,
                "reps": len(rs),
                "median_excess_loss_sel": statistics.median(r.excess_loss_sel for r in rs),
                "median_excess_loss_best_k": statistics.median(r.excess_loss_best_k for r in rs),
                "median_K": statistics.median(r.K for r in rs),
                "median_oracle_inf": statistics.median(r.oracle_inf for r in rs),
                "median_holdout_gap": statistics.median(r.holdout_gap for r in rs),
                "median_c_hat": statistics.median(r.c_hat for r in rs),
                "max_c_hat": max(r.c_hat for r in rs),
                "zero_loss_fraction": sum(r.excess_loss_sel == 0 for r in rs) / len(rs),
            })
        return rows

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in self.summary_rows():
            w.writerow([format_float(row[c]) if isinstance(row[c], float) else str(row[c]) for c in SUMMARY_COLUMNS])
        return buf.getvalue()


def _margin_ok_m1(dist, trees, h_exact) -> bool:
    return all(
        dists.excess_loss(dist, t, exact=True) >= h_exact * dists.disagreement_mass(dist, t, exact=True) for t in trees
    )


def _margin_ok_m2(dist, trees, grid, h_exact) -> bool:
    bayes = dists.bayes_tree(dist)
    n = grid.shape[0]
    for t in trees:
        disagree = int(np.count_nonzero(t.predict_many(grid) != bayes.predict_many(grid)))
        if dists.empirical_excess_loss(dist, t, grid, exact=True) < h_exact * disagree / n:
            return False
    return True


def _run(dist: TiledDistribution, scheme: SplitScheme, grow: GrowConfig, rep=0, c1=1.0, c2=1.0,
         check_margin=True):
    full = dists.sample(dist, scheme.N, scheme.seed)
    L1, L2, L3 = split_sample(full, scheme)
    t_max = grow_maximal(L1, grow)
    d = dist.dim
    V = vc_dimension_half_spaces(d)
    alpha_n1V = penalty_scale_alpha(scheme.n1, V) if scheme.n1 >= V else math.nan
    h = dists.margin_h(dist)
    h_exact = min(dist.cell_margins(exact=True))

    if scheme.method == "m1":
        pruned_on = fit_leaf_labels(t_max, L2)
        seq = prune_sequence(pruned_on, L2)
    else:
        seq = prune_sequence(t_max, L1)
    trees = seq.trees
    k, chosen = holdout_select(trees, L3)
    excess = tuple(dists.excess_loss(dist, t) for t in trees)
    if scheme.method == "m1":
        losses = excess
        label_losses = dists.node_label_losses(dist, t_max)
        per_leaf = 1.0 / (h * scheme.n2) if h > 0 else math.inf
        margin_ok = _margin_ok_m1(dist, trees, h_exact) if check_margin else True
    else:
        losses = tuple(dists.empirical_excess_loss(dist, t, L1.X) for t in trees)
        label_losses = dists.grid_label_losses(dist, t_max, L1.X)
        per_leaf = alpha_n1V / (h * scheme.n1) if h > 0 else math.inf
        margin_ok = _margin_ok_m2(dist, trees, L1.X, h_exact) if check_margin else True

    if h > 0:
        oracle_inf, _ = penalized_infimum(t_max, label_losses, per_leaf)
        bound = holdout_gap_bound(seq.K, scheme.n3, min(h, 1.0), c1, c2)
        c_hat = losses[k - 1] / (oracle_inf + bound)
    else:
        oracle_inf = bound = math.inf
        c_hat = 0.0

    rec = RunRecord(
        rep=rep, N=scheme.N, n1=scheme.n1, n2=scheme.n2, n3=scheme.n3, K=seq.K,
        leaves_selected=chosen.n_leaves, k_selected=k,
        excess_loss_sel=excess[k - 1], excess_loss_best_k=min(excess),
        oracle_inf=float(oracle_inf), holdout_bound=float(bound), h=h, V=V, alpha_n1V=alpha_n1V,
        seed=scheme.seed, method=scheme.method, leaves_max=t_max.n_leaves,
        loss_sel=losses[k - 1], loss_best_k=min(losses), holdout_gap=losses[k - 1] - min(losses),
        c_hat=float(c_hat), margin_ok=margin_ok, excess_losses=excess, losses=losses,
    )
    return rec, RunDetails(t_max, seq, (L1, L2, L3), chosen)


def run_m1(dist, N: int, scheme: SplitScheme, grow: GrowConfig | None = None, **kw) -> BoundReport:
    if scheme.method != "m1":
        raise InputError("run_m1 needs an m1 scheme")
    if scheme.N != N:
        raise InputError(f"scheme parts sum to {scheme.N}, not N={N}")
    rec, det = _run(dists.load_distribution(dist), scheme, grow or GrowConfig(), **kw)
    return BoundReport([rec], [det])


def run_m2(dist, N: int, scheme: SplitScheme, grow: GrowConfig | None = None, **kw) -> BoundReport:
    if scheme.method != "m2":
        raise InputError("run_m2 needs an m2 scheme")
    if scheme.N != N:
        raise InputError(f"scheme parts sum to {scheme.N}, not N={N}")
    rec, det = _run(dists.load_distribution(dist), scheme, grow or GrowConfig(), **kw)
    return BoundReport([rec], [det])


def run(dist, scheme: SplitScheme, grow: GrowConfig | None = None, **kw) -> BoundReport:
    fn = run_m1 if scheme.method == "m1" else run_m2
    return fn(dist, scheme.N, scheme, grow, **kw)


# -- sweeps ------------------------------------------------------------------

SWEEP_KEYS = {"dist", "method", "N", "reps", "seed", "split", "grow", "c1", "c2", "jobs", "check_margin"}


@dataclass(frozen=True)
class SweepConfig:
    dist: TiledDistribution
    method: str
    Ns: tuple[int, ...]
    reps: int
    seed: int = 0
    split: tuple[float, float, float] | None = None
    grow: GrowConfig = GrowConfig()
    c1: float = 1.0
    c2: float = 1.0
    jobs: int = 1
    check_margin: bool = True

    def scheme(self, N: int, rep: int) -> SplitScheme:
        seed = self.seed + rep
        if self.split is None:
            return SplitScheme.default(self.method, N, seed)
        a, b, _ = self.split
        n1 = int(round(N * a))
        n2 = int(round(N * b))
        return SplitScheme(self.method, n1, n2, N - n1 - n2, seed)


def _key_line(text, key):
    for lineno, line in enumerate(text.splitlines(), start=1):
        if f'"{key}"' in line:
            return lineno
    return 1


def parse_sweep_config(text: str, source: str = "<config>") -> SweepConfig:
    """Parse the JSON sweep configuration; errors carry ``source:line``."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{source}:1: top level must be an object")

    def fail(key, msg):
        raise ConfigError(f"{source}:{_key_line(text, key)}: {key}: {msg}")

    unknown = sorted(set(obj) - SWEEP_KEYS)
    if unknown:
        fail(unknown[0], "unknown key")
    for key in ("dist", "method", "N", "reps"):
        if key not in obj:
            raise ConfigError(f"{source}: missing required key {key!r}")
    try:
        dist = dists.load_distribution(obj["dist"])
    except InputError as exc:
        fail("dist", str(exc))
    method = obj["method"]
    if method not in ("m1", "m2"):
        fail("method", "must be 'm1' or 'm2'")
    Ns = obj["N"] if isinstance(obj["N"], list) else [obj["N"]]
    if not Ns or not all(isinstance(v, int) and v >= 3 for v in Ns):
        fail("N", "must be an integer >= 3 or a list of them")
    reps = obj["reps"]
    if not isinstance(reps, int) or reps < 1:
        fail("reps", "must be a positive integer")
    seed = obj.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        fail("seed", "must be a nonnegative integer")
    split = obj.get("split")
    if split is not None:
        if not (isinstance(split, list) and len(split) == 3 and all(isinstance(v, (int, float)) and v >= 0 for v in split)
                and abs(sum(split) - 1) < 1e-9):
            fail("split", "must be three nonnegative fractions summing to 1")
        split = tuple(float(v) for v in split)
    try:
        grow = GrowConfig(**obj.get("grow", {}))
    except (TypeError, InputError) as exc:
        fail("grow", str(exc))
    try:
        cfg = SweepConfig(dist, method, tuple(Ns), reps, seed, split, grow,
                          float(obj.get("c1", 1.0)), float(obj.get("c2", 1.0)), int(obj.get("jobs", 1)),
                          bool(obj.get("check_margin", True)))
        for N in Ns:
            cfg.scheme(N, 0)
    except (InputError, TypeError, ValueError) as exc:
        fail("split" if split is not None else "N", str(exc))
    return cfg


def _sweep_job(args):
    cfg, N, rep = args
    rec, _ = _run(cfg.dist, cfg.scheme(N, rep), cfg.grow, rep=rep, c1=cfg.c1, c2=cfg.c2,
                  check_margin=cfg.check_margin)
    return rec


def sweep(config, out_dir=None) -> BoundReport:
    """Run every (N, replicate) pair; replicate r uses seed ``config.seed + r``.

    With ``out_dir`` the per-run rows go to ``reports.csv`` and the per-N
    medians to ``summary.csv``. Rows are ordered by (N, rep) whatever the
    worker schedule.
    """
    if isinstance(config, (str, Path)):
        path = Path(config)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
        config = parse_sweep_config(text, str(path))
    jobs = [(config, N, rep) for N in config.Ns for rep in range(config.reps)]
    if config.jobs > 1:
        with ProcessPoolExecutor(config.jobs) as pool:
            records = list(pool.map(_sweep_job, jobs))
    else:
        records = [_sweep_job(j) for j in jobs]
    report = BoundReport(records)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "reports.csv").write_text(report.to_csv(), encoding="utf-8", newline="")
        (out / "summary.csv").write_text(report.summary_csv(), encoding="utf-8", newline="")
    return report


def record_dict(rec: RunRecord) -> dict:
    d = asdict(rec)
    d["excess_losses"] = list(rec.excess_losses)
    d["losses"] = list(rec.losses)
    return d
