"""Command-line interface.

Exit codes: 0 success, 1 input/config error, 2 integrity or oracle
disagreement, 3 enumeration cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

from .errors import CartRiskError, InputError
from .growing import GrowConfig, grow_maximal
from .oracle import DEFAULT_CAP, brute_force_t_alphas, count_pruned_subtrees
from .pipeline import SplitScheme, SweepConfig, parse_sweep_config, run, sweep
from .distributions import load_distribution
from .pruning import PruneSequence, as_rational, prune_sequence, t_alpha
from .sample import LabeledSample
from .selection import holdout_errors, holdout_select
from .tree import Tree, fit_leaf_labels


def _add_grow_flags(p):
    p.add_argument("--min-node-size", type=int, default=1)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--max-leaves", type=int, default=None)


def _grow_config(args) -> GrowConfig:
    return GrowConfig(args.min_node_size, args.max_depth, args.max_leaves)


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def cmd_grow(args):
    sample = LabeledSample.from_csv(_read(args.sample) if args.sample != "-" else sys.stdin.read())
    tree = grow_maximal(sample, _grow_config(args))
    _emit(tree.to_json() + "\n", args.out)
    return 0


def cmd_prune(args):
    tree = Tree.from_json(_read(args.tree))
    sample = LabeledSample.from_csv(_read(args.sample))
    seq = prune_sequence(fit_leaf_labels(tree, sample), sample)
    _emit(seq.to_json() + "\n", args.out)
    return 0


def cmd_select(args):
    seq = PruneSequence.from_json(_read(args.sequence))
    test = LabeledSample.from_csv(_read(args.test))
    k, _ = holdout_select(seq.trees, test)
    errs = holdout_errors(seq.trees, test)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["k", "leaves", "alpha_num", "alpha_den", "test_error_num", "test_error_den", "selected"])
    for i, (e, err) in enumerate(zip(seq.entries, errs), start=1):
        w.writerow([i, e.leaves, e.alpha.numerator, e.alpha.denominator, err.numerator, err.denominator,
                    int(i == k)])
    return 0


def _default_probes(seq):
    # every breakpoint, the midpoint of each interval, and one beyond the last
    a = seq.alphas
    probes = list(a)
    probes += [(x + y) / 2 for x, y in zip(a, a[1:])]
    probes.append(a[-1] + 1)
    return sorted(set(probes))


def cmd_oracle_check(args):
    tree = Tree.from_json(_read(args.tree))
    sample = LabeledSample.from_csv(_read(args.sample))
    fitted = fit_leaf_labels(tree, sample)
    seq = prune_sequence(fitted, sample)
    if args.alphas:
        alphas = [as_rational(s) for s in args.alphas.split(",") if s.strip()]
    else:
        alphas = _default_probes(seq)
    count = count_pruned_subtrees(fitted)
    brute = brute_force_t_alphas(fitted, sample, alphas, cap=args.cap)
    bad = [(a, b) for a, b in zip(alphas, brute) if t_alpha(seq, a).structure_key() != b.structure_key()]
    print(f"subtrees={count} K={seq.K} probes={len(alphas)}")
    if not bad:
        print("agree")
        return 0
    a, b = bad[0]
    print(f"DISAGREE at alpha={a}: sequence has {t_alpha(seq, a).n_leaves} leaves, brute force {b.n_leaves}")
    print(b.to_json())
    return 2


def cmd_run(args):
    dist = load_distribution(args.dist)
    if args.split:
        try:
            n1, n2, n3 = (int(v) for v in args.split.split(","))
        except ValueError:
            raise InputError("--split takes n1,n2,n3") from None
        scheme = SplitScheme(args.method, n1, n2, n3, args.seed)
        if args.n is not None and args.n != scheme.N:
            raise InputError(f"--split sums to {scheme.N}, not --n {args.n}")
    else:
        if args.n is None:
            raise InputError("--n or --split is required")
        scheme = SplitScheme.default(args.method, args.n, args.seed)
    report = run(dist, scheme, _grow_config(args))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "reports.csv").write_text(report.to_csv(), encoding="utf-8", newline="")
        det = report.details[0]
        (out / "t_max.json").write_text(det.t_max.to_json() + "\n", encoding="utf-8")
        (out / "sequence.json").write_text(det.sequence.to_json() + "\n", encoding="utf-8")
    sys.stdout.write(report.to_csv())
    return 0


def cmd_sweep(args):
    if args.config:
        cfg = parse_sweep_config(_read(args.config), args.config)
    else:
        if not (args.dist and args.n):
            raise InputError("sweep needs --config or at least --dist and --n")
        cfg = SweepConfig(load_distribution(args.dist), args.method or "m1",
                          tuple(int(v) for v in args.n.split(",")), args.reps or 1)
    overrides = {}
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.method is not None:
        overrides["method"] = args.method
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    cfg = replace(cfg, **overrides)
    report = sweep(cfg, args.out)
    sys.stdout.write(report.summary_csv())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cartrisk", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("grow", help="grow the maximal tree on a sample CSV")
    g.add_argument("--sample", required=True)
    g.add_argument("--out")
    _add_grow_flags(g)
    g.set_defaults(func=cmd_grow)

    pr = sub.add_parser("prune", help="pruned sequence of a tree on a sample")
    pr.add_argument("--tree", required=True)
    pr.add_argument("--sample", required=True)
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_prune)

    s = sub.add_parser("select", help="hold-out selection from a sequence")
    s.add_argument("--sequence", required=True)
    s.add_argument("--test", required=True)
    s.set_defaults(func=cmd_select)

    o = sub.add_parser("oracle-check", help="compare the pruned sequence with brute force")
    o.add_argument("--tree", required=True)
    o.add_argument("--sample", required=True)
    o.add_argument("--alphas", help="comma-separated temperatures, e.g. 0,1/3,2.5")
    o.add_argument("--cap", type=int, default=DEFAULT_CAP)
    o.set_defaults(func=cmd_oracle_check)

    r = sub.add_parser("run", help="one M1/M2 experiment")
    r.add_argument("--method", choices=("m1", "m2"), default="m1")
    r.add_argument("--dist", required=True, help="JSON file or preset:<name>[:k=v,...]")
    r.add_argument("--n", type=int)
    r.add_argument("--split", help="n1,n2,n3")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out")
    _add_grow_flags(r)
    r.set_defaults(func=cmd_run)

    w = sub.add_parser("sweep", help="replicated runs over a list of N")
    w.add_argument("--config")
    w.add_argument("--dist")
    w.add_argument("--method", choices=("m1", "m2"))
    w.add_argument("--n", help="comma-separated sample sizes")
    w.add_argument("--reps", type=int)
    w.add_argument("--seed", type=int)
    w.add_argument("--jobs", type=int)
    w.add_argument("--out")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CartRiskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
