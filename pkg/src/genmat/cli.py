"""Command line interface: ``genmat {gen,release,verify,convert,props,bench}``."""

from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from genmat import datagen, files
from genmat.convert import CONVERSIONS
from genmat.errors import GenMatError
from genmat.metrics import metric_bias
from genmat.propagate import child_counts, depths, subtree_sizes
from genmat.release import (
    add_laplace_noise,
    build_tree_values,
    construct_equivalent_gm,
    dense_cap,
    dense_oracle_release,
    gmc_release,
    run_release,
)

ORACLE_TOL = 1e-8


class DataError(Exception):
    pass


def _parse_fanouts(text):
    out = {}
    for part in text.split(","):
        k, _, p = part.partition(":")
        out[int(k)] = float(p)
    return out


def cmd_gen(args):
    if args.kind == "complete":
        tree, counts = datagen.gen_complete_tree(args.height, args.fanout, args.lam, args.seed)
    else:
        if args.leaves is None:
            raise DataError("--kind random needs --leaves")
        proportions = _parse_fanouts(args.fanouts) if args.fanouts else None
        tree, counts = datagen.gen_random_fanout_tree(args.leaves, proportions, args.lam, args.seed)
    files.save_tree(tree, args.out_tree)
    files.save_counts(counts, tree, args.out_counts)
    print(f"n={tree.n} m={tree.m} h={tree.h}")
    return 0


def cmd_release(args):
    tree = files.load_tree(args.tree)
    counts = files.load_counts(args.counts, tree)
    method = "nosqrt" if args.no_sqrt else "gmc"
    report = run_release(tree, counts, args.epsilon, args.seed, method=method)
    status = 0
    if args.oracle:
        if tree.n > dense_cap():
            raise DataError(f"--oracle needs n <= {dense_cap()} (set GENMAT_DENSE_CAP), tree has {tree.n}")
        ref = dense_oracle_release(tree, report.v_noisy)
        dev = float(np.max(np.abs(report.v_consistent - ref)))
        bound = ORACLE_TOL * (1.0 + float(np.max(np.abs(report.v_noisy))))
        report.extra["oracle_max_deviation"] = dev
        print(f"oracle max deviation {dev:.3e} (bound {bound:.3e})")
        if dev > bound:
            status = 1
    files.save_release(report, args.out)
    print(f"rmse_nq={report.rmse_nq:.6g} bias={report.bias:.3e}")
    return status


def cmd_verify(args):
    tree = files.load_tree(args.tree)
    rel = files.load_release(args.release, tree)
    bias = metric_bias(rel[args.column], tree)
    ok = bias <= args.tol
    print(f"bias={bias:.6e} tol={args.tol:g} {'ok' if ok else 'FAIL'}")
    return 0 if ok else 1


def _write_matrix(path, header, mat):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(mat.tolist())


def cmd_convert(args):
    tree = files.load_tree(args.tree)
    mat = CONVERSIONS[args.to](tree)
    labels = tree.labels.tolist()
    header = [labels[i] for i in tree.leaves] if args.to == "ancestral" else labels
    _write_matrix(args.out, header, mat)
    return 0


def cmd_props(args):
    tree = files.load_tree(args.tree)
    cols = zip(tree.labels.tolist(), child_counts(tree).tolist(), subtree_sizes(tree).tolist(),
               depths(tree).tolist())
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "children", "subtree_size", "depth"])
        w.writerows(cols)
    return 0


def bench_rows(heights, epsilon=1.0, repeats=3, seed=0, fanout=2):
    """Median construct-GM and release wall-clock per tree height."""
    rows = []
    for h in heights:
        tree, counts = datagen.gen_complete_tree(h, fanout, seed=seed)
        v_noisy = add_laplace_noise(build_tree_values(counts, tree), epsilon, tree, seed)
        construct, release = [], []
        for _ in range(repeats):
            t0 = time.perf_counter()
            egm = construct_equivalent_gm(tree)
            t1 = time.perf_counter()
            gmc_release(tree, v_noisy, egm)
            t2 = time.perf_counter()
            construct.append(t1 - t0)
            release.append(t2 - t1)
        rows.append({"height": h, "n": tree.n, "construct_s": float(np.median(construct)),
                     "release_s": float(np.median(release))})
    return rows


def cmd_bench(args):
    heights = [int(h) for h in args.heights.split(",")]
    rows = bench_rows(heights, args.epsilon, args.repeats, args.seed, args.fanout)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=["height", "n", "construct_s", "release_s"], lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({**r, "construct_s": f"{r['construct_s']:.6f}", "release_s": f"{r['release_s']:.6f}"})
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="genmat", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic tree and leaf counts")
    g.add_argument("--kind", choices=["complete", "random"], default="complete")
    g.add_argument("--height", type=int, default=10)
    g.add_argument("--fanout", type=int, default=2)
    g.add_argument("--leaves", type=int)
    g.add_argument("--fanouts", help="fan-out proportions for --kind random, e.g. 2:0.4,3:0.3,4:0.2,5:0.1")
    g.add_argument("--lambda", dest="lam", type=float, default=datagen.DEFAULT_LAMBDA)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-tree", required=True)
    g.add_argument("--out-counts", required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("release", help="differentially private consistent release")
    r.add_argument("--tree", required=True)
    r.add_argument("--counts", required=True)
    r.add_argument("--epsilon", type=float, required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    r.add_argument("--no-sqrt", action="store_true", help="use the square-root-free projection")
    r.add_argument("--oracle", action="store_true", help="cross-check against the dense projection")
    r.set_defaults(func=cmd_release)

    v = sub.add_parser("verify", help="check the consistency bias of a release")
    v.add_argument("--release", required=True)
    v.add_argument("--tree", required=True)
    v.add_argument("--tol", type=float, default=1e-9)
    v.add_argument("--column", choices=["consistent", "noisy", "true"], default="consistent")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("convert", help="write a classical matrix representation as CSV")
    c.add_argument("--tree", required=True)
    c.add_argument("--to", choices=sorted(CONVERSIONS), required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_convert)

    s = sub.add_parser("props", help="child counts, subtree sizes and depths")
    s.add_argument("--tree", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_props)

    b = sub.add_parser("bench", help="time the two release stages on complete trees")
    b.add_argument("--kind", choices=["complete"], default="complete")
    b.add_argument("--heights", default="16,18,20")
    b.add_argument("--fanout", type=int, default=2)
    b.add_argument("--epsilon", type=float, default=1.0)
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GenMatError, DataError, OSError, KeyError) as exc:
        print(f"genmat {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
