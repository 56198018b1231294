"""Command-line interface: dataset generation, index building, querying,
and benchmark sweeps writing CSV results."""

from __future__ import annotations

import argparse
import hashlib
import pickle
import sys
import time

import numpy as np

from .baselines import DISTRIBUTIONS, GENERATOR_NAME, build_columns, generate, scan_topk, ta_topk
from .dataset import Dataset
from .engine import QuerySpec, SDIndex
from .exceptions import SDQueryError

SNAPSHOT_FORMAT = 1

RESULTS_HEADER = "method,dist,n,dims,k,queries,mean_us,p95_us,checksum"


def _parse_names(text: str) -> list[str]:
    return [t for t in (s.strip() for s in text.split(",")) if t]


def _parse_floats(text: str) -> list[float]:
    return [float(t) for t in _parse_names(text)]


def _parse_ints(text: str) -> list[int]:
    return [int(t) for t in _parse_names(text)]


def _weights_for(raw: str | None, count: int, flag: str) -> tuple[float, ...]:
    if raw is None:
        return (1.0,) * count
    vals = _parse_floats(raw)
    if len(vals) == 1 and count > 1:
        vals = vals * count
    if len(vals) != count:
        raise SDQueryError(f"{flag} needs {count} value(s), got {len(vals)}")
    return tuple(vals)


def _apply_pairing(rep: list[str], att: list[str], pairing: str | None) -> tuple[list[str], list[str]]:
    """Reorder role lists so positional pairing realizes an explicit one."""
    if not pairing:
        return rep, att
    new_rep: list[str] = []
    new_att: list[str] = []
    for token in _parse_names(pairing):
        try:
            d, s = token.split(":")
        except ValueError:
            raise SDQueryError(f"--pairing entries look like REP:ATT, got {token!r}") from None
        if d not in rep or d in new_rep:
            raise SDQueryError(f"--pairing: {d!r} is not an unused repulsive column")
        if s not in att or s in new_att:
            raise SDQueryError(f"--pairing: {s!r} is not an unused attractive column")
        new_rep.append(d)
        new_att.append(s)
    new_rep += [d for d in rep if d not in new_rep]
    new_att += [s for s in att if s not in new_att]
    return new_rep, new_att


# -- subcommands -------------------------------------------------------


def cmd_gen(args) -> int:
    coords = generate(args.dist, args.n, args.dims, sigma=args.sigma, seed=args.seed)
    ds = Dataset.from_coords(
        coords,
        comments=[
            f"generator: {GENERATOR_NAME}",
            f"dist: {args.dist}",
            f"n: {args.n}",
            f"dims: {args.dims}",
            f"sigma: {args.sigma}",
            f"seed: {args.seed}",
        ],
    )
    ds.to_csv(args.out)
    print(f"wrote {args.n} points to {args.out}", file=sys.stderr)
    return 0


def _build_index(ds: Dataset, rep_names, att_names, args) -> SDIndex:
    rep = [ds.dim_index(n) for n in rep_names]
    att = [ds.dim_index(n) for n in att_names]
    return SDIndex(
        repulsive=tuple(rep),
        attractive=tuple(att),
        branching=args.branching,
        angles=tuple(_parse_floats(args.angles)),
        rebuild_threshold=args.rebuild_threshold,
    ).fit(ds.coords)


def cmd_build(args) -> int:
    ds = Dataset.from_csv(args.data)
    rep, att = _apply_pairing(
        _parse_names(args.repulsive), _parse_names(args.attractive), args.pairing
    )
    t0 = time.perf_counter()
    index = _build_index(ds, rep, att, args)
    build_s = time.perf_counter() - t0
    pairs = ", ".join(
        f"({ds.dim_names[d]}, {ds.dim_names[s]})" for d, s in index.pairing_.pairs
    )
    residual = [ds.dim_names[d] for d in index.pairing_.residual_repulsive] + [
        ds.dim_names[s] for s in index.pairing_.residual_attractive
    ]
    print(
        f"built index on {ds.n_points} points: pairs [{pairs}]"
        + (f", residual {residual}" if residual else "")
        + f" in {build_s:.3f}s",
        file=sys.stderr,
    )
    if args.out:
        with open(args.out, "wb") as fh:
            pickle.dump(
                {
                    "format_version": SNAPSHOT_FORMAT,
                    "dataset": ds,
                    "index": index,
                    "repulsive": rep,
                    "attractive": att,
                },
                fh,
            )
        print(f"snapshot written to {args.out}", file=sys.stderr)
    return 0


def _load_snapshot(path):
    with open(path, "rb") as fh:
        snap = pickle.load(fh)
    if snap.get("format_version") != SNAPSHOT_FORMAT:
        raise SDQueryError(f"unsupported snapshot format in {path}")
    return snap


def cmd_query(args) -> int:
    index = None
    if args.index:
        snap = _load_snapshot(args.index)
        ds = snap["dataset"]
        index = snap["index"]
        rep_names = _parse_names(args.repulsive) if args.repulsive else snap["repulsive"]
        att_names = _parse_names(args.attractive) if args.attractive else snap["attractive"]
    else:
        ds = Dataset.from_csv(args.data)
        if not (args.repulsive and args.attractive):
            raise SDQueryError("--repulsive and --attractive are required with --data")
        rep_names = _parse_names(args.repulsive)
        att_names = _parse_names(args.attractive)
        rep_names, att_names = _apply_pairing(rep_names, att_names, args.pairing)
    rep = tuple(ds.dim_index(n) for n in rep_names)
    att = tuple(ds.dim_index(n) for n in att_names)
    q = _parse_floats(args.query)
    if len(q) != ds.n_dims:
        raise SDQueryError(f"--query needs {ds.n_dims} coordinates, got {len(q)}")
    spec = QuerySpec(
        coords=tuple(q),
        repulsive=rep,
        attractive=att,
        alpha=_weights_for(args.alpha, len(rep), "--alpha"),
        beta=_weights_for(args.beta, len(att), "--beta"),
        k=args.k,
    )
    if args.method == "scan":
        result = scan_topk(ds.coords, spec)
    elif args.method == "ta":
        result = ta_topk(build_columns(ds.coords, rep + att), ds.coords, spec)
    else:
        if index is None:
            index = _build_index(ds, rep_names, att_names, args)
        result = index.solve(spec)
    for rank, (pid, score) in enumerate(result, start=1):
        print(f"{rank},{ds.labels[pid]},{score:.6f}")
    return 0


def run_bench(
    dists,
    sizes,
    dims_list,
    k_values,
    methods,
    queries: int,
    seed: int,
    sigma: float = 0.05,
    out_path=None,
    report_build: bool = False,
    branching: int = 16,
    angles: str = "0,23,45,67",
    rebuild_threshold: float = 0.1,
    log=sys.stderr,
):
    """Benchmark sweep; returns result rows and optionally writes the CSV.

    Every method in a cell answers the same query set; the checksum over
    the ranked id lists certifies that they all answered identically.
    Timing covers queries only; builds are reported separately on request.
    """
    angle_tuple = tuple(_parse_floats(angles)) if isinstance(angles, str) else tuple(angles)
    rows = []
    for di, dist in enumerate(dists):
        for n in sizes:
            for dims in dims_list:
                coords = generate(dist, n, dims, sigma=sigma, seed=[seed, di, n, dims])
                rep = tuple(range((dims + 1) // 2))
                att = tuple(range((dims + 1) // 2, dims))
                structures = {}
                if "sdindex" in methods:
                    t0 = time.perf_counter()
                    structures["sdindex"] = SDIndex(
                        repulsive=rep,
                        attractive=att,
                        branching=branching,
                        angles=angle_tuple,
                        rebuild_threshold=rebuild_threshold,
                    ).fit(coords)
                    if report_build:
                        print(
                            f"build sdindex dist={dist} n={n} dims={dims}: "
                            f"{time.perf_counter() - t0:.3f}s",
                            file=log,
                        )
                if "ta" in methods:
                    t0 = time.perf_counter()
                    structures["ta"] = build_columns(coords, rep + att)
                    if report_build:
                        print(
                            f"build ta dist={dist} n={n} dims={dims}: "
                            f"{time.perf_counter() - t0:.3f}s",
                            file=log,
                        )
                for k in k_values:
                    qrng = np.random.default_rng([seed, di, n, dims, k, 0xBEAC])
                    specs = []
                    for _ in range(queries):
                        qpt = qrng.random(dims)
                        alpha = tuple(1.0 - qrng.random(len(rep)))
                        beta = tuple(1.0 - qrng.random(len(att)))
                        specs.append(
                            QuerySpec(
                                coords=tuple(float(v) for v in qpt),
                                repulsive=rep,
                                attractive=att,
                                alpha=alpha,
                                beta=beta,
                                k=k,
                            )
                        )
                    for method in methods:
                        times_us = []
                        digest = hashlib.sha256()
                        for spec in specs:
                            t0 = time.perf_counter()
                            if method == "scan":
                                result = scan_topk(coords, spec)
                            elif method == "ta":
                                result = ta_topk(structures["ta"], coords, spec)
                            else:
                                result = structures["sdindex"].solve(spec)
                            times_us.append((time.perf_counter() - t0) * 1e6)
                            digest.update(
                                (",".join(str(pid) for pid, _ in result) + "\n").encode()
                            )
                        rows.append(
                            {
                                "method": method,
                                "dist": dist,
                                "n": n,
                                "dims": dims,
                                "k": k,
                                "queries": queries,
                                "mean_us": float(np.mean(times_us)),
                                "p95_us": float(np.percentile(times_us, 95)),
                                "checksum": digest.hexdigest(),
                            }
                        )
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(RESULTS_HEADER + "\n")
            for r in rows:
                fh.write(
                    f"{r['method']},{r['dist']},{r['n']},{r['dims']},{r['k']},"
                    f"{r['queries']},{r['mean_us']:.3f},{r['p95_us']:.3f},{r['checksum']}\n"
                )
    return rows


def cmd_bench(args) -> int:
    rows = run_bench(
        dists=_parse_names(args.dists),
        sizes=_parse_ints(args.sizes),
        dims_list=_parse_ints(args.dims),
        k_values=_parse_ints(args.k_values),
        methods=_parse_names(args.methods),
        queries=args.queries,
        seed=args.seed,
        sigma=args.sigma,
        out_path=args.out,
        report_build=args.report_build,
        branching=args.branching,
        angles=args.angles,
        rebuild_threshold=args.rebuild_threshold,
    )
    print(f"wrote {len(rows)} result rows to {args.out}", file=sys.stderr)
    return 0


# -- argument parsing --------------------------------------------------


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _add_tree_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--branching", type=_positive_int, default=16)
    p.add_argument("--angles", default="0,23,45,67", help="indexed angles in degrees")
    p.add_argument("--rebuild-threshold", type=float, default=0.1, dest="rebuild_threshold")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdindex",
        description="Top-k queries over mixed attractive/repulsive dimensions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset CSV")
    p.add_argument("--dist", choices=DISTRIBUTIONS, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--dims", type=_positive_int, required=True)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("build", help="build an index, optionally saving a snapshot")
    p.add_argument("--data", required=True)
    p.add_argument("--repulsive", required=True, help="comma-separated column names")
    p.add_argument("--attractive", required=True)
    p.add_argument("--pairing", help="explicit pairs REP:ATT,REP:ATT,...")
    _add_tree_flags(p)
    p.add_argument("--out", help="snapshot path")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="answer one query")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data")
    src.add_argument("--index")
    p.add_argument("--query", required=True, help="comma-separated coordinates")
    p.add_argument("--repulsive")
    p.add_argument("--attractive")
    p.add_argument("--pairing")
    p.add_argument("--alpha", help="weights for repulsive dims (single value broadcasts)")
    p.add_argument("--beta", help="weights for attractive dims")
    p.add_argument("-k", type=_positive_int, default=1)
    p.add_argument("--method", choices=("sdindex", "scan", "ta"), default="sdindex")
    _add_tree_flags(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="run a benchmark sweep and write results CSV")
    p.add_argument("--dists", default="uniform")
    p.add_argument("--sizes", required=True)
    p.add_argument("--dims", default="2")
    p.add_argument("--k-values", default="5", dest="k_values")
    p.add_argument("--methods", default="sdindex,scan,ta")
    p.add_argument("--queries", type=_positive_int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--report-build", action="store_true", dest="report_build")
    _add_tree_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SDQueryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
