"""Command-line entry point: ``tadpole {cluster,cluster-seq,tune,trace,bench,gen}``."""

from __future__ import annotations

import argparse
import csv
import json
import signal
import sys
import time
from contextlib import contextmanager
from pathlib import Path

from .core import (
    DatasetError,
    LabeledDataset,
    generate_cbf,
    generate_random_walks,
    load_ucr_channels,
    smooth,
    write_ucr,
    znormalize,
)
from .density_peaks import local_density, delta_distances
from .engine import TadpoleResult, resolve_dc, run_tadpole, tadpole_cluster
from .evaluation import (
    OrderingKind,
    TRACE_HEADER,
    nmi,
    oracle_computation_count,
    rand_index,
    trace_from_bounds,
    write_trace_csv,
)
from .measures import bound_matrices, distance_matrix, pair_distance_fn
from .sequences import generate_mutation_families, load_sequences, tadpole_cluster_sequences, write_sequences
from .tuning import build_constraint_set, parameter_sweep

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_PARAMS = 4


class InputError(Exception):
    pass


class ParamError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_cutoff(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--dc", type=float, help="absolute cutoff distance")
    g.add_argument("--dc-pct", type=float, help="cutoff as a percentile of upper-bound distances (default 2)")


def _add_k(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--k", type=int, help="number of clusters")
    g.add_argument("--auto-k", action="store_true", help="choose k by the largest gamma ratio (default)")


def _add_series_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", action="append", required=True, help="dataset file; repeat once per channel")
    p.add_argument("--format", choices=("tsv", "csv"), help="delimiter (sniffed when omitted)")
    p.add_argument("--no-normalize", action="store_true", help="skip per-series z-normalization")
    p.add_argument("--smooth", type=int, default=1, metavar="W", help="centered moving-average width (odd)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tadpole", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="cluster a time-series dataset")
    _add_series_input(p)
    p.add_argument("--window", type=float, default=0.05, help="warping window as a fraction of length")
    _add_cutoff(p)
    _add_k(p)
    p.add_argument("--budget", type=int, help="cap on exact distance calls in the delta phase")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--measure", choices=("dtw", "euclidean", "edit"), default="dtw")
    p.add_argument("--out", required=True, help="result JSON path")
    p.add_argument("--trace", help="anytime trace CSV path")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("cluster-seq", help="cluster discrete sequences under edit distance")
    p.add_argument("--input", action="append", required=True)
    _add_cutoff(p)
    _add_k(p)
    p.add_argument("--budget", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--trace")

    p = sub.add_parser("tune", help="score window or cutoff values with warped-copy constraints")
    _add_series_input(p)
    p.add_argument("--param", choices=("window", "dc"), required=True)
    p.add_argument("--values", type=_floats, required=True, help="comma-separated values to sweep")
    p.add_argument("--fixed", type=float, required=True, help="value of the parameter held fixed")
    p.add_argument("--sample", type=int, help="constraint sample size (default min(30, n))")
    p.add_argument("--warp", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="sweep CSV path")

    p = sub.add_parser("trace", help="anytime convergence under different delta-phase orderings")
    _add_series_input(p)
    p.add_argument("--window", type=float, default=0.05)
    _add_cutoff(p)
    _add_k(p)
    p.add_argument("--ordering", action="append", choices=[k.value for k in OrderingKind])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV path; several orderings get a _<ordering> suffix")

    p = sub.add_parser("bench", help="exact-call counts against the oracle minimum over dataset sizes")
    p.add_argument("--sizes", type=_ints, default=[50, 100, 200])
    p.add_argument("--generator", choices=("cbf", "walks"), default="cbf")
    p.add_argument("--length", type=int, default=128)
    p.add_argument("--window", type=float, default=0.05)
    _add_cutoff(p)
    p.add_argument("--smooth", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("gen", help="write a synthetic dataset")
    p.add_argument("--kind", choices=("cbf", "walks", "families"), default="cbf")
    p.add_argument("--n", type=int, default=90, help="series count, or sequences per family")
    p.add_argument("--length", type=int, default=128)
    p.add_argument("--families", type=int, default=3)
    p.add_argument("--mutation-rate", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("tsv", "csv"), default="tsv")
    p.add_argument("--out", required=True)
    return parser


def _load_series(args) -> LabeledDataset:
    delim = {"tsv": "\t", "csv": ","}.get(args.format) if args.format else None
    try:
        ds = load_ucr_channels(args.input, delim)
    except DatasetError as exc:
        raise InputError(str(exc)) from None
    except OSError as exc:
        raise InputError(f"cannot read {exc.filename}: {exc.strerror}") from None
    if args.smooth != 1:
        try:
            ds = ds.map(lambda s: smooth(s, args.smooth))
        except ValueError as exc:
            raise ParamError(str(exc)) from None
    if not args.no_normalize:
        ds = ds.map(znormalize)
    if ds.n < 2:
        raise InputError("need at least 2 series")
    return ds


def _k(args) -> int | None:
    if args.k is not None and args.k <= 0:
        raise ParamError(f"--k must be positive, got {args.k}")
    return args.k


def _check_budget(budget):
    if budget is not None and budget < 0:
        raise ParamError(f"--budget must be non-negative, got {budget}")


@contextmanager
def _interruptible():
    """Turn SIGINT into a stop flag polled by the delta phase."""
    flag = {"stop": False}

    def handler(signum, frame):
        flag["stop"] = True

    previous = signal.signal(signal.SIGINT, handler)
    try:
        yield lambda: flag["stop"]
    finally:
        signal.signal(signal.SIGINT, previous)


def _labels_list(labels) -> list[int]:
    return [int(x) for x in labels]


def _floats_list(values) -> list[float]:
    return [float(x) for x in values]


def _result_json(result: TadpoleResult, parameters: dict, truth, elapsed: float) -> dict:
    model = result.model
    out = {
        "parameters": parameters,
        "centers": [int(c) for c in model.centers],
        "labels": _labels_list(model.labels),
        "rho": [int(r) for r in model.rho],
        "delta": _floats_list(model.delta),
        "gamma": _floats_list(model.gamma),
        "stats": {
            key: value
            for key, value in result.stats.as_dict().items()
            if key in ("total_pairs", "case_a", "case_b", "case_c", "case_d_computed",
                       "phase2_pruned", "phase2_computed", "exact_calls")
        },
        "interrupted": result.interrupted,
    }
    if truth is not None and len(set(truth)) > 1:
        out["evaluation"] = {
            "rand_index": rand_index(model.labels, truth),
            "nmi": nmi(model.labels, truth),
            "nmi_normalization": "arithmetic_mean",
        }
    out["timing"] = {"wall_seconds": elapsed}
    return out


def _write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def _write_run_trace(result: TadpoleResult, truth, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for snap in result.trace:
            ri = rand_index(snap.labels, truth) if truth is not None else float("nan")
            w.writerow([snap.exact_calls, snap.processed, f"{ri:.10g}"])


def cmd_cluster(args) -> int:
    if args.measure == "edit":
        return cmd_cluster_seq(args)
    _check_budget(args.budget)
    k = _k(args)
    ds = _load_series(args)
    window = 0.0 if args.measure == "euclidean" else args.window
    if not 0.0 <= window <= 1.0:
        raise ParamError(f"--window must lie in [0, 1], got {window}")
    start = time.perf_counter()
    try:
        bounds = bound_matrices(ds, window, threads=args.threads)
        dc = resolve_dc(bounds, args.dc, args.dc_pct)
    except ValueError as exc:
        raise ParamError(str(exc)) from None
    exact = pair_distance_fn(ds, "euclidean" if args.measure == "euclidean" else "dtw", window)
    with _interruptible() as stop:
        result = run_tadpole(bounds, exact, dc, k=k, budget=args.budget, stop=stop, threads=args.threads)
    elapsed = time.perf_counter() - start
    parameters = {
        "command": "cluster",
        "input": list(args.input),
        "measure": args.measure,
        "window": window,
        "dc": dc,
        "dc_pct": args.dc_pct if args.dc is None else None,
        "k": k,
        "budget": args.budget,
        "seed": args.seed,
        "normalize": not args.no_normalize,
        "smooth": args.smooth,
        "n": ds.n,
        "length": ds.length,
        "dims": ds.dims,
    }
    _write_json(args.out, _result_json(result, parameters, ds.labels, elapsed))
    if args.trace:
        _write_run_trace(result, ds.labels, args.trace)
    return EXIT_OK


def cmd_cluster_seq(args) -> int:
    _check_budget(args.budget)
    k = _k(args)
    if len(args.input) != 1:
        raise ParamError("sequence clustering takes exactly one --input file")
    try:
        ds = load_sequences(args.input[0])
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if ds.n < 2:
        raise InputError("need at least 2 sequences")
    start = time.perf_counter()
    with _interruptible() as stop:
        try:
            result = tadpole_cluster_sequences(ds, args.dc, k, args.budget, dc_pct=args.dc_pct, stop=stop)
        except ValueError as exc:
            raise ParamError(str(exc)) from None
    elapsed = time.perf_counter() - start
    parameters = {
        "command": "cluster-seq",
        "input": list(args.input),
        "measure": "edit",
        "dc": result.dc,
        "dc_pct": args.dc_pct if args.dc is None else None,
        "k": k,
        "budget": args.budget,
        "seed": args.seed,
        "n": ds.n,
    }
    _write_json(args.out, _result_json(result, parameters, ds.labels, elapsed))
    if args.trace:
        _write_run_trace(result, ds.labels, args.trace)
    return EXIT_OK


def cmd_tune(args) -> int:
    ds = _load_series(args)
    if ds.dims != 1:
        raise ParamError("tuning works on single-channel datasets")
    try:
        cs = build_constraint_set(ds, args.sample, args.warp, args.seed)
        sweep = parameter_sweep(ds, args.param, args.values, args.fixed, constraints=cs)
    except ValueError as exc:
        raise ParamError(str(exc)) from None
    with Path(args.out).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("value", "score"))
        for value, score in sweep.curve():
            w.writerow([f"{value:.10g}", f"{score:.10g}"])
    print(f"recommended {args.param}: {sweep.best:.10g}")
    return EXIT_OK


def cmd_trace(args) -> int:
    k = _k(args)
    ds = _load_series(args)
    if ds.labels is None:
        raise InputError("trace needs class labels in the input")
    kinds = [OrderingKind(o) for o in (args.ordering or ["tadpole"])]
    try:
        bounds = bound_matrices(ds, args.window)
        dc = resolve_dc(bounds, args.dc, args.dc_pct)
    except ValueError as exc:
        raise ParamError(str(exc)) from None
    exact = pair_distance_fn(ds, "dtw", args.window)
    full = distance_matrix(ds, "dtw", args.window) if OrderingKind.ORACLE in kinds else None
    out = Path(args.out)
    for kind in kinds:
        result = trace_from_bounds(bounds, exact, dc, k, kind, ds.labels, seed=args.seed, full_matrix=full)
        path = out if len(kinds) == 1 else out.with_name(f"{out.stem}_{kind.value}{out.suffix}")
        write_trace_csv(result, path)
        print(f"{kind.value}: {path} final_rand_index={result.final_rand_index:.6f}")
    return EXIT_OK


def bench_rows(sizes, generator="cbf", length=128, window=0.05, dc=None, dc_pct=None, smooth_width=1, seed=0):
    """One row per dataset size: ``(n, exact_calls, oracle_count, total_pairs, wall_time)``."""
    rows = []
    for n in sizes:
        ds = generate_cbf(n, length, seed) if generator == "cbf" else generate_random_walks(n, length, seed)
        if smooth_width != 1:
            ds = ds.map(lambda s: smooth(s, smooth_width))
        ds = ds.map(znormalize)
        start = time.perf_counter()
        result = tadpole_cluster(ds, window, dc, dc_pct=dc_pct)
        wall = time.perf_counter() - start
        D = distance_matrix(ds, "dtw", window)
        profile = local_density(D, result.dc)
        oracle = oracle_computation_count(D, result.dc, profile, delta_distances(D, profile))
        rows.append((n, result.stats.exact_calls, oracle, result.stats.total_pairs, wall))
    return rows


def cmd_bench(args) -> int:
    if any(n < 3 for n in args.sizes):
        raise ParamError("--sizes must all be >= 3")
    try:
        rows = bench_rows(args.sizes, args.generator, args.length, args.window, args.dc, args.dc_pct, args.smooth, args.seed)
    except ValueError as exc:
        raise ParamError(str(exc)) from None
    with Path(args.out).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("n", "exact_calls", "oracle_count", "total_pairs", "wall_time"))
        for n, calls, oracle, total, wall in rows:
            w.writerow([n, calls, oracle, total, f"{wall:.6f}"])
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        if args.kind == "families":
            ds = generate_mutation_families(args.families, args.n, args.length, args.mutation_rate, args.seed)
            write_sequences(ds, args.out)
            return EXIT_OK
        if args.kind == "cbf":
            ds = generate_cbf(args.n, args.length, args.seed)
        else:
            ds = generate_random_walks(args.n, args.length, args.seed)
    except ValueError as exc:
        raise ParamError(str(exc)) from None
    write_ucr(ds, args.out, "\t" if args.format == "tsv" else ",")
    return EXIT_OK


COMMANDS = {
    "cluster": cmd_cluster,
    "cluster-seq": cmd_cluster_seq,
    "tune": cmd_tune,
    "trace": cmd_trace,
    "bench": cmd_bench,
    "gen": cmd_gen,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"tadpole: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ParamError as exc:
        print(f"tadpole: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_PARAMS


if __name__ == "__main__":
    sys.exit(main())
