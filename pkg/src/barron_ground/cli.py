"""Command-line front end: ``barron-ground <verb> ...``.

Verbs write JSON and CSV files into ``--out-dir`` and print a one-line
summary.  Failures print a JSON error object on stderr and exit with 2
(input or schema), 3 (assumption violated) or 4 (numeric failure).
Outputs depend only on the arguments, so repeated runs are byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .errors import BarronGroundError, InvalidInputError
from .estimators import stream_seed
from .reference import (
    GalerkinConfig,
    GroundTruth,
    barron_saturation,
    potential_range,
    random_trial_series,
    series_error_metrics,
    solve_ground_truth,
)
from .spectral import CosineSeries, barron_norm
from .theory_bounds import ClassParams, bounds_report, rademacher_estimate, stability_check
from .trainer import SweepResult, TrainConfig, approximation_check, sweep, train

log = logging.getLogger("barron_ground")

DEFAULT_CUTOFF = 32


def fmt(x) -> str:
    """CSV cell: floats with 17 significant digits, everything else via str."""
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue())


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"malformed JSON in {path}: {exc}") from exc


def load_series(path: str) -> CosineSeries:
    return CosineSeries.from_dict(read_json(path))


def load_truth(path: str | None, V: CosineSeries, cutoff: int) -> GroundTruth:
    if path is None:
        return solve_ground_truth(V, GalerkinConfig(cutoff, V.dim))
    truth = GroundTruth.from_dict(read_json(path))
    if truth.ustar.dim != V.dim:
        raise InvalidInputError(f"truth file has dimension {truth.ustar.dim}, potential has {V.dim}")
    return truth


def int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def meta(args, **extra) -> dict:
    out = {"verb": args.verb, "seed": args.seed}
    out.update(extra)
    return out


# verbs


def cmd_reference(args) -> str:
    V = load_series(args.potential)
    truth = solve_ground_truth(V, GalerkinConfig(args.cutoff, V.dim))
    write_json(args.out or args.out_dir / "truth.json", truth.to_dict())
    return f"lambda0={fmt(truth.lambda0)} lambda1={fmt(truth.lambda1)} gap={fmt(truth.gap)}"


def _train_config(args) -> TrainConfig:
    base = {}
    if args.config:
        base = read_json(args.config)
        if not isinstance(base, dict):
            raise InvalidInputError("train config must be a JSON object")
        TrainConfig.from_dict({"n": 1, **base})  # reject unknown keys before anything runs
    flags = {
        "n": args.n, "m": args.m, "B": args.B, "steps": args.steps, "lr": args.lr,
        "lr_final": args.lr_final, "optimizer": args.optimizer, "refit_every": args.refit_every,
    }
    base.update({k: v for k, v in flags.items() if v is not None})
    base["seed"] = args.seed
    if "n" not in base:
        raise InvalidInputError("sample size n is required (--n or config file)")
    return TrainConfig.from_dict(base)


def cmd_solve(args) -> str:
    V = load_series(args.potential)
    cfg = _train_config(args)
    truth = load_truth(args.truth, V, args.cutoff)
    res = train(V, cfg, truth)
    prefix = args.out or args.out_dir / "solve"
    write_json(Path(f"{prefix}.json"), meta(args) | res.to_dict())
    write_csv(Path(f"{prefix}_trace.csv"), ["step", "E_n"], enumerate(res.trace.tolist()))
    r = res.report
    return (
        f"m={res.config.m} energy={fmt(r.energy)} excess={fmt(r.excess)} "
        f"p_perp_l2={fmt(r.p_perp_l2)} p_perp_h1={fmt(r.p_perp_h1)}"
    )


def cmd_sweep(args) -> str:
    V = load_series(args.potential)
    truth = load_truth(args.truth, V, args.cutoff)
    seeds = args.seeds if args.seeds is not None else [args.seed + i for i in range(5)]
    template = TrainConfig(n=1, B=args.B, steps=args.steps, refit_every=args.refit_every, lr=args.lr, lr_final=args.lr_final)
    res: SweepResult = sweep(V, args.n_list, seeds, template, truth, threads=args.threads, bounds_delta=args.delta)
    write_csv(args.out_dir / "sweep.csv", SweepResult.CSV_FIELDS, [[row[k] for k in SweepResult.CSV_FIELDS] for row in res.rows])
    summary_rows = []
    for n in args.n_list:
        b = res.bounds.get(n, {})
        summary_rows.append([n, res.medians[n], b.get("oracle_rhs"), b.get("status", "")])
    write_csv(args.out_dir / "sweep_summary.csv", ["n", "median_excess", "oracle_rhs", "status"], summary_rows)
    write_json(args.out_dir / "sweep.json", meta(args, seeds=seeds) | {
        "medians": {str(n): v for n, v in res.medians.items()},
        "slope": res.slope,
        "bounds": {str(n): b for n, b in res.bounds.items()},
        "template": template.to_dict(),
    })
    return f"slope={fmt(res.slope) if res.slope is not None else 'below-floor'} medians=" + ",".join(fmt(res.medians[n]) for n in args.n_list)


def cmd_bounds(args) -> str:
    vmin = args.vmin if args.vmin is not None else args.vmax
    p = ClassParams(B=args.B, m=args.m, d=args.d, V_max=args.vmax, V_min=vmin)
    rep = bounds_report(p, args.n, args.delta, lambda_star=args.lambda_star)
    if args.rademacher:
        if not args.potential:
            raise InvalidInputError("--rademacher needs --potential")
        V = load_series(args.potential)
        if V.dim != args.d:
            raise InvalidInputError(f"potential dimension {V.dim} does not match --d {args.d}")
        seed = stream_seed(args.seed, "rademacher")
        rep.rademacher_empirical_1 = rademacher_estimate("G1", p, V, args.n, seed=seed).value
        rep.rademacher_empirical_2 = rademacher_estimate("G2", p, V, args.n, seed=seed).value
    data = rep.to_dict()
    write_json(args.out_dir / "bounds.json", meta(args) | data)
    write_csv(args.out_dir / "bounds.csv", ["quantity", "value"], [[k, v] for k, v in data.items() if not isinstance(v, dict)])
    return f"M_F={fmt(rep.M_F)} xi1={fmt(rep.xi1)} eta={fmt(rep.eta)} status={rep.status}"


def cmd_stability(args) -> str:
    if args.trials < 1:
        raise InvalidInputError("--trials must be at least 1")
    V = load_series(args.potential)
    truth = load_truth(args.truth, V, args.cutoff)
    vmin, vmax = potential_range(V)
    rng = np.random.Generator(np.random.Philox(key=stream_seed(args.seed, "stability")))
    rows, violations = [], 0
    for i in range(args.trials):
        u = random_trial_series(truth, rng, args.max_freq)
        r = series_error_metrics(u, truth, V)
        s = stability_check(r.excess, r.p_perp_l2, r.p_perp_h1, truth, vmin, vmax)
        violations += s.violated
        rows.append([i, r.excess, s.l2_lhs, s.l2_rhs, s.l2_slack, s.h1_lhs, s.h1_rhs, s.h1_slack, int(s.violated)])
    header = ["trial", "excess", "l2_lhs", "l2_rhs", "l2_slack", "h1_lhs", "h1_rhs", "h1_slack", "violated"]
    write_csv(args.out_dir / "stability.csv", header, rows)
    write_json(args.out_dir / "stability.json", meta(args, trials=args.trials, violations=violations, V_min=vmin, V_max=vmax, gap=truth.gap))
    return f"trials={args.trials} violations={violations}"


def cmd_approx(args) -> str:
    target = load_series(args.target) if args.target else CosineSeries.mode((1,))
    B = args.B if args.B is not None else barron_norm(target, 2)
    seeds = args.seeds if args.seeds is not None else [args.seed + i for i in range(5)]
    rows = approximation_check(target, args.m_list, seeds, steps=args.steps, B=B, refit_every=args.refit_every)
    out = [[r.m, r.best_error, r.median_error, r.eta, int(r.best_error <= r.eta)] for r in rows]
    write_csv(args.out_dir / "approx.csv", ["m", "best_error", "median_error", "eta", "within_bound"], out)
    decays = all(b.median_error <= a.median_error for a, b in zip(rows, rows[1:]))
    write_json(args.out_dir / "approx.json", meta(args, seeds=seeds, B=B, decays=decays) | {
        "rows": [dict(m=r.m, errors=r.errors, best_error=r.best_error, median_error=r.median_error, eta=r.eta) for r in rows],
    })
    return f"B={fmt(B)} decays={decays} within_bound={all(r.best_error <= r.eta for r in rows)}"


def cmd_barron(args) -> str:
    V = load_series(args.potential)
    rows = barron_saturation(V, args.s, args.cutoffs)
    out, prev = [], None
    for K, norm in rows:
        out.append([K, norm, None if prev is None else abs(norm - prev) / abs(prev)])
        prev = norm
    write_csv(args.out_dir / "barron.csv", ["K", "barron_norm", "rel_change"], out)
    return f"s={fmt(args.s)} last_rel_change={fmt(out[-1][2]) if len(out) > 1 else 'n/a'}"


# parser


def _globals(parser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(0), help="64-bit run seed (default 0)")
    parser.add_argument("--threads", type=positive_int, default=d(1), help="worker threads for sweep cells")
    parser.add_argument("--out-dir", type=Path, default=d(Path(".")), help="directory for output files")
    parser.add_argument("-v", "--verbose", action="store_true", default=d(False), help="progress logging on stderr")


def _cutoff(p) -> None:
    p.add_argument("--cutoff", type=positive_int, default=DEFAULT_CUTOFF, help="Galerkin cutoff K when no truth file is given")
    p.add_argument("--truth", help="ground-truth JSON written by the reference verb")


def _training(p, steps: int, refit_every: int) -> None:
    p.add_argument("--steps", type=positive_int, default=steps)
    p.add_argument("--refit-every", type=int, default=refit_every, help="exact outer-weight refit period (0 = never)")
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--lr-final", type=float, default=1e-4)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="barron-ground", description=__doc__.splitlines()[0])
    _globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="verb", required=True, metavar="verb")
    common = argparse.ArgumentParser(add_help=False)
    _globals(common, suppress=True)

    p = sub.add_parser("reference", parents=[common], help="Galerkin ground state of a potential")
    p.add_argument("potential", help="potential JSON file")
    p.add_argument("--cutoff", type=positive_int, default=DEFAULT_CUTOFF)
    p.add_argument("--out", type=Path, help="output path (default <out-dir>/truth.json)")
    p.set_defaults(func=cmd_reference)

    p = sub.add_parser("solve", parents=[common], help="train one network on the empirical quotient")
    p.add_argument("potential")
    p.add_argument("--n", type=positive_int, help="sample size")
    p.add_argument("--m", type=positive_int, help="width (default ceil(sqrt(n)))")
    p.add_argument("--B", type=float, help="norm budget (default: Barron norm of the reference ground state)")
    p.add_argument("--steps", type=positive_int)
    p.add_argument("--lr", type=float)
    p.add_argument("--lr-final", type=float)
    p.add_argument("--optimizer", choices=("adam", "pgd"))
    p.add_argument("--refit-every", type=int)
    p.add_argument("--config", help="train config JSON; flags override its entries")
    p.add_argument("--out", help="output prefix (default <out-dir>/solve)")
    _cutoff(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", parents=[common], help="excess against sample size over seeds")
    p.add_argument("potential")
    p.add_argument("--n-list", type=int_list, default=[2**8, 2**10, 2**12, 2**14, 2**16])
    p.add_argument("--seeds", type=int_list, help="explicit seeds (default: 5 consecutive from --seed)")
    p.add_argument("--B", type=float)
    p.add_argument("--delta", type=float, default=0.1, help="confidence parameter for the bound columns")
    _training(p, steps=20, refit_every=10)
    _cutoff(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", parents=[common], help="table of the generalization constants")
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--m", type=positive_int, required=True)
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--d", type=positive_int, default=1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--vmax", type=float, required=True)
    p.add_argument("--vmin", type=float, help="lower potential bound (default: --vmax)")
    p.add_argument("--lambda-star", type=float, help="ground energy, enables the approximation-gap term")
    p.add_argument("--rademacher", action="store_true", help="add empirical Rademacher estimates (needs --potential)")
    p.add_argument("--potential")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("stability", parents=[common], help="check the stability inequalities on random trials")
    p.add_argument("potential")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--max-freq", type=positive_int, default=4)
    _cutoff(p)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("approx", parents=[common], help="trained H1 error against the approximation bound")
    p.add_argument("--target", help="target series JSON (default cos(pi x))")
    p.add_argument("--m-list", type=int_list, default=[8, 16, 32, 64, 128, 256])
    p.add_argument("--seeds", type=int_list)
    p.add_argument("--B", type=float, help="budget (default: Barron norm of the target with s=2)")
    p.add_argument("--steps", type=positive_int, default=2000)
    p.add_argument("--refit-every", type=int, default=100)
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("barron", parents=[common], help="Barron norm of the ground state across cutoffs")
    p.add_argument("potential")
    p.add_argument("--s", type=float, default=2.0)
    p.add_argument("--cutoffs", type=int_list, default=[8, 16, 32, 64])
    p.set_defaults(func=cmd_barron)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr, format="%(message)s")
    try:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        summary = args.func(args)
    except BarronGroundError as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        print(json.dumps(err), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(json.dumps({"error": "OSError", "message": str(exc), "exit_code": 2}), file=sys.stderr)
        return 2
    print(f"{args.verb} seed={args.seed} {summary}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
