"""Command-line front end: score, select, report, synth, verify-theory.

Exit codes: 0 success, 1 I/O failure, 2 validation/argument failure,
3 assumption violation or failed theory check.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import coreset as cs
from . import dynlog, plots, scores, synthetic
from .errors import AssumptionError, DualPruneError
from .sampler import PruneConfig, Strategy
from .scores import Metric, PRESETS


class TheoryFailure(Exception):
    """At least one empirical theory check failed."""


def _add_log_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--log", required=True, help="dynamics log path")
    p.add_argument(
        "--format",
        choices=["auto", "binary", "csv"],
        default="auto",
        help="log file format (auto: by extension)",
    )


def _load_log(args) -> dynlog.DynamicsLog:
    fmt = dynlog.infer_format(args.log) if args.format == "auto" else args.format
    return dynlog.read_log(args.log, fmt)


def _apply_preset(args) -> None:
    if getattr(args, "preset", None):
        t, j, c_d = PRESETS[args.preset]
        if args.t is None:
            args.t = t
        if args.j is None:
            args.j = j
        if getattr(args, "c_dataset", None) is None:
            args.c_dataset = c_d


def _resolve_horizon(args, metric: Metric) -> tuple[int, int | None]:
    snapshot = metric in (Metric.EL2N, Metric.ENTROPY)
    if snapshot:
        epoch = args.epoch if args.epoch is not None else args.t
        if epoch is None:
            raise DualPruneError(f"--epoch is required for metric {metric.value}")
        return epoch, None
    if args.t is None:
        raise DualPruneError("--t is required (or use --preset)")
    j = args.j if args.j is not None else 10
    return args.t, j


def cmd_score(args) -> int:
    log = _load_log(args)
    metric = Metric(args.metric)
    _apply_preset(args)
    t, j = _resolve_horizon(args, metric)
    table = scores.compute_metric(log, metric, t, j)
    table.to_csv(args.out)
    v = table.values
    print(
        f"{metric.value}: n={table.n} t={table.t_used} j={table.j_used} "
        f"min={v.min():.6g} median={np.median(v):.6g} max={v.max():.6g}"
    )
    print(f"wrote {args.out}")
    return 0


def cmd_select(args) -> int:
    log = _load_log(args)
    _apply_preset(args)
    if args.t is None or args.c_dataset is None:
        raise DualPruneError("--t and --c-dataset are required (or use --preset)")
    strategy = Strategy(args.strategy)
    if strategy is Strategy.BETA_SAMPLING and args.seed is None:
        raise DualPruneError("--seed is required for the beta strategy")
    config = PruneConfig(
        r=args.r,
        t=args.t,
        j=args.j if args.j is not None else 10,
        c_dataset=args.c_dataset,
        big_c=args.big_c,
        seed=args.seed,
        strategy=strategy,
    )
    manifest = cs.select(log, config, Metric(args.metric))
    manifest.save(args.out)
    print(
        f"selected {manifest.kept.shape[0]} of {manifest.n} samples "
        f"(r={args.r}, strategy={strategy.value}, metric={args.metric})"
    )
    print(f"wrote {args.out}")
    return 0


def cmd_report(args) -> int:
    log = _load_log(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    j = args.j if args.j is not None else 10

    moon = cs.moon_export(log, args.t, j)
    moon_csv = out / "moon.csv"
    cs.moon_to_csv(moon, moon_csv)
    written = [moon_csv]

    manifest = None
    if args.manifest:
        manifest = cs.CoresetManifest.load(args.manifest)
        report = cs.noise_report(manifest, log)
        noise_path = out / "noise_report.json"
        noise_path.write_text(report.to_json() + "\n")
        plots.render_noise_report(report, out / "noise_report.png")
        written += [noise_path, out / "noise_report.png"]
        print(
            f"noise: recall={report.noise_recall:.4f} "
            f"pruned_noise_fraction={report.pruned_noise_fraction:.4f} "
            f"optimal={report.optimal_recall:.4f}"
        )

    plots.render_moon(moon, out / "moon.png", manifest)
    written.append(out / "moon.png")

    if args.score_tables:
        if len(args.score_tables) < 2:
            raise DualPruneError("stability needs at least two --score-tables files")
        metric = Metric(args.metric)
        tables = [scores.ScoreTable.from_csv(p, metric) for p in args.score_tables]
        rho = cs.stability_report(tables)
        stab = out / "stability.json"
        stab.write_text(f'{{"metric": "{metric.value}", "mean_spearman": {rho!r}}}\n')
        written.append(stab)
        print(f"stability: mean spearman vs run-average = {rho:.6f}")

    for p in written:
        print(f"wrote {p}")
    return 0


def cmd_synth(args) -> int:
    if args.dataset == "two-gaussian":
        points = synthetic.two_gaussian_points(args.seed)
        eta = args.eta if args.eta is not None else synthetic.TWO_GAUSSIAN_ETA
    else:  # d2: the two-point geometry as a 2-sample dataset
        points = [(np.asarray(synthetic.D2_X1), 1), (np.asarray(synthetic.D2_X2), 1)]
        eta = args.eta if args.eta is not None else 0.01
    log = synthetic.generate_linear_log(points, args.flip_fraction, eta, args.steps, args.seed)
    dynlog.write_log(log, args.out, dynlog.infer_format(args.out))
    flips = int(log.noise_flags.sum())
    print(f"generated {log.n} samples x {log.t_max} epochs ({flips} flipped labels, eta={eta})")
    print(f"wrote {args.out}")
    return 0


def _check(name: str, ok: bool, detail: str = "") -> bool:
    print(f"{'PASS' if ok else 'FAIL'}  {name}{'  ' + detail if detail else ''}")
    return ok


def _monotone_non_decreasing(series: np.ndarray, tol: float = 1e-10) -> bool:
    return series.size < 2 or bool(np.all(np.diff(series) >= -tol))


def run_theory_checks(traj: synthetic.TwoPointTrajectory) -> bool:
    """Print one PASS/FAIL line per empirical check; True when all pass."""
    sat = traj.saturation_index
    ok = True

    found = traj.t_v is not None and traj.t_vm is not None
    ok &= _check("crossing times exist", found, f"T_v={traj.t_v} T_vm={traj.t_vm}")
    if found:
        ok &= _check("T_vm < T_v", traj.t_vm < traj.t_v)

    ratio = traj.ratio[np.isfinite(traj.ratio)]
    lo, hi = traj.r0 - 1e-9, traj.r_limit + 1e-9
    ok &= _check(
        "one-step ratio within [R0, R]",
        bool(np.all((ratio >= lo) & (ratio <= hi))),
        f"R0={traj.r0:.6f} R={traj.r_limit:.6f}",
    )
    ok &= _check("one-step ratio non-decreasing", _monotone_non_decreasing(ratio, 1e-12))

    ok &= _check("gamma_V(0) < 1", traj.gamma_v.size > 0 and traj.gamma_v[0] < 1.0)
    ok &= _check("gamma_M(0) == 1", traj.gamma_m.size > 0 and traj.gamma_m[0] == 1.0)
    ok &= _check("gamma_V monotone", _monotone_non_decreasing(traj.gamma_v[:sat]))
    ok &= _check("gamma_M monotone", _monotone_non_decreasing(traj.gamma_m[:sat]))
    ok &= _check("delta_y positive and increasing", bool(np.all(np.diff(traj.dy) > 0)))
    ok &= _check("delta_zeta positive", bool(np.all(traj.dzeta[:sat] > 0)))
    ok &= _check("delta_zeta monotone", _monotone_non_decreasing(traj.dzeta[:sat]))

    mid_ok = True
    for y, zeta in ((traj.y1, traj.zeta1), (traj.y2, traj.zeta2)):
        k = min(len(zeta), sat)
        steps = y[1 : k + 1] - y[:k]
        mid = 0.5 * (y[1 : k + 1] + y[:k])
        mid_ok &= bool(np.all(np.abs(zeta[:k] - mid) < steps / 6.0))
    ok &= _check("zeta within 1/6-step of midpoint", mid_ok)
    return bool(ok)


def cmd_verify_theory(args) -> int:
    if args.preset == "d2":
        x1 = np.asarray(synthetic.D2_X1)
        x2 = np.asarray(synthetic.D2_X2)
    else:
        if args.x1 is None or args.x2 is None:
            raise DualPruneError("--x1 and --x2 are required without --preset d2")
        x1 = np.asarray([float(v) for v in args.x1.split(",")])
        x2 = np.asarray([float(v) for v in args.x2.split(",")])
    config = synthetic.TwoPointConfig(x1, x2, args.eta, args.steps, args.j)

    start = time.perf_counter()
    traj = synthetic.simulate_two_point(config)
    elapsed = time.perf_counter() - start
    print(
        f"simulated {args.steps} steps (eta={args.eta}, J={args.j}) in {elapsed:.3f}s; "
        f"eta stability bound {traj.eta_bound:.6g}"
    )
    all_ok = run_theory_checks(traj)

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        synthetic.trajectory_to_csv(traj, out / "trajectory.csv")
        synthetic.moon_trajectory_to_csv(traj, out / "moon_trajectory.csv")
        plots.render_trajectory(traj, out / "trajectory.png")
        for name in ("trajectory.csv", "moon_trajectory.csv", "trajectory.png"):
            print(f"wrote {out / name}")

    if not all_ok:
        raise TheoryFailure("one or more theory checks failed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualprune",
        description="Training-dynamics scoring, coreset selection, and theory verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="compute a per-sample score table")
    _add_log_args(p)
    p.add_argument("--metric", choices=[m.value for m in Metric], required=True)
    p.add_argument("--t", type=int, help="epoch horizon")
    p.add_argument("--j", type=int, help="window length (dual/dyn-unc)")
    p.add_argument("--epoch", type=int, help="snapshot epoch (el2n/entropy)")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("select", help="select a coreset and write its manifest")
    _add_log_args(p)
    p.add_argument("--metric", choices=[m.value for m in Metric], default=Metric.DUAL.value)
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default=Strategy.THRESHOLD.value)
    p.add_argument("--r", type=float, required=True, help="pruning ratio in [0, 1)")
    p.add_argument("--t", type=int)
    p.add_argument("--j", type=int)
    p.add_argument("--c-dataset", dest="c_dataset", type=float)
    p.add_argument("--big-c", dest="big_c", type=float, default=15.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--out", required=True, help="manifest JSON path")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("report", help="moon export, noise report, stability report")
    _add_log_args(p)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--j", type=int)
    p.add_argument("--manifest", help="manifest JSON for the noise report")
    p.add_argument(
        "--score-tables",
        nargs="*",
        default=[],
        help="two or more score CSVs for the stability report",
    )
    p.add_argument("--metric", choices=[m.value for m in Metric], default=Metric.DUAL.value)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="generate a synthetic dynamics log")
    p.add_argument("--dataset", choices=["two-gaussian", "d2"], default="two-gaussian")
    p.add_argument("--flip-fraction", type=float, default=0.0)
    p.add_argument("--eta", type=float, help="learning rate (default per dataset)")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify-theory", help="run the two-point empirical checks")
    p.add_argument("--preset", choices=["d2"])
    p.add_argument("--x1", help="comma-separated 2-vector")
    p.add_argument("--x2", help="comma-separated 2-vector")
    p.add_argument("--eta", type=float, default=0.01)
    p.add_argument("--steps", type=int, default=3000)
    p.add_argument("--j", type=int, default=10)
    p.add_argument("--out", help="directory for trajectory CSVs and figures")
    p.set_defaults(func=cmd_verify_theory)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (AssumptionError, TheoryFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DualPruneError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
