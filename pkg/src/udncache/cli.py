"""Command line front end.

Three subcommands cover the workflow: ``run`` sweeps an experiment file
and writes CSV, a JSON sidecar and per-tier figures; ``validate`` checks
the analytic engine against Monte Carlo at every sweep point; ``limits``
prints the closed-form large-density and large-skew bounds for the
configured catalog.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .analysis import TierContext, average_sdp
from .asymptotics import SingleSlopeModel, limit_beta, limit_dense
from .catalog import ZipfCatalog
from .channel import ConfigError
from .experiments import (
    ENGINE_NAMES,
    load_spec,
    run_experiment,
    write_csv,
    write_sidecar,
    _Point,
)
from .simulator import estimate_sdp

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="udncache",
        description="Cache hit analysis for dense small-cell networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="sweep an experiment file and write results")
    run.add_argument("config", help="experiment INI file")
    run.add_argument("--out", default=".", help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override the run seed")
    run.add_argument(
        "--trials", type=int, default=None, help="override Monte Carlo trials"
    )
    run.add_argument(
        "--engines",
        default=None,
        help=f"comma list out of: {', '.join(ENGINE_NAMES)}",
    )
    run.add_argument(
        "--full",
        action="store_true",
        help="use the full value grid and trial count from the spec",
    )
    run.add_argument(
        "--timings",
        action="store_true",
        help="include wall-clock columns in the CSV (breaks byte determinism)",
    )
    run.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    val = sub.add_parser(
        "validate", help="compare analysis and Monte Carlo on every sweep point"
    )
    val.add_argument("config", help="experiment INI file")
    val.add_argument("--seed", type=int, default=None)
    val.add_argument("--trials", type=int, default=None)
    val.add_argument(
        "--slack",
        type=float,
        default=1e-3,
        help="systematic slack added to twice the standard error",
    )

    lim = sub.add_parser("limits", help="print closed-form limiting hit rates")
    lim.add_argument("config", help="experiment INI file")
    return parser


def _cmd_run(args) -> int:
    spec = load_spec(args.config)
    engines = args.engines.split(",") if args.engines else None
    result = run_experiment(
        spec,
        engines=engines,
        trials=args.trials,
        seed=args.seed,
        full=args.full,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{spec.name}.csv"
    write_csv(result.rows, csv_path, include_timings=args.timings)
    write_sidecar(result, out_dir / f"{spec.name}.meta.json")
    written = [csv_path, out_dir / f"{spec.name}.meta.json"]
    if not args.no_plot:
        from .plotting import plot_rows

        written += plot_rows(result.rows, out_dir / spec.name, spec.sweep_name)
    for path in written:
        print(path)
    if result.errors:
        for err in result.errors:
            print(
                "error: value=%g strategy=%s engine=%s %s"
                % (
                    err["sweep_value"],
                    err["strategy"],
                    err["engine"],
                    err["message"],
                ),
                file=sys.stderr,
            )
        return 2
    return 0


def _cmd_validate(args) -> int:
    spec = load_spec(args.config)
    seed = spec.seed if args.seed is None else args.seed
    trials = spec.trials if args.trials is None else args.trials
    failures = 0
    for value in spec.values:
        point = _Point(spec, value)
        for strategy in spec.strategies:
            cache = point.placement(strategy)
            ctx = TierContext(point.catalog, cache, point.cfg)
            rep = average_sdp(ctx, point.tu_model, point.uav_model)
            est = estimate_sdp(
                point.catalog,
                cache,
                point.cfg,
                trials=trials,
                seed=seed,
                tu_model=point.tu_model,
                uav_model=point.uav_model,
            )
            for comp in rep.components:
                tier = comp.tier.lower()
                diff = est.average[tier] - comp.average
                tol = 2.0 * (est.average_stderr[tier] + args.slack)
                ok = abs(diff) <= tol
                failures += 0 if ok else 1
                print(
                    "%s=%g %s %s analysis=%.5f mc=%.5f stderr=%.5f "
                    "diff=%+.5f tol=%.5f %s"
                    % (
                        spec.sweep_name,
                        value,
                        strategy,
                        tier,
                        comp.average,
                        est.average[tier],
                        est.average_stderr[tier],
                        diff,
                        tol,
                        "PASS" if ok else "FAIL",
                    )
                )
    print("validate: %s" % ("PASS" if failures == 0 else f"{failures} FAIL"))
    return 0 if failures == 0 else 2


def _cmd_limits(args) -> int:
    spec = load_spec(args.config)
    point = _Point(spec, spec.values[0])
    cfg = point.cfg
    catalog = ZipfCatalog(spec.n_files, spec.zipf_beta)
    m = spec.cache_size
    print("tier,alpha,dense_pcs,dense_ucs,skew_pcs,skew_ucs")
    for tier, h in (("tu", cfg.tu_height_diff), ("uav", cfg.uav_height_diff)):
        model = SingleSlopeModel(spec.single_slope_alpha, h)
        dense_pcs, dense_ucs = limit_dense(catalog, m, cfg, model)
        skew_pcs, skew_ucs = limit_beta(m, spec.n_files, cfg, model)
        print(
            "%s,%g,%.10g,%.10g,%.10g,%.10g"
            % (tier, spec.single_slope_alpha, dense_pcs, dense_ucs, skew_pcs, skew_ucs)
        )
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        return _cmd_limits(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
