"""Command-line interface.

Numeric results always go to files; progress and diagnostics go to stderr.
Every module error maps to a distinct exit code (see ``--help``), so scripts
can branch on failure modes.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any

from . import io
from .core import derive_seed
from .errors import InvalidArguments, RtcorrectError, exit_code_table
from .estimators import (
    EstimatorOptions,
    estimate_rt_corrected,
    estimate_rt_naive,
    estimate_rt_true,
)
from .experiments import (
    SCENARIO_NAMES,
    run_figure1,
    run_replicates,
    write_report,
)
from .latent import (
    McmcConfig,
    rt_posterior,
    sample_joint_unknown_rates,
    sample_latent_known_rates,
)
from .simulate import simulate, thin_symptomatics


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def _parse_overrides(pairs: list[str] | None) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    for pair in pairs or []:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise InvalidArguments(f"--set expects key=value, got {pair!r}")
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    return overrides


def _estimator_options(args: argparse.Namespace) -> EstimatorOptions:
    if getattr(args, "options", None):
        doc = io._load_json(args.options)
        opts = io.estimator_options_from_dict(doc)
        base = {"window": opts.window, "min_denominator": opts.min_denominator}
    else:
        base = {"window": 1, "min_denominator": 5.0}
    if args.window is not None:
        base["window"] = args.window
    if args.min_denominator is not None:
        base["min_denominator"] = args.min_denominator
    return EstimatorOptions(**base)


def _scenario_or_config(args: argparse.Namespace):
    from .experiments import scenario_config

    overrides = _parse_overrides(getattr(args, "set", None))
    if args.config is not None:
        config = io.load_scenario_config(args.config)
        doc = io.scenario_config_to_dict(config)
        if args.seed is not None:
            doc["rng_seed"] = args.seed
        for k, v in overrides.items():
            if k not in doc:
                raise InvalidArguments(f"unknown scenario config key '{k}'")
            doc[k] = v
        return io.scenario_config_from_dict(doc)
    if args.scenario is None:
        raise InvalidArguments("provide either --scenario or --config")
    return scenario_config(args.scenario, rng_seed=args.seed, overrides=overrides)


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _scenario_or_config(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = simulate(config)
    paths = [
        io.write_grouped_csv(result.infections, out / "infections.csv"),
        io.write_grouped_csv(result.symptomatics, out / "symptomatics.csv"),
        io.write_grouped_csv(result.susceptibles, out / "susceptibles.csv"),
    ]
    _progress(f"simulated {config.horizon} steps; wrote {', '.join(map(str, paths))}")
    return 0


def cmd_thin(args: argparse.Namespace) -> int:
    infections = io.read_grouped_csv(args.input)
    rates = io.parse_rates(args.rates)
    thinned = thin_symptomatics(infections, rates, args.seed)
    path = io.write_grouped_csv(thinned, args.output)
    _progress(f"wrote {path}")
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    series = io.read_grouped_csv(args.input)
    gi = io.read_generation_interval(args.gi)
    opts = _estimator_options(args)
    if args.method == "corrected":
        if args.rates is None:
            raise InvalidArguments("--method corrected requires --rates")
        rt = estimate_rt_corrected(series, io.parse_rates(args.rates), gi, opts)
    elif args.method == "naive":
        rt = estimate_rt_naive(series, gi, opts)
    else:
        rt = estimate_rt_true(series, gi, opts)
    output = args.output or f"rt_{args.method}.csv"
    path = io.write_rt_csv(rt, output)
    _progress(f"wrote {path}")
    return 0


def cmd_mcmc(args: argparse.Namespace) -> int:
    series = io.read_grouped_csv(args.input)
    gi = io.read_generation_interval(args.gi)
    if (args.rates is None) == (args.priors is None):
        raise InvalidArguments("provide exactly one of --rates or --priors")
    if args.mcmc_config:
        mcmc = io.mcmc_config_from_dict(io._load_json(args.mcmc_config))
        mcmc_fields = {
            "n_samples": mcmc.n_samples,
            "burn_in": mcmc.burn_in,
            "thin": mcmc.thin,
            "proposal_width": mcmc.proposal_width,
        }
    else:
        defaults = McmcConfig()
        mcmc_fields = {
            "n_samples": defaults.n_samples,
            "burn_in": defaults.burn_in,
            "thin": defaults.thin,
            "proposal_width": defaults.proposal_width,
        }
    for field, flag in (
        ("n_samples", "samples"),
        ("burn_in", "burn_in"),
        ("thin", "thin"),
        ("proposal_width", "width"),
    ):
        value = getattr(args, flag)
        if value is not None:
            mcmc_fields[field] = value
    mcmc = McmcConfig(rng_seed=derive_seed(args.seed, "mcmc"), **mcmc_fields)

    started = time.perf_counter()
    if args.rates is not None:
        posterior = sample_latent_known_rates(
            series, io.parse_rates(args.rates), prior_cap=args.prior_cap, mcmc=mcmc
        )
    else:
        posterior = sample_joint_unknown_rates(
            series, io.parse_priors(args.priors), prior_cap=args.prior_cap, mcmc=mcmc
        )
    _progress(
        f"sampled {posterior.n_samples} draws in {time.perf_counter() - started:.1f}s "
        f"(acceptance rate {posterior.acceptance_rate:.2f})"
    )
    opts = _estimator_options(args)
    rt = rt_posterior(posterior, gi, opts)
    path = io.write_rt_csv(rt, args.output)
    _progress(f"wrote {path}")
    if args.save_draws:
        for p in io.write_latent_draws(posterior, args.save_draws):
            _progress(f"wrote {p}")
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    overrides = _parse_overrides(args.set)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    opts = EstimatorOptions(
        window=args.window if args.window is not None else 1,
        min_denominator=(
            args.min_denominator if args.min_denominator is not None else 5.0
        ),
    )

    bundle = run_figure1(
        args.scenario, rng_seed=args.seed, out_dir=out, opts=opts,
        overrides=overrides or None,
    )
    _progress(f"figure-1 datasets for scenario {bundle.scenario} written to {out}")

    started = time.perf_counter()
    report = run_replicates(
        args.scenario,
        n=args.replicates,
        base_seed=args.seed,
        opts=opts,
        overrides=overrides or None,
        mcmc_in_loop=args.mcmc_in_loop,
        spot_check=not args.no_spot_check,
    )
    paths = write_report(report, out)
    _progress(
        f"{report.n_replicates} replicates in {time.perf_counter() - started:.1f}s "
        f"(wall {report.wall_time_seconds:.1f}s); "
        f"MAE ratio naive/corrected = {report.mae_ratio:.2f}"
    )
    for p in paths.values():
        _progress(f"wrote {p}")

    if not args.no_plots:
        from . import plots

        fig1 = plots.render_figure1(bundle, out / f"fig1_{bundle.scenario}.png")
        fig2 = plots.render_replicate_boxplots(
            report, out / f"fig2_{report.scenario}.png"
        )
        _progress(f"wrote {fig1}")
        _progress(f"wrote {fig2}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rtcorrect",
        description=(
            "Estimate and correct reproduction numbers when case detection "
            "depends on a group covariate."
        ),
        epilog=exit_code_table(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the stochastic multi-group SI simulator")
    p.add_argument("--scenario", choices=SCENARIO_NAMES, help="shipped scenario")
    p.add_argument("--config", help="scenario config JSON file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a scenario config field (JSON value)")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("thin", help="binomially thin infections into detected cases")
    p.add_argument("--input", required=True, help="grouped infections CSV")
    p.add_argument("--rates", required=True, help="per-group rates, e.g. 0.3,0.8")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", default="symptomatics.csv")
    p.set_defaults(handler=cmd_thin)

    p = sub.add_parser("estimate", help="closed-form R_t estimators")
    p.add_argument("--method", choices=("naive", "true", "corrected"), required=True)
    p.add_argument("--input", required=True, help="grouped counts CSV")
    p.add_argument("--gi", required=True, help="generation-interval CSV")
    p.add_argument("--rates", help="per-group rates (corrected method)")
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--min-denominator", type=float, default=None)
    p.add_argument("--options", help="estimator options JSON file")
    p.add_argument("--output", default=None, help="default rt_<method>.csv")
    p.set_defaults(handler=cmd_estimate)

    p = sub.add_parser("mcmc", help="latent-count posterior sampling")
    p.add_argument("--input", required=True, help="grouped detected-counts CSV")
    p.add_argument("--gi", required=True, help="generation-interval CSV")
    p.add_argument("--rates", help="known per-group rates")
    p.add_argument("--priors", help="Beta priors alpha:beta per group (unknown rates)")
    p.add_argument("--prior-cap", type=int, default=5)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--thin", type=int, default=None)
    p.add_argument("--width", type=int, default=None, help="proposal half-width floor")
    p.add_argument("--mcmc-config", help="mcmc config JSON file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--min-denominator", type=float, default=None)
    p.add_argument("--options", help="estimator options JSON file")
    p.add_argument("--output", default="rt_posterior.csv")
    p.add_argument("--save-draws", help="directory for raw posterior draws")
    p.set_defaults(handler=cmd_mcmc)

    p = sub.add_parser("experiment", help="panel datasets plus replicated error report")
    p.add_argument("--scenario", choices=SCENARIO_NAMES, required=True)
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--seed", type=int, default=1, help="base seed")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a scenario config field (JSON value)")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--min-denominator", type=float, default=None)
    p.add_argument("--mcmc-in-loop", action="store_true",
                   help="score the sampler in every replicate (slow)")
    p.add_argument("--no-spot-check", action="store_true",
                   help="skip the once-per-scenario sampler spot check")
    p.add_argument("--no-plots", action="store_true", help="skip PNG rendering")
    p.set_defaults(handler=cmd_experiment)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except RtcorrectError as exc:
        print(f"rtcorrect: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # pragma: no cover - defensive
        print(f"rtcorrect: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
