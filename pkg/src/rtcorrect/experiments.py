"""Scenario definitions and the replicated-run evaluation harness.

Two shipped scenarios exercise the detection-bias mechanism: two equal
populations with detection probabilities 0.3 and 0.8, an epidemic wave that
starts in the low-detection group and spills weakly into the other, and a
generation interval of either one day (scenario A) or 3-4 days with
incubation (scenario B). The harness emits single-run panel data and
replicated error summaries of the naive and corrected estimators against
the all-cases reference.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import io
from .core import derive_seed
from .errors import EmptyOverlap, ValidationError, WindowNotFound
from .estimators import (
    ErrorSummary,
    EstimatorOptions,
    estimate_rt_corrected,
    estimate_rt_naive,
    estimate_rt_true,
    rt_error_summary,
)
from .latent import McmcConfig, rt_posterior, sample_latent_known_rates
from .simulate import (
    ScenarioConfig,
    SimulationOutput,
    peak_times,
    simulate,
    symptomatic_fraction,
)

SCENARIO_NAMES = ("A", "B")

#: Fraction thresholds bounding the transition window (strictly between the
#: two plateau detection rates 0.3 and 0.8), plus alternatives whose error
#: summaries the report carries so the window choice's impact is visible.
DEFAULT_THRESHOLDS = (0.35, 0.75)
SENSITIVITY_THRESHOLDS = ((0.32, 0.78), (0.40, 0.70))

#: Total-infection floor for locating the transition midpoint; keeps tiny
#: early-epidemic counts from producing spurious fraction crossings.
WINDOW_MIN_TOTAL = 200

#: Windowed-denominator floor for "large count" comparisons such as the
#: Bayesian-vs-corrected agreement check, where the Gaussian approximation
#: of the binomial observation model is accurate.
LARGE_COUNT_MIN_DENOMINATOR = 200.0


def available_scenarios() -> tuple[str, ...]:
    return SCENARIO_NAMES


def scenario_config(
    name: str,
    rng_seed: int | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> ScenarioConfig:
    """Load a shipped scenario, optionally reseeded and with field overrides.

    Overrides use scenario-config keys (unknown keys are rejected with a
    suggestion, like file loading).
    """
    key = name.strip().upper()
    if key not in SCENARIO_NAMES:
        raise ValidationError(
            f"unknown scenario '{name}'; available: {', '.join(SCENARIO_NAMES)}"
        )
    path = resources.files("rtcorrect").joinpath(f"configs/scenario_{key.lower()}.json")
    with resources.as_file(path) as p:
        config = io.load_scenario_config(p)
    doc = io.scenario_config_to_dict(config)
    if rng_seed is not None:
        doc["rng_seed"] = int(rng_seed)
    if overrides:
        for k, v in overrides.items():
            if k not in doc:
                raise ValidationError(f"unknown scenario config key '{k}'")
            doc[k] = v
    return io.scenario_config_from_dict(doc)


def find_transition_window(
    fraction: np.ndarray,
    defined: np.ndarray,
    totals: np.ndarray,
    lo: float = DEFAULT_THRESHOLDS[0],
    hi: float = DEFAULT_THRESHOLDS[1],
    min_total: int = WINDOW_MIN_TOTAL,
) -> tuple[int, int]:
    """Locate the time span where the detected fraction crosses lo..hi.

    Anchors on the first time the fraction passes the midpoint of the two
    plateaus with at least ``min_total`` infections, then extends to the last
    time at or below ``lo`` before it and the first time at or above ``hi``
    after it. Returns the inclusive [start, end] span strictly between the
    thresholds; raises WindowNotFound when no anchored crossing exists.
    """
    fraction = np.asarray(fraction, dtype=np.float64)
    defined = np.asarray(defined, dtype=bool)
    totals = np.asarray(totals)
    mid_level = (lo + hi) / 2.0
    anchored = defined & (totals >= min_total) & (fraction >= mid_level)
    if not np.any(anchored):
        raise WindowNotFound(
            f"detected fraction never reaches {mid_level:.3f} with >= {min_total} cases"
        )
    t_mid = int(np.flatnonzero(anchored)[0])
    below = np.flatnonzero(defined[:t_mid] & (fraction[:t_mid] <= lo))
    start = int(below[-1]) + 1 if below.size else int(np.flatnonzero(defined)[0])
    above = np.flatnonzero(defined & (fraction >= hi))
    above = above[above >= t_mid]
    end = int(above[0]) - 1 if above.size else int(np.flatnonzero(defined)[-1])
    if end < start:
        raise WindowNotFound(
            f"fraction jumps {lo}..{hi} with no interior time near t={t_mid}"
        )
    return start, end


@dataclass(frozen=True)
class Figure1Bundle:
    """One simulated run with everything needed for the four panel datasets."""

    scenario: str
    config: ScenarioConfig
    sim: SimulationOutput
    fraction: np.ndarray
    fraction_defined: np.ndarray
    rt_naive: Any
    rt_true: Any
    rt_corrected: Any
    window: tuple[int, int] | None
    paths: dict[str, Path] = field(default_factory=dict)


def run_figure1(
    scenario: str,
    rng_seed: int,
    out_dir: str | Path | None = None,
    opts: EstimatorOptions = EstimatorOptions(),
    overrides: Mapping[str, Any] | None = None,
) -> Figure1Bundle:
    """Simulate one run and assemble the four aligned panel datasets.

    Panels: per-group daily infections, per-group detected cases, detected
    fraction, and the three R_t series (naive, true, corrected). When
    ``out_dir`` is given the datasets are written as fig1_<scenario>_*.csv.
    """
    config = scenario_config(scenario, rng_seed=rng_seed, overrides=overrides)
    sim = simulate(config)
    fraction, fdef = symptomatic_fraction(sim.infections, sim.symptomatics)
    rt_true = estimate_rt_true(sim.infections, config.gi, opts)
    rt_naive = estimate_rt_naive(sim.symptomatics, config.gi, opts)
    rt_corrected = estimate_rt_corrected(sim.symptomatics, config.rates, config.gi, opts)
    try:
        window = find_transition_window(fraction, fdef, sim.infections.totals())
    except WindowNotFound:
        window = None
    paths: dict[str, Path] = {}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        tag = scenario.strip().upper()
        paths["infections"] = io.write_grouped_csv(
            sim.infections, out / f"fig1_{tag}_infections.csv"
        )
        paths["symptomatics"] = io.write_grouped_csv(
            sim.symptomatics, out / f"fig1_{tag}_symptomatics.csv"
        )
        paths["fraction"] = io.write_fraction_csv(
            fraction, fdef, out / f"fig1_{tag}_fraction.csv"
        )
        paths["rt_naive"] = io.write_rt_csv(rt_naive, out / f"fig1_{tag}_rt_naive.csv")
        paths["rt_true"] = io.write_rt_csv(rt_true, out / f"fig1_{tag}_rt_true.csv")
        paths["rt_corrected"] = io.write_rt_csv(
            rt_corrected, out / f"fig1_{tag}_rt_corrected.csv"
        )
    return Figure1Bundle(
        scenario=scenario.strip().upper(),
        config=config,
        sim=sim,
        fraction=fraction,
        fraction_defined=fdef,
        rt_naive=rt_naive,
        rt_true=rt_true,
        rt_corrected=rt_corrected,
        window=window,
        paths=paths,
    )


@dataclass(frozen=True)
class ReplicateSummary:
    """Error summaries of one replicate over its transition window."""

    replicate: int
    seed: int
    window: tuple[int, int]
    naive: ErrorSummary
    corrected: ErrorSummary
    peak_lag: int
    mcmc: ErrorSummary | None = None


@dataclass(frozen=True)
class ReplicateReport:
    """Aggregated errors of the estimators across independent replicates.

    ``mae_ratio`` is the across-replicate mean absolute error of the naive
    estimator divided by the corrected estimator's; per-replicate values and
    pooled per-time differences are retained so either reading of the error
    distribution can be reproduced. ``wall_time_seconds`` is diagnostic
    metadata and deliberately kept out of the serialized report so repeated
    runs are byte-identical.
    """

    scenario: str
    n_replicates: int
    base_seed: int
    thresholds: tuple[float, float]
    summaries: tuple[ReplicateSummary, ...]
    naive_mae: float
    corrected_mae: float
    mae_ratio: float
    naive_mean_rel_dev: float
    corrected_mean_rel_dev: float
    naive_mean_diff: float
    corrected_mean_diff: float
    n_corrected_not_worse: int
    median_peak_lag: float
    calibrated_epsilon: float
    seed_infections: tuple[tuple[int, int, int], ...]
    burn_in_steps: int
    sensitivity: tuple[dict[str, Any], ...]
    bayes_spot_check: dict[str, Any] | None
    mcmc_in_loop: bool
    wall_time_seconds: float

    def to_report_dict(self) -> dict[str, Any]:
        """Deterministic JSON-ready report (volatile timing excluded)."""
        doc: dict[str, Any] = {
            "scenario": self.scenario,
            "replicates": self.n_replicates,
            "base_seed": self.base_seed,
            "window_thresholds": list(self.thresholds),
            "burn_in_steps": self.burn_in_steps,
            "calibrated_epsilon": self.calibrated_epsilon,
            "seed_infections": [list(s) for s in self.seed_infections],
            "median_peak_lag": self.median_peak_lag,
            "aggregate": {
                "naive_mae": self.naive_mae,
                "corrected_mae": self.corrected_mae,
                "mae_ratio_naive_over_corrected": self.mae_ratio,
                "naive_mean_rel_dev": self.naive_mean_rel_dev,
                "corrected_mean_rel_dev": self.corrected_mean_rel_dev,
                "naive_mean_diff": self.naive_mean_diff,
                "corrected_mean_diff": self.corrected_mean_diff,
                "replicates_corrected_not_worse": self.n_corrected_not_worse,
            },
            "sensitivity": list(self.sensitivity),
            "mcmc_in_loop": self.mcmc_in_loop,
        }
        if self.bayes_spot_check is not None:
            doc["bayes_spot_check"] = self.bayes_spot_check
        return doc


def _replicate_errors(
    sim: SimulationOutput,
    config: ScenarioConfig,
    opts: EstimatorOptions,
    lo: float,
    hi: float,
):
    """Window + naive/corrected error summaries for one simulated run."""
    fraction, fdef = symptomatic_fraction(sim.infections, sim.symptomatics)
    start, end = find_transition_window(
        fraction, fdef, sim.infections.totals(), lo=lo, hi=hi
    )
    rt_true = estimate_rt_true(sim.infections, config.gi, opts)
    rt_naive = estimate_rt_naive(sim.symptomatics, config.gi, opts)
    rt_corr = estimate_rt_corrected(sim.symptomatics, config.rates, config.gi, opts)
    naive = rt_error_summary(rt_naive, rt_true, start, end)
    corrected = rt_error_summary(rt_corr, rt_true, start, end)
    return (start, end), naive, corrected, rt_true


def run_replicates(
    scenario: str,
    n: int = 100,
    base_seed: int = 1,
    opts: EstimatorOptions = EstimatorOptions(),
    thresholds: tuple[float, float] = DEFAULT_THRESHOLDS,
    overrides: Mapping[str, Any] | None = None,
    mcmc_in_loop: bool = False,
    spot_check: bool = True,
    mcmc: McmcConfig | None = None,
) -> ReplicateReport:
    """Run n independent simulations (seeds base_seed + i) and aggregate errors.

    Each replicate's transition window is located from its own detected
    fraction, and both estimators are scored against the all-cases reference
    over that window. The latent-count sampler is costly, so by default it
    runs once per scenario (on replicate 0) as a spot check; pass
    ``mcmc_in_loop=True`` to score it in every replicate. Deterministic given
    base_seed.
    """
    if n < 1:
        raise ValidationError(f"replicate count must be >= 1, got {n}")
    lo, hi = thresholds
    started = time.perf_counter()
    summaries: list[ReplicateSummary] = []
    sensitivity_acc: dict[tuple[float, float], list[tuple[float, float, float]]] = {
        pair: [] for pair in SENSITIVITY_THRESHOLDS
    }
    first_sim: SimulationOutput | None = None
    first_config: ScenarioConfig | None = None

    for i in range(n):
        config = scenario_config(scenario, rng_seed=base_seed + i, overrides=overrides)
        sim = simulate(config)
        if i == 0:
            first_sim, first_config = sim, config
        window, naive, corrected, rt_true = _replicate_errors(
            sim, config, opts, lo, hi
        )
        peaks = peak_times(sim.infections)
        lag = int(peaks[-1] - peaks[0])
        mcmc_summary = None
        if mcmc_in_loop:
            mcmc_summary = _mcmc_error_summary(
                sim, config, opts, window, rt_true, base_seed + i, mcmc
            )
        summaries.append(
            ReplicateSummary(
                replicate=i,
                seed=base_seed + i,
                window=window,
                naive=naive,
                corrected=corrected,
                peak_lag=lag,
                mcmc=mcmc_summary,
            )
        )
        for pair in SENSITIVITY_THRESHOLDS:
            try:
                _, alt_naive, alt_corr, _ = _replicate_errors(
                    sim, config, opts, pair[0], pair[1]
                )
            except (WindowNotFound, EmptyOverlap):
                continue
            sensitivity_acc[pair].append(
                (
                    alt_naive.mean_rel_diff,
                    alt_naive.mean_abs_diff,
                    alt_corr.mean_abs_diff,
                )
            )

    naive_maes = np.array([s.naive.mean_abs_diff for s in summaries])
    corr_maes = np.array([s.corrected.mean_abs_diff for s in summaries])
    naive_mae = float(naive_maes.mean())
    corrected_mae = float(corr_maes.mean())
    sensitivity = tuple(
        {
            "thresholds": list(pair),
            "replicates": len(rows),
            "naive_mean_rel_dev": float(np.mean([r[0] for r in rows])),
            "mae_ratio_naive_over_corrected": float(
                np.mean([r[1] for r in rows]) / np.mean([r[2] for r in rows])
            ),
        }
        for pair, rows in sensitivity_acc.items()
        if rows
    )

    spot: dict[str, Any] | None = None
    if spot_check and not mcmc_in_loop:
        assert first_sim is not None and first_config is not None
        spot = _bayes_spot_check(first_sim, first_config, base_seed, mcmc)

    wall = time.perf_counter() - started
    return ReplicateReport(
        scenario=scenario.strip().upper(),
        n_replicates=n,
        base_seed=base_seed,
        thresholds=(float(lo), float(hi)),
        summaries=tuple(summaries),
        naive_mae=naive_mae,
        corrected_mae=corrected_mae,
        mae_ratio=float(naive_mae / corrected_mae),
        naive_mean_rel_dev=float(np.mean([s.naive.mean_rel_diff for s in summaries])),
        corrected_mean_rel_dev=float(
            np.mean([s.corrected.mean_rel_diff for s in summaries])
        ),
        naive_mean_diff=float(np.mean([s.naive.mean_diff for s in summaries])),
        corrected_mean_diff=float(
            np.mean([s.corrected.mean_diff for s in summaries])
        ),
        n_corrected_not_worse=int(np.sum(corr_maes <= naive_maes)),
        median_peak_lag=float(np.median([s.peak_lag for s in summaries])),
        calibrated_epsilon=_leak_coupling(first_config),
        seed_infections=first_config.seed_infections,
        burn_in_steps=first_config.gi.max_lag,
        sensitivity=sensitivity,
        bayes_spot_check=spot,
        mcmc_in_loop=mcmc_in_loop,
        wall_time_seconds=wall,
    )


def _leak_coupling(config: ScenarioConfig) -> float:
    """Largest off-diagonal coupling entry (the calibrated leak epsilon)."""
    off = config.coupling - np.diag(np.diag(config.coupling))
    return float(off.max()) if off.size else 0.0


def _spot_mcmc_config(base_seed: int, mcmc: McmcConfig | None) -> McmcConfig:
    if mcmc is not None:
        return mcmc
    return McmcConfig(
        n_samples=800,
        burn_in=600,
        thin=3,
        proposal_width=3,
        rng_seed=derive_seed(base_seed, "mcmc-spot-check"),
    )


def _bayes_spot_check(
    sim: SimulationOutput,
    config: ScenarioConfig,
    base_seed: int,
    mcmc: McmcConfig | None,
) -> dict[str, Any]:
    """Once-per-scenario check that the posterior median tracks the corrected MLE."""
    cfg = _spot_mcmc_config(base_seed, mcmc)
    opts = EstimatorOptions(min_denominator=LARGE_COUNT_MIN_DENOMINATOR)
    posterior = sample_latent_known_rates(sim.symptomatics, config.rates, mcmc=cfg)
    rt_bayes = rt_posterior(posterior, config.gi, opts)
    rt_corr = estimate_rt_corrected(sim.symptomatics, config.rates, config.gi, opts)
    gaps = []
    for t in rt_bayes.defined_times():
        c = rt_corr.value_at(int(t))
        b = rt_bayes.value_at(int(t))
        if c is not None and b is not None and c > 0:
            gaps.append(abs(b - c) / c)
    return {
        "n_samples": cfg.n_samples,
        "rng_seed": cfg.rng_seed,
        "min_denominator": opts.min_denominator,
        "n_times": len(gaps),
        "max_rel_gap_vs_corrected": float(max(gaps)) if gaps else None,
        "mean_rel_gap_vs_corrected": float(np.mean(gaps)) if gaps else None,
        "acceptance_rate": round(posterior.acceptance_rate, 6),
    }


def _mcmc_error_summary(
    sim: SimulationOutput,
    config: ScenarioConfig,
    opts: EstimatorOptions,
    window: tuple[int, int],
    rt_true,
    seed: int,
    mcmc: McmcConfig | None,
) -> ErrorSummary | None:
    cfg = _spot_mcmc_config(seed, mcmc)
    posterior = sample_latent_known_rates(sim.symptomatics, config.rates, mcmc=cfg)
    rt_bayes = rt_posterior(posterior, config.gi, opts)
    try:
        return rt_error_summary(rt_bayes, rt_true, window[0], window[1])
    except EmptyOverlap:
        return None


def write_report(report: ReplicateReport, out_dir: str | Path) -> dict[str, Path]:
    """Write replicates_<scenario>.csv, differences_<scenario>.csv and report_<scenario>.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tag = report.scenario
    paths: dict[str, Path] = {}

    rep_path = out / f"replicates_{tag}.csv"
    with open(rep_path, "w", newline="") as fh:
        import csv as _csv

        writer = _csv.writer(fh, lineterminator="\n")
        header = [
            "replicate",
            "seed",
            "window_start",
            "window_end",
            "n_times",
            "peak_lag",
            "naive_mean_diff",
            "naive_mae",
            "naive_max_abs_diff",
            "naive_mean_rel_diff",
            "corrected_mean_diff",
            "corrected_mae",
            "corrected_max_abs_diff",
            "corrected_mean_rel_diff",
        ]
        if report.mcmc_in_loop:
            header += ["mcmc_mae", "mcmc_mean_diff"]
        writer.writerow(header)
        for s in report.summaries:
            row = [
                s.replicate,
                s.seed,
                s.window[0],
                s.window[1],
                s.naive.n_used,
                s.peak_lag,
                io._fmt(s.naive.mean_diff),
                io._fmt(s.naive.mean_abs_diff),
                io._fmt(s.naive.max_abs_diff),
                io._fmt(s.naive.mean_rel_diff),
                io._fmt(s.corrected.mean_diff),
                io._fmt(s.corrected.mean_abs_diff),
                io._fmt(s.corrected.max_abs_diff),
                io._fmt(s.corrected.mean_rel_diff),
            ]
            if report.mcmc_in_loop:
                if s.mcmc is not None:
                    row += [io._fmt(s.mcmc.mean_abs_diff), io._fmt(s.mcmc.mean_diff)]
                else:
                    row += ["", ""]
            writer.writerow(row)
    paths["replicates"] = rep_path

    diff_path = out / f"differences_{tag}.csv"
    with open(diff_path, "w", newline="") as fh:
        import csv as _csv

        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(["replicate", "t", "naive_diff", "corrected_diff"])
        for s in report.summaries:
            corr_by_t = dict(zip(s.corrected.times.tolist(), s.corrected.diffs))
            for t, d in zip(s.naive.times.tolist(), s.naive.diffs):
                if t in corr_by_t:
                    writer.writerow([s.replicate, t, io._fmt(d), io._fmt(corr_by_t[t])])
    paths["differences"] = diff_path

    paths["report"] = io.write_json(
        report.to_report_dict(), out / f"report_{tag}.json"
    )
    return paths
