"""Closed-form reproduction-number estimators and error metrics.

Three plug-in estimators share one windowed renewal ratio:

* naive      -- detected cases only, the standard practice that biases R_t
                whenever the detected fraction drifts;
* true       -- the same ratio on complete infection counts (ground truth
                when those are available, e.g. from a simulation);
* corrected  -- detected counts reweighted by 1/pi_l per group, the
                large-count maximum-likelihood correction.

All functions are pure over immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    GenerationInterval,
    GroupedSeries,
    RtSeries,
    SymptomaticRates,
    renewal_denominators,
    weighted_totals,
)
from .errors import DimensionMismatch, EmptyOverlap, ValidationError


@dataclass(frozen=True)
class EstimatorOptions:
    """Smoothing and definedness knobs shared by all estimators.

    window: trailing smoothing window in days; 1 reproduces per-day
        estimates, real deployments often use 7.
    min_denominator: windowed renewal denominator (expected cases) below
        which the estimate is marked absent instead of exploding.
    """

    window: int = 1
    min_denominator: float = 5.0

    def __post_init__(self) -> None:
        if int(self.window) < 1:
            raise ValidationError(f"window must be >= 1, got {self.window!r}")
        if not self.min_denominator > 0:
            raise ValidationError(
                f"min_denominator must be > 0, got {self.min_denominator!r}"
            )
        object.__setattr__(self, "window", int(self.window))
        object.__setattr__(self, "min_denominator", float(self.min_denominator))


def windowed_renewal_ratio(
    weighted: np.ndarray, gi: GenerationInterval, opts: EstimatorOptions
) -> RtSeries:
    """Windowed ratio of incidence to renewal denominator over a 1-d series.

    R_t = (sum_{s in W(t)} X_s) / (sum_{s in W(t)} Lambda_s) with
    Lambda_s = sum_tau p(tau) X_{s-tau} and W(t) the trailing window
    truncated at s >= 1. This is the Poisson maximum-likelihood estimate of
    a rate held constant over the window. Times with window denominator
    below ``opts.min_denominator`` are absent; enlarging the window only
    adds non-negative terms, so it never turns a defined time absent.
    """
    x = np.asarray(weighted, dtype=np.float64)
    t0 = 1
    n = max(x.size - t0, 0)
    if n == 0:
        return RtSeries(t0=t0, values=np.empty(0), defined=np.empty(0, dtype=bool))
    lam = renewal_denominators(x, gi)
    num = np.empty(n)
    den = np.empty(n)
    for i in range(n):
        t = t0 + i
        s_lo = max(1, t - opts.window + 1)
        num[i] = x[s_lo : t + 1].sum()
        den[i] = lam[s_lo : t + 1].sum()
    defined = den >= opts.min_denominator
    values = np.full(n, np.nan)
    np.divide(num, den, out=values, where=defined)
    return RtSeries(t0=t0, values=values, defined=defined)


def estimate_rt_naive(
    symptomatics: GroupedSeries,
    gi: GenerationInterval,
    opts: EstimatorOptions = EstimatorOptions(),
) -> RtSeries:
    """R_t from detected cases only, ignoring group structure.

    Exact whenever the detected fraction is constant in time (the ratio is
    scale-invariant) and biased in the direction of the fraction's drift
    otherwise.
    """
    return windowed_renewal_ratio(symptomatics.totals().astype(np.float64), gi, opts)


def estimate_rt_true(
    infections: GroupedSeries,
    gi: GenerationInterval,
    opts: EstimatorOptions = EstimatorOptions(),
) -> RtSeries:
    """R_t from complete infection counts (the ground-truth reference)."""
    return windowed_renewal_ratio(infections.totals().astype(np.float64), gi, opts)


def estimate_rt_corrected(
    symptomatics: GroupedSeries,
    rates: SymptomaticRates,
    gi: GenerationInterval,
    opts: EstimatorOptions = EstimatorOptions(),
) -> RtSeries:
    """Detection-corrected R_t using known per-group rates.

    Replaces each group's detected counts with S_t(l) / pi_l in both the
    numerator and the renewal denominator, the maximum-likelihood latent
    incidence under a Gaussian approximation of the binomial observation
    model. With equal rates everywhere the common factor cancels and the
    result matches the naive estimator.
    """
    if rates.n_groups != symptomatics.n_groups:
        raise DimensionMismatch(
            f"{rates.n_groups} rates for {symptomatics.n_groups} groups"
        )
    return windowed_renewal_ratio(
        weighted_totals(symptomatics, rates.inverse()), gi, opts
    )


@dataclass(frozen=True)
class ErrorSummary:
    """Per-time differences of an estimate against a reference series.

    Differences are (estimate - truth) over the requested time range at
    times where both series are defined; relative deviations additionally
    require truth > 0. ``n_skipped`` counts range times absent in either
    series.
    """

    t_start: int
    t_end: int
    times: np.ndarray
    diffs: np.ndarray
    rel_diffs: np.ndarray
    n_used: int
    n_skipped: int
    mean_diff: float
    mean_abs_diff: float
    max_abs_diff: float
    mean_rel_diff: float

    def to_flat_dict(self) -> dict[str, float | int]:
        """Flat JSON-ready record of the scalar summary statistics."""
        return {
            "t_start": self.t_start,
            "t_end": self.t_end,
            "n_used": self.n_used,
            "n_skipped": self.n_skipped,
            "mean_diff": self.mean_diff,
            "mean_abs_diff": self.mean_abs_diff,
            "max_abs_diff": self.max_abs_diff,
            "mean_rel_diff": self.mean_rel_diff,
        }


def rt_error_summary(
    estimate: RtSeries, truth: RtSeries, t_start: int, t_end: int
) -> ErrorSummary:
    """Summarize estimate - truth over the inclusive time range [t_start, t_end].

    Raises EmptyOverlap when no time in the range is defined in both series.
    """
    if t_end < t_start:
        raise EmptyOverlap(f"empty time range [{t_start}, {t_end}]")
    times = []
    diffs = []
    rels = []
    skipped = 0
    for t in range(t_start, t_end + 1):
        e = estimate.value_at(t)
        r = truth.value_at(t)
        if e is None or r is None:
            skipped += 1
            continue
        times.append(t)
        diffs.append(e - r)
        if r > 0:
            rels.append((e - r) / r)
    if not diffs:
        raise EmptyOverlap(
            f"no time in [{t_start}, {t_end}] is defined in both series"
        )
    diffs_arr = np.array(diffs, dtype=np.float64)
    rels_arr = np.array(rels, dtype=np.float64)
    return ErrorSummary(
        t_start=t_start,
        t_end=t_end,
        times=np.array(times, dtype=np.int64),
        diffs=diffs_arr,
        rel_diffs=rels_arr,
        n_used=len(diffs),
        n_skipped=skipped,
        mean_diff=float(diffs_arr.mean()),
        mean_abs_diff=float(np.abs(diffs_arr).mean()),
        max_abs_diff=float(np.abs(diffs_arr).max()),
        mean_rel_diff=float(rels_arr.mean()) if rels_arr.size else float("nan"),
    )
