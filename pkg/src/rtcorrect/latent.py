"""Latent infection-count samplers behind the detection model.

Detected counts are a binomial thinning S ~ Binomial(I, pi) of the latent
infections I, which are independent across cells (time, group) once the
detected data and rates are fixed. Known rates therefore reduce to one
integer Metropolis-Hastings chain per cell; unknown rates alternate those
chains with exact conjugate Beta draws in a block Metropolis-within-Gibbs
scheme. All cell chains advance in lockstep through vectorized sweeps, which
is what makes full time-by-group matrices cheap to sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .core import GenerationInterval, GroupedSeries, RtSeries, SymptomaticRates
from .errors import (
    EmptySamples,
    InvalidPrior,
    InvalidRates,
    ValidationError,
)
from .estimators import EstimatorOptions, windowed_renewal_ratio

#: Additive slack on every support cap so zero-count cells keep a real range.
CAP_SLACK = 10


@dataclass(frozen=True)
class McmcConfig:
    """Chain-length and proposal settings for the latent samplers.

    proposal_width is the minimum half-width of the integer random-walk
    proposal; cells whose posterior spread is wider get a proportionally
    wider proposal so mixing stays scale-free.
    """

    n_samples: int = 2000
    burn_in: int = 500
    thin: int = 2
    proposal_width: int = 3
    rng_seed: int = 0

    def __post_init__(self) -> None:
        for name in ("n_samples", "burn_in", "thin", "proposal_width"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name} must be >= 1, got {getattr(self, name)!r}")
            object.__setattr__(self, name, int(getattr(self, name)))
        object.__setattr__(self, "rng_seed", int(self.rng_seed))

    @property
    def total_iterations(self) -> int:
        return self.burn_in + self.n_samples * self.thin


@dataclass(frozen=True)
class BetaPrior:
    """Beta(alpha, beta) prior on one group's detection rate."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and self.beta > 0):
            raise InvalidPrior(
                f"Beta prior needs positive shapes, got ({self.alpha!r}, {self.beta!r})"
            )

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


@dataclass(frozen=True)
class LatentPosterior:
    """Posterior draws of the latent infection matrix (and rates if sampled).

    draws has shape (n_samples, n_times, n_groups); every draw dominates the
    conditioning detected counts cell-wise. rate_draws is present only for
    the unknown-rates scheme, shape (n_samples, n_groups).
    """

    draws: np.ndarray
    group_labels: tuple[str, ...]
    symptomatics: GroupedSeries
    acceptance_rate: float
    rate_draws: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        draws = np.asarray(self.draws, dtype=np.int64)
        if draws.ndim != 3:
            raise ValidationError("draws must have shape (n_samples, n_times, n_groups)")
        if np.any(draws < self.symptomatics.counts[np.newaxis, :, :]):
            raise ValidationError("every latent draw must dominate the detected counts")
        draws.setflags(write=False)
        object.__setattr__(self, "draws", draws)
        if self.rate_draws is not None:
            rates = np.asarray(self.rate_draws, dtype=np.float64)
            if rates.shape != (draws.shape[0], draws.shape[2]):
                raise ValidationError("rate_draws must have shape (n_samples, n_groups)")
            rates.setflags(write=False)
            object.__setattr__(self, "rate_draws", rates)

    @property
    def n_samples(self) -> int:
        return int(self.draws.shape[0])

    def series(self, i: int) -> GroupedSeries:
        """Draw i as a GroupedSeries."""
        return GroupedSeries(self.draws[i], self.group_labels)


def _support_caps(counts: np.ndarray, rates: np.ndarray, prior_cap: int) -> np.ndarray:
    """Upper end of the flat prior range per cell: ceil(cap * S / pi) + slack."""
    return np.ceil(prior_cap * counts / rates).astype(np.int64) + CAP_SLACK


def _proposal_widths(
    counts: np.ndarray, rates: np.ndarray, minimum: int
) -> np.ndarray:
    """Per-cell half-widths matched to the posterior spread, floored at minimum."""
    spread = np.sqrt(np.maximum(counts, 1) * (1.0 - rates)) / rates
    return np.maximum(minimum, np.ceil(spread)).astype(np.int64)


def _log_weight(latent: np.ndarray, counts: np.ndarray, rates: np.ndarray) -> np.ndarray:
    """Unnormalized log posterior of latent counts under the flat prior.

    Proportional to log C(I, S) + (I - S) log(1 - pi); the pi^S factor is
    constant in I and dropped. Rates of exactly 1 collapse to a point mass
    at I = S.
    """
    latent_f = latent.astype(np.float64)
    counts_f = counts.astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = (
            gammaln(latent_f + 1.0)
            - gammaln(latent_f - counts_f + 1.0)
            + (latent_f - counts_f) * np.log1p(-rates)
        )
    sure = rates == 1.0
    if np.any(sure):
        logw = np.where(sure, np.where(latent == counts, 0.0, -np.inf), logw)
    return logw


def _run_cell_sweeps(
    counts: np.ndarray,
    rates_for_cells,
    caps: np.ndarray,
    widths: np.ndarray,
    mcmc: McmcConfig,
    rng: np.random.Generator,
    on_kept=None,
    after_sweep=None,
) -> tuple[np.ndarray, float]:
    """Advance all cell chains in lockstep and collect kept states.

    rates_for_cells is a zero-argument callable so the Gibbs scheme can swap
    rates between sweeps; after_sweep(latent, iteration) runs at the end of
    every sweep and on_kept(latent, k) at every kept draw.
    """
    shape = counts.shape
    rates = rates_for_cells()
    latent = np.maximum(counts, np.rint(counts / rates).astype(np.int64))
    latent = np.minimum(latent, caps)
    logw = _log_weight(latent, counts, rates)

    kept = np.empty((mcmc.n_samples,) + shape, dtype=np.int64)
    accepted = 0
    k = 0
    for it in range(mcmc.total_iterations):
        rates = rates_for_cells()
        magnitude = rng.integers(1, widths + 1)
        sign = rng.integers(0, 2, size=shape) * 2 - 1
        proposal = latent + sign * magnitude
        # Reflect below the lower bound about S - 1/2, i.e. I -> 2S - 1 - I.
        # Reflecting about S itself would give the boundary point a single
        # pre-image and break proposal symmetry.
        proposal = np.where(proposal < counts, 2 * counts - 1 - proposal, proposal)
        new_logw = np.where(
            proposal <= caps, _log_weight(proposal, counts, rates), -np.inf
        )
        with np.errstate(invalid="ignore"):
            accept = np.log(rng.random(shape)) < new_logw - logw
        latent = np.where(accept, proposal, latent)
        logw = np.where(accept, new_logw, logw)
        accepted += int(accept.sum())
        if it >= mcmc.burn_in and (it - mcmc.burn_in) % mcmc.thin == mcmc.thin - 1:
            kept[k] = latent
            if on_kept is not None:
                on_kept(latent, k)
            k += 1
        if after_sweep is not None:
            after_sweep(latent, it)
            logw = _log_weight(latent, counts, rates_for_cells())
    rate = accepted / (mcmc.total_iterations * latent.size)
    return kept, rate


def sample_latent_known_rates(
    symptomatics: GroupedSeries,
    rates: SymptomaticRates,
    prior_cap: int = 5,
    mcmc: McmcConfig = McmcConfig(),
) -> LatentPosterior:
    """Sample latent infections cell-by-cell with known detection rates.

    Each cell (t, l) is targeted independently: posterior proportional to
    Binomial(S; I, pi_l) under a flat prior on integers
    I in [S, ceil(prior_cap * S / pi_l) + 10], sampled with an integer
    random-walk Metropolis-Hastings chain reflected at the lower bound.
    Reproducible given mcmc.rng_seed.
    """
    if rates.n_groups != symptomatics.n_groups:
        raise InvalidRates(
            f"{rates.n_groups} rates for {symptomatics.n_groups} groups"
        )
    counts = symptomatics.counts
    cell_rates = np.broadcast_to(rates.rates, counts.shape)
    caps = _support_caps(counts, cell_rates, prior_cap)
    widths = _proposal_widths(counts, cell_rates, mcmc.proposal_width)
    rng = np.random.default_rng(mcmc.rng_seed)
    kept, acceptance = _run_cell_sweeps(
        counts, lambda: cell_rates, caps, widths, mcmc, rng
    )
    return LatentPosterior(
        draws=kept,
        group_labels=symptomatics.group_labels,
        symptomatics=symptomatics,
        acceptance_rate=acceptance,
    )


def draw_rates_conditional(
    symptomatics: GroupedSeries,
    latent: np.ndarray,
    priors: list[BetaPrior],
    rng: np.random.Generator,
) -> np.ndarray:
    """Exact conjugate draw of detection rates given a latent matrix.

    pi_l ~ Beta(alpha_l + sum_t S_t(l), beta_l + sum_t (I_t(l) - S_t(l))).
    """
    successes = symptomatics.counts.sum(axis=0)
    deficits = np.asarray(latent, dtype=np.int64).sum(axis=0) - successes
    alphas = np.array([p.alpha for p in priors]) + successes
    betas = np.array([p.beta for p in priors]) + deficits
    return rng.beta(alphas, betas)


def sample_joint_unknown_rates(
    symptomatics: GroupedSeries,
    priors: list[BetaPrior],
    prior_cap: int = 5,
    mcmc: McmcConfig = McmcConfig(),
) -> LatentPosterior:
    """Sample latent infections and detection rates jointly.

    Block Metropolis-within-Gibbs: given rates, one vectorized Metropolis-
    Hastings sweep over all latent cells (independent given pi); given the
    latent matrix, exact conjugate Beta draws of the rates. The flat-prior
    support cap uses each group's prior-mean rate, since the true rate is
    unknown in this scheme. Emits paired (latent, rates) draws.
    """
    if len(priors) != symptomatics.n_groups:
        raise InvalidPrior(
            f"{len(priors)} priors for {symptomatics.n_groups} groups"
        )
    counts = symptomatics.counts
    prior_means = np.array([p.mean for p in priors])
    ref_rates = np.broadcast_to(prior_means, counts.shape)
    caps = _support_caps(counts, ref_rates, prior_cap)
    widths = _proposal_widths(counts, ref_rates, mcmc.proposal_width)
    rng = np.random.default_rng(mcmc.rng_seed)

    state = {"rates": prior_means.copy()}
    rate_draws = np.empty((mcmc.n_samples, symptomatics.n_groups))

    def current_rates() -> np.ndarray:
        return np.broadcast_to(state["rates"], counts.shape)

    def on_kept(latent: np.ndarray, k: int) -> None:
        rate_draws[k] = state["rates"]

    def after_sweep(latent: np.ndarray, it: int) -> None:
        state["rates"] = draw_rates_conditional(symptomatics, latent, priors, rng)

    kept, acceptance = _run_cell_sweeps(
        counts, current_rates, caps, widths, mcmc, rng,
        on_kept=on_kept, after_sweep=after_sweep,
    )
    return LatentPosterior(
        draws=kept,
        group_labels=symptomatics.group_labels,
        symptomatics=symptomatics,
        acceptance_rate=acceptance,
        rate_draws=rate_draws,
    )


def rt_posterior(
    latents: LatentPosterior,
    gi: GenerationInterval,
    opts: EstimatorOptions = EstimatorOptions(),
) -> RtSeries:
    """Plug every latent draw into the renewal ratio and summarize per time.

    R_t for a draw is the group-summed incidence over its renewal
    denominator, windowed exactly like the closed-form estimators. A time is
    kept only when it is defined in every draw; the point estimate is the
    across-draw median and ``quantiles`` holds the central 95% interval
    (outer quantiles use order statistics, so two draws bracket both values).
    """
    if latents.n_samples == 0:
        raise EmptySamples("posterior contains no draws")
    totals = latents.draws.sum(axis=2).astype(np.float64)
    per_draw = [windowed_renewal_ratio(row, gi, opts) for row in totals]
    n_times = len(per_draw[0])
    defined = np.ones(n_times, dtype=bool)
    for series in per_draw:
        defined &= series.defined
    values_matrix = np.stack([series.values for series in per_draw])
    medians = np.full(n_times, np.nan)
    quantiles = np.full((n_times, 3), np.nan)
    if np.any(defined):
        block = values_matrix[:, defined]
        med = np.quantile(block, 0.5, axis=0)
        lo = np.quantile(block, 0.025, axis=0, method="lower")
        hi = np.quantile(block, 0.975, axis=0, method="higher")
        medians[defined] = med
        quantiles[defined, 0] = lo
        quantiles[defined, 1] = med
        quantiles[defined, 2] = hi
    return RtSeries(t0=1, values=medians, defined=defined, quantiles=quantiles)
