"""Stochastic discrete-time multi-group SI epidemic generator.

Two-layer generative process: finite-population transmission with
susceptible depletion and asymmetric group coupling, followed by binomial
thinning of infections into detected (symptomatic) cases. Every draw is a
pure function of the configuration, including its seed, so independent
simulations can run concurrently with no shared state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    GenerationInterval,
    GroupedSeries,
    SymptomaticRates,
    derive_seed,
)
from .errors import DimensionMismatch, InvalidConfig, SeedExceedsPopulation


@dataclass(frozen=True)
class ScenarioConfig:
    """Full specification of one simulation run.

    Attributes:
        group_sizes: population of each group (individuals).
        r0: basic reproduction number; early-phase growth matches r0 while
            the susceptible fraction is near 1.
        gi: generation-interval distribution.
        coupling: L-by-L contact matrix, row = infectee group, column =
            infector group; diagonal entries are 1 (within-group contact is
            the reference scale).
        seed_infections: (time, group, count) triples injected additively
            before transmission from them occurs.
        horizon: number of simulated time steps.
        rates: per-group detection probabilities used for thinning.
        rng_seed: 64-bit seed; the run is bit-reproducible given it.
        group_labels: output labels, defaulting to g0..g{L-1}.
    """

    group_sizes: tuple[int, ...]
    r0: float
    gi: GenerationInterval
    coupling: np.ndarray
    seed_infections: tuple[tuple[int, int, int], ...]
    horizon: int
    rates: SymptomaticRates
    rng_seed: int
    group_labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        sizes = tuple(int(n) for n in self.group_sizes)
        if not sizes or any(n <= 0 for n in sizes):
            raise InvalidConfig(f"group sizes must all be > 0, got {sizes}")
        n_groups = len(sizes)
        # r0 == 0 is allowed: it isolates the seeding path (no transmission).
        if not np.isfinite(self.r0) or self.r0 < 0:
            raise InvalidConfig(f"r0 must be finite and >= 0, got {self.r0!r}")
        if int(self.horizon) < 1:
            raise InvalidConfig(f"horizon must be >= 1, got {self.horizon!r}")
        coupling = np.asarray(self.coupling, dtype=np.float64)
        if coupling.shape != (n_groups, n_groups):
            raise InvalidConfig(
                f"coupling must be {n_groups}x{n_groups}, got shape {coupling.shape}"
            )
        if np.any(coupling < 0):
            raise InvalidConfig("coupling entries must be >= 0")
        if not np.allclose(np.diag(coupling), 1.0, rtol=0, atol=1e-12):
            raise InvalidConfig("coupling diagonal entries must equal 1")
        seeds = tuple(
            (int(t), int(g), int(c)) for t, g, c in self.seed_infections
        )
        for t, g, c in seeds:
            if not 0 <= t < int(self.horizon):
                raise InvalidConfig(f"seed time {t} outside horizon {self.horizon}")
            if not 0 <= g < n_groups:
                raise InvalidConfig(f"seed group {g} does not exist")
            if c < 0:
                raise InvalidConfig(f"seed count {c} is negative")
            if c > sizes[g]:
                raise InvalidConfig(
                    f"seed count {c} exceeds group {g} size {sizes[g]}"
                )
        if self.rates.n_groups != n_groups:
            raise DimensionMismatch(
                f"{self.rates.n_groups} detection rates for {n_groups} groups"
            )
        if int(self.rng_seed) < 0:
            raise InvalidConfig("rng_seed must be a non-negative integer")
        labels = tuple(self.group_labels) or tuple(f"g{i}" for i in range(n_groups))
        if len(labels) != n_groups:
            raise InvalidConfig(f"{len(labels)} group labels for {n_groups} groups")
        coupling = coupling.copy()
        coupling.setflags(write=False)
        object.__setattr__(self, "group_sizes", sizes)
        object.__setattr__(self, "r0", float(self.r0))
        object.__setattr__(self, "coupling", coupling)
        object.__setattr__(self, "seed_infections", seeds)
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "rng_seed", int(self.rng_seed))
        object.__setattr__(self, "group_labels", labels)

    @property
    def n_groups(self) -> int:
        return len(self.group_sizes)


@dataclass(frozen=True)
class SimulationOutput:
    """Infections, detected cases and remaining susceptibles per time step.

    Susceptibles are recorded at the end of each step, so per group they are
    non-increasing and always equal group size minus cumulative infections.
    """

    infections: GroupedSeries
    symptomatics: GroupedSeries
    susceptibles: GroupedSeries


def simulate(config: ScenarioConfig) -> SimulationOutput:
    """Run the finite-population SI process described by ``config``.

    For t >= 1 and each group l, the per-capita force of infection is
    lambda_t(l) = (r0 / N_l) * sum_tau p(tau) * sum_m C[l, m] * I_{t-tau}(m),
    and new infections are drawn Binomial(remaining susceptibles,
    1 - exp(-lambda)); the binomial cap on the susceptible pool is what the
    SI structure demands of a finite population. Seeds scheduled at time t
    are injected at the start of step t, so they transmit from t+1 onward.
    Detected cases are then thinned from infections per group.
    """
    n_groups = config.n_groups
    horizon = config.horizon
    sizes = np.array(config.group_sizes, dtype=np.int64)
    rng = np.random.default_rng(derive_seed(config.rng_seed, "transmission"))

    seeds_at = np.zeros((horizon, n_groups), dtype=np.int64)
    for t, g, c in config.seed_infections:
        seeds_at[t, g] += c

    infections = np.zeros((horizon, n_groups), dtype=np.int64)
    susceptibles = np.zeros((horizon, n_groups), dtype=np.int64)
    remaining = sizes.copy()

    for t in range(horizon):
        seeded = seeds_at[t]
        if np.any(seeded > remaining):
            g = int(np.argmax(seeded > remaining))
            raise SeedExceedsPopulation(
                f"seed of {seeded[g]} at t={t} in group {g} exceeds "
                f"{remaining[g]} remaining susceptibles"
            )
        remaining = remaining - seeded

        new = np.zeros(n_groups, dtype=np.int64)
        if t >= 1 and config.r0 > 0:
            history = np.zeros(n_groups, dtype=np.float64)
            for tau in range(1, min(t, config.gi.max_lag) + 1):
                p = config.gi.prob(tau)
                if p:
                    history += p * infections[t - tau]
            pressure = config.coupling @ history
            lam = config.r0 * pressure / sizes
            prob = -np.expm1(-lam)
            new = rng.binomial(remaining, prob)
        remaining = remaining - new

        infections[t] = seeded + new
        susceptibles[t] = remaining

    labels = config.group_labels
    infections_series = GroupedSeries(infections, labels)
    symptomatics = thin_symptomatics(
        infections_series, config.rates, derive_seed(config.rng_seed, "thinning")
    )
    return SimulationOutput(
        infections=infections_series,
        symptomatics=symptomatics,
        susceptibles=GroupedSeries(susceptibles, labels),
    )


def thin_symptomatics(
    infections: GroupedSeries, rates: SymptomaticRates, rng_seed: int
) -> GroupedSeries:
    """Draw detected cases S_t(l) ~ Binomial(I_t(l), pi_l) independently per cell."""
    if rates.n_groups != infections.n_groups:
        raise DimensionMismatch(
            f"{rates.n_groups} detection rates for {infections.n_groups} groups"
        )
    rng = np.random.default_rng(rng_seed)
    drawn = rng.binomial(infections.counts, rates.rates[np.newaxis, :])
    return GroupedSeries(drawn, infections.group_labels)


def symptomatic_fraction(
    infections: GroupedSeries, symptomatics: GroupedSeries
) -> tuple[np.ndarray, np.ndarray]:
    """Per-time detected fraction f_t = sum_l S_t(l) / sum_l I_t(l).

    Returns (fractions, defined): zero-infection days are marked absent in
    the mask rather than reported as 0; fractions are NaN-filled there and
    meaningful only where defined.
    """
    if infections.counts.shape != symptomatics.counts.shape:
        raise DimensionMismatch(
            f"shape {symptomatics.counts.shape} does not match {infections.counts.shape}"
        )
    total_i = infections.totals().astype(np.float64)
    total_s = symptomatics.totals().astype(np.float64)
    defined = total_i > 0
    fraction = np.full(total_i.size, np.nan)
    np.divide(total_s, total_i, out=fraction, where=defined)
    return fraction, defined


def peak_times(series: GroupedSeries) -> np.ndarray:
    """Per-group time index of maximum daily incidence (first on ties)."""
    return series.counts.argmax(axis=0)
