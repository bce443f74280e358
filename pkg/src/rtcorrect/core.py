"""Domain types and the renewal-equation arithmetic shared by every module.

The renewal model: incidence at time t equals R_t times the weighted sum of
past incidence, X_t = R_t * sum_tau p(tau) * X_{t-tau}, where p is the
generation-interval distribution. All types here are immutable after
construction and all operations are pure functions, so they are safe for
unrestricted concurrent use.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySupport,
    InvalidRates,
    NegativeCount,
    NegativeMass,
    NotNormalized,
    ValidationError,
)

#: Maximum tolerated deviation of a generation interval's sum from 1.
NORMALIZATION_TOLERANCE = 1e-9


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GenerationInterval:
    """Discrete generation-interval distribution p(tau) for lags tau = 1..max_lag.

    ``probs[i]`` is the probability of generation lag ``i + 1`` days; there is
    no mass at lag 0. Entries must be non-negative and sum to 1 within
    ``NORMALIZATION_TOLERANCE`` (they are renormalized exactly on construction).
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise EmptySupport("generation interval needs at least one lag probability")
        if np.any(probs < 0):
            raise NegativeMass(
                f"generation-interval entries must be >= 0, got minimum {probs.min()!r}"
            )
        total = float(probs.sum())
        if total == 0.0:
            raise EmptySupport("generation interval has zero total probability mass")
        if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
            raise NotNormalized(
                f"generation-interval probabilities sum to {total!r}, expected 1; "
                "renormalize explicitly before constructing"
            )
        if abs(total - 1.0) > 1e-12:
            probs = probs / total
        object.__setattr__(self, "probs", _frozen_array(probs, np.float64))

    @property
    def max_lag(self) -> int:
        """Largest lag with stored probability (T_max)."""
        return int(self.probs.size)

    def prob(self, tau: int) -> float:
        """p(tau); zero outside the stored support (tau < 1 or tau > max_lag)."""
        if tau < 1 or tau > self.max_lag:
            return 0.0
        return float(self.probs[tau - 1])

    def mean_lag(self) -> float:
        """Expected generation lag in days."""
        lags = np.arange(1, self.max_lag + 1, dtype=np.float64)
        return float(lags @ self.probs)


def validate_generation_interval(probs: Sequence[float]) -> GenerationInterval:
    """Validate lag probabilities (indexed from tau = 1) into a GenerationInterval.

    Raises NegativeMass, NotNormalized or EmptySupport instead of silently
    repairing the input: a mis-entered interval changes every downstream number.
    """
    return GenerationInterval(np.asarray(probs, dtype=np.float64))


@dataclass(frozen=True)
class GroupedSeries:
    """Time-by-group matrix of non-negative integer daily case counts.

    Serves both true infection counts and detected (symptomatic) counts.
    ``counts[t, l]`` is the number of new cases at time step ``t`` in group
    ``l``; time is an abstract contiguous integer index starting at 0.
    """

    counts: np.ndarray
    group_labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts)
        if counts.ndim != 2:
            raise ValidationError(
                f"counts must be a rectangular time-by-group matrix, got {counts.ndim} dims"
            )
        if counts.size and not np.issubdtype(counts.dtype, np.integer):
            rounded = np.rint(counts)
            if not np.array_equal(rounded, counts):
                raise ValidationError("counts must be integers")
            counts = rounded
        counts = counts.astype(np.int64)
        if np.any(counts < 0):
            t, l = np.argwhere(counts < 0)[0]
            raise NegativeCount(f"count at t={t}, group={l} is negative")
        labels = tuple(self.group_labels) or tuple(
            f"g{i}" for i in range(counts.shape[1])
        )
        if len(labels) != counts.shape[1]:
            raise DimensionMismatch(
                f"{len(labels)} group labels for {counts.shape[1]} groups"
            )
        object.__setattr__(self, "counts", _frozen_array(counts, np.int64))
        object.__setattr__(self, "group_labels", labels)

    @property
    def n_times(self) -> int:
        return int(self.counts.shape[0])

    @property
    def n_groups(self) -> int:
        return int(self.counts.shape[1])

    def totals(self) -> np.ndarray:
        """Per-time totals summed over groups (int64)."""
        return self.counts.sum(axis=1)


@dataclass(frozen=True)
class SymptomaticRates:
    """Per-group detection probabilities, each strictly in (0, 1].

    Strict positivity keeps the inverse-rate weights 1/pi finite.
    """

    rates: np.ndarray

    def __post_init__(self) -> None:
        rates = np.asarray(self.rates, dtype=np.float64)
        if rates.ndim != 1 or rates.size == 0:
            raise InvalidRates("rates must be a non-empty vector")
        if np.any(rates <= 0) or np.any(rates > 1):
            raise InvalidRates(
                f"each rate must lie in (0, 1], got {rates.tolist()}"
            )
        object.__setattr__(self, "rates", _frozen_array(rates, np.float64))

    @property
    def n_groups(self) -> int:
        return int(self.rates.size)

    def inverse(self) -> np.ndarray:
        """Weights 1/pi_l used by the corrected estimator."""
        return 1.0 / self.rates


@dataclass(frozen=True)
class RtSeries:
    """Per-time reproduction-number estimates with explicit definedness.

    Times where the estimate does not exist (denominator below threshold) are
    marked absent through the ``defined`` mask rather than encoded as 0 or NaN;
    ``values`` is meaningful only where ``defined`` is True. ``quantiles``
    optionally holds per-time (lower, median, upper) posterior quantiles.
    """

    t0: int
    values: np.ndarray
    defined: np.ndarray
    quantiles: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        defined = np.asarray(self.defined, dtype=bool)
        if values.shape != defined.shape or values.ndim != 1:
            raise ValidationError("values and defined must be 1-d arrays of equal length")
        ok = values[defined]
        if ok.size and (not np.all(np.isfinite(ok)) or np.any(ok < 0)):
            raise ValidationError("defined estimates must be finite and >= 0")
        object.__setattr__(self, "values", _frozen_array(values, np.float64))
        object.__setattr__(self, "defined", _frozen_array(defined, bool))
        if self.quantiles is not None:
            q = np.asarray(self.quantiles, dtype=np.float64)
            if q.shape != (values.size, 3):
                raise ValidationError("quantiles must have shape (n_times, 3)")
            object.__setattr__(self, "quantiles", _frozen_array(q, np.float64))

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def t_end(self) -> int:
        """One past the last covered time index."""
        return self.t0 + len(self)

    def value_at(self, t: int) -> float | None:
        """Estimate at absolute time t, or None where absent."""
        i = t - self.t0
        if i < 0 or i >= len(self) or not self.defined[i]:
            return None
        return float(self.values[i])

    def defined_times(self) -> np.ndarray:
        """Absolute time indices where the estimate exists."""
        return self.t0 + np.flatnonzero(self.defined)

    def items(self) -> Iterator[tuple[int, float | None]]:
        """(t, estimate-or-None) pairs over the covered range."""
        for i in range(len(self)):
            yield self.t0 + i, (float(self.values[i]) if self.defined[i] else None)


def weighted_totals(series: GroupedSeries, weights: Sequence[float]) -> np.ndarray:
    """Per-time weighted group sums, sum_l w_l * counts[t, l].

    With weights 1/pi_l this is the inverse-rate-corrected incidence; with
    all-ones weights it is the plain per-time total. Counts stay integers
    until this final weighted sum.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size != series.n_groups:
        raise DimensionMismatch(
            f"{w.size} weights for {series.n_groups} groups"
        )
    return series.counts @ w


def renewal_denominator(totals: Sequence[float], gi: GenerationInterval, t: int) -> float:
    """Renewal-equation weight of past incidence at time t.

    Computes sum over tau of p(tau) * X_{t-tau} for tau = 1..t, so lags that
    reach before the start of the series contribute zero. Returns 0.0 when no
    history overlaps the generation-interval support.
    """
    x = np.asarray(totals, dtype=np.float64)
    if t < 1:
        return 0.0
    acc = 0.0
    for tau in range(1, min(t, gi.max_lag) + 1):
        acc += gi.prob(tau) * float(x[t - tau])
    return acc


def renewal_denominators(totals: Sequence[float], gi: GenerationInterval) -> np.ndarray:
    """Vector of renewal denominators for every t in the series (0 at t=0)."""
    x = np.asarray(totals, dtype=np.float64)
    out = np.zeros(x.size, dtype=np.float64)
    for tau in range(1, gi.max_lag + 1):
        p = gi.prob(tau)
        if p == 0.0 or tau >= x.size:
            continue
        out[tau:] += p * x[:-tau]
    return out


def derive_seed(base_seed: int, *path: int | str) -> int:
    """Deterministic 64-bit child seed for a named sub-stream of base_seed.

    All randomness in a run flows from one user-facing seed; submodules get
    non-overlapping streams by hashing a label path into the seed sequence.
    """
    parts: list[int] = [int(base_seed)]
    for p in path:
        parts.append(int(p) if isinstance(p, int) else zlib.crc32(p.encode("utf-8")))
    ss = np.random.SeedSequence(parts)
    return int(ss.generate_state(1, np.uint64)[0])
