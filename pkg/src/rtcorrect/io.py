"""File formats: grouped-count CSV, generation-interval CSV, R_t CSV, JSON configs.

All writers emit canonical CSV (header first, ``\\n`` line endings, no
trailing whitespace) so identical data always produces identical bytes.
Config loading is strict: unknown keys are rejected with a spelling
suggestion, because estimator correctness depends on silently-typo-able
rate values.
"""

from __future__ import annotations

import csv
import difflib
import json
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .core import (
    GenerationInterval,
    GroupedSeries,
    RtSeries,
    SymptomaticRates,
    validate_generation_interval,
)
from .errors import (
    NegativeCount,
    NonContiguousTime,
    ParseError,
    ValidationError,
)
from .estimators import EstimatorOptions
from .latent import BetaPrior, LatentPosterior, McmcConfig
from .simulate import ScenarioConfig


def _fmt(value: float) -> str:
    """Shortest exact decimal form of a float (ints stay bare)."""
    f = float(value)
    if f == int(f) and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


def _read_rows(path: str | Path) -> list[list[str]]:
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            return [row for row in csv.reader(fh)]
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from exc


# ---------------------------------------------------------------------------
# Grouped count series: header "t,<label_0>,...,<label_{L-1}>"

def read_grouped_csv(path: str | Path) -> GroupedSeries:
    """Load a time-by-group count matrix, validating shape and contiguity."""
    rows = _read_rows(path)
    if not rows or not rows[0] or rows[0][0] != "t":
        raise ParseError(f"{path}: expected header starting with 't'")
    labels = tuple(rows[0][1:])
    if not labels:
        raise ParseError(f"{path}: header defines no group columns")
    counts = []
    expected_t = None
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(labels) + 1:
            raise ParseError(
                f"{path}:{lineno}: expected {len(labels) + 1} cells, got {len(row)}"
            )
        try:
            t = int(row[0])
            values = [int(cell) for cell in row[1:]]
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: non-integer cell ({exc})") from exc
        if expected_t is None:
            expected_t = t
        if t != expected_t:
            raise NonContiguousTime(
                f"{path}:{lineno}: time index {t} breaks the contiguous sequence "
                f"(expected {expected_t})"
            )
        expected_t += 1
        for l, v in enumerate(values):
            if v < 0:
                raise NegativeCount(
                    f"{path}:{lineno}: negative count {v} in column '{labels[l]}'"
                )
        counts.append(values)
    if not counts:
        raise ParseError(f"{path}: no data rows")
    return GroupedSeries(np.array(counts, dtype=np.int64), labels)


def write_grouped_csv(series: GroupedSeries, path: str | Path) -> Path:
    """Write the canonical grouped-count CSV (time indices from 0)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", *series.group_labels])
        for t in range(series.n_times):
            writer.writerow([t, *(int(c) for c in series.counts[t])])
    return path


# ---------------------------------------------------------------------------
# Generation interval: header "tau,prob", rows tau = 1..max_lag

def read_generation_interval(path: str | Path) -> GenerationInterval:
    rows = _read_rows(path)
    if not rows or rows[0] != ["tau", "prob"]:
        raise ParseError(f"{path}: expected header 'tau,prob'")
    probs = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ParseError(f"{path}:{lineno}: expected 2 cells, got {len(row)}")
        try:
            tau = int(row[0])
            prob = float(row[1])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: bad cell ({exc})") from exc
        if tau != len(probs) + 1:
            raise ParseError(
                f"{path}:{lineno}: lags must run 1..T_max, got tau={tau}"
            )
        probs.append(prob)
    if not probs:
        raise ParseError(f"{path}: no data rows")
    return validate_generation_interval(probs)


def write_generation_interval(gi: GenerationInterval, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tau", "prob"])
        for tau in range(1, gi.max_lag + 1):
            writer.writerow([tau, _fmt(gi.prob(tau))])
    return path


# ---------------------------------------------------------------------------
# R_t series: header "t,rt,defined" plus quantile columns when present

def write_rt_csv(rt: RtSeries, path: str | Path) -> Path:
    """Write estimates with explicit definedness; absent times get empty cells."""
    path = Path(path)
    has_q = rt.quantiles is not None
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["t", "rt", "defined"]
        if has_q:
            header += ["q_lo", "q_med", "q_hi"]
        writer.writerow(header)
        for i in range(len(rt)):
            t = rt.t0 + i
            if rt.defined[i]:
                row: list[Any] = [t, _fmt(rt.values[i]), 1]
                if has_q:
                    row += [_fmt(q) for q in rt.quantiles[i]]
            else:
                row = [t, "", 0]
                if has_q:
                    row += ["", "", ""]
            writer.writerow(row)
    return path


def write_fraction_csv(
    fraction: np.ndarray, defined: np.ndarray, path: str | Path
) -> Path:
    """Per-time detected fraction with the same definedness convention."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "fraction", "defined"])
        for t in range(len(fraction)):
            if defined[t]:
                writer.writerow([t, _fmt(float(fraction[t])), 1])
            else:
                writer.writerow([t, "", 0])
    return path


# ---------------------------------------------------------------------------
# Posterior draws

def write_latent_draws(posterior: LatentPosterior, directory: str | Path) -> list[Path]:
    """Persist posterior draws, one CSV per quantity, draw index prepended."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    latent_path = directory / "latent_draws.csv"
    with open(latent_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["draw", "t", *posterior.group_labels])
        for k in range(posterior.n_samples):
            for t in range(posterior.draws.shape[1]):
                writer.writerow([k, t, *(int(c) for c in posterior.draws[k, t])])
    paths.append(latent_path)
    if posterior.rate_draws is not None:
        rates_path = directory / "rate_draws.csv"
        with open(rates_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["draw", *posterior.group_labels])
            for k in range(posterior.n_samples):
                writer.writerow([k, *(_fmt(r) for r in posterior.rate_draws[k])])
        paths.append(rates_path)
    return paths


# ---------------------------------------------------------------------------
# JSON configuration loading (strict schema)

_SCENARIO_KEYS = {
    "group_sizes",
    "r0",
    "gi",
    "coupling",
    "seed_infections",
    "horizon",
    "rates",
    "rng_seed",
    "group_labels",
}
_SCENARIO_REQUIRED = _SCENARIO_KEYS - {"group_labels"}
_ESTIMATOR_KEYS = {"window", "min_denominator"}
_MCMC_KEYS = {"n_samples", "burn_in", "thin", "proposal_width", "rng_seed"}


def _load_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def _check_keys(doc: Mapping[str, Any], allowed: set[str], what: str) -> None:
    for key in doc:
        if key not in allowed:
            hint = difflib.get_close_matches(key, sorted(allowed), n=1)
            suffix = f"; did you mean '{hint[0]}'?" if hint else ""
            raise ValidationError(f"unknown {what} key '{key}'{suffix}")


def scenario_config_from_dict(doc: Mapping[str, Any]) -> ScenarioConfig:
    """Build and validate a ScenarioConfig from a plain JSON-style mapping."""
    if not isinstance(doc, Mapping):
        raise ValidationError("scenario config must be a JSON object")
    _check_keys(doc, _SCENARIO_KEYS, "scenario config")
    missing = sorted(_SCENARIO_REQUIRED - set(doc))
    if missing:
        raise ValidationError(f"missing scenario config keys: {', '.join(missing)}")

    rates_raw = doc["rates"]
    if not isinstance(rates_raw, Sequence) or isinstance(rates_raw, str):
        raise ValidationError("rates: must be a list of per-group probabilities")
    for i, r in enumerate(rates_raw):
        if not isinstance(r, (int, float)) or not 0 < float(r) <= 1:
            raise ValidationError(f"rates[{i}]: must lie in (0, 1], got {r!r}")
    gi_raw = doc["gi"]
    if not isinstance(gi_raw, Sequence) or isinstance(gi_raw, str) or not gi_raw:
        raise ValidationError("gi: must be a non-empty list of lag probabilities")
    seeds_raw = doc["seed_infections"]
    if not isinstance(seeds_raw, Sequence):
        raise ValidationError("seed_infections: must be a list of [time, group, count]")
    seeds = []
    for i, triple in enumerate(seeds_raw):
        if not isinstance(triple, Sequence) or len(triple) != 3:
            raise ValidationError(
                f"seed_infections[{i}]: must be a [time, group, count] triple"
            )
        seeds.append(tuple(int(v) for v in triple))
    try:
        return ScenarioConfig(
            group_sizes=tuple(int(n) for n in doc["group_sizes"]),
            r0=float(doc["r0"]),
            gi=validate_generation_interval([float(p) for p in gi_raw]),
            coupling=np.asarray(doc["coupling"], dtype=np.float64),
            seed_infections=tuple(seeds),
            horizon=int(doc["horizon"]),
            rates=SymptomaticRates(np.asarray(rates_raw, dtype=np.float64)),
            rng_seed=int(doc["rng_seed"]),
            group_labels=tuple(doc.get("group_labels", ())),
        )
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"scenario config: {exc}") from exc


def load_scenario_config(path: str | Path) -> ScenarioConfig:
    """Load and strictly validate a scenario config JSON file."""
    return scenario_config_from_dict(_load_json(path))


def scenario_config_to_dict(config: ScenarioConfig) -> dict[str, Any]:
    """Field-for-field JSON-ready mapping of a ScenarioConfig."""
    return {
        "group_sizes": list(config.group_sizes),
        "r0": config.r0,
        "gi": [float(p) for p in config.gi.probs],
        "coupling": [[float(c) for c in row] for row in config.coupling],
        "seed_infections": [list(s) for s in config.seed_infections],
        "horizon": config.horizon,
        "rates": [float(r) for r in config.rates.rates],
        "rng_seed": config.rng_seed,
        "group_labels": list(config.group_labels),
    }


def estimator_options_from_dict(doc: Mapping[str, Any]) -> EstimatorOptions:
    _check_keys(doc, _ESTIMATOR_KEYS, "estimator options")
    return EstimatorOptions(
        window=int(doc.get("window", 1)),
        min_denominator=float(doc.get("min_denominator", 5.0)),
    )


def mcmc_config_from_dict(doc: Mapping[str, Any]) -> McmcConfig:
    _check_keys(doc, _MCMC_KEYS, "mcmc config")
    defaults = McmcConfig()
    return McmcConfig(
        n_samples=int(doc.get("n_samples", defaults.n_samples)),
        burn_in=int(doc.get("burn_in", defaults.burn_in)),
        thin=int(doc.get("thin", defaults.thin)),
        proposal_width=int(doc.get("proposal_width", defaults.proposal_width)),
        rng_seed=int(doc.get("rng_seed", defaults.rng_seed)),
    )


def parse_rates(text: str) -> SymptomaticRates:
    """Parse a comma-separated rate list like '0.3,0.8'."""
    try:
        values = [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ValidationError(f"rates: {exc}") from exc
    if not values:
        raise ValidationError("rates: expected at least one value")
    return SymptomaticRates(np.asarray(values))


def parse_priors(text: str) -> list[BetaPrior]:
    """Parse comma-separated Beta priors like '3:7,8:2' (alpha:beta per group)."""
    priors = []
    for i, part in enumerate(text.split(",")):
        pieces = part.split(":")
        if len(pieces) != 2:
            raise ValidationError(
                f"priors[{i}]: expected 'alpha:beta', got {part!r}"
            )
        try:
            priors.append(BetaPrior(alpha=float(pieces[0]), beta=float(pieces[1])))
        except ValueError as exc:
            raise ValidationError(f"priors[{i}]: {exc}") from exc
    return priors


def write_json(document: Mapping[str, Any], path: str | Path) -> Path:
    """Write canonical JSON: sorted keys, two-space indent, trailing newline."""
    path = Path(path)
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
    return path
