"""Monte-Carlo calibration of the MFDFA Hurst estimator and interval classification.

The confidence interval for the true H is centred on the bias-corrected
estimate ``h_hat + delta(N)`` with half-width ``t * s(N)``, where ``delta`` and
``s`` are tabulated per series length. ``delta`` is stored as the mean
correction ``H_true - h_hat`` so it is *added* to the estimate.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import norm

from .cascade import CascadeParams, alpha_for_hurst, generate_cascade
from .classes import HurstClassScheme
from .mfdfa import MfdfaConfig, estimate_hurst
from .seeding import derive_seed

DEFAULT_H_GRID = tuple(round(0.525 + 0.05 * k, 3) for k in range(10))
MIN_TRIALS = 100


class DegenerateCalibrationWarning(RuntimeWarning):
    pass


def config_hash(config: MfdfaConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class CalibrationEntry:
    delta: float
    s: float
    trials: int
    h_grid: tuple[float, ...]
    bias_by_h: dict[float, float] = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return not self.s > 0


@dataclass
class CalibrationTable:
    entries: dict[int, CalibrationEntry]
    config_hash: str

    def lookup(self, length: int) -> CalibrationEntry:
        try:
            return self.entries[int(length)]
        except KeyError:
            raise KeyError(
                f"no calibration for length {length}; table has {sorted(self.entries)}"
            ) from None

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "entries": [
                {"N": n, "delta": e.delta, "s": e.s, "trials": e.trials,
                 "h_grid": list(e.h_grid),
                 "bias_by_h": [[h, b] for h, b in e.bias_by_h.items()]}
                for n, e in sorted(self.entries.items())
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> CalibrationTable:
        entries = {
            int(e["N"]): CalibrationEntry(
                delta=float(e["delta"]), s=float(e["s"]), trials=int(e["trials"]),
                h_grid=tuple(e.get("h_grid", ())),
                bias_by_h={float(h): float(b) for h, b in e.get("bias_by_h", [])})
            for e in d["entries"]
        }
        return cls(entries=entries, config_hash=d.get("config_hash", ""))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> CalibrationTable:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _default_estimator(config: MfdfaConfig):
    def est(series, h_true):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return estimate_hurst(series, config)
    return est


def build_calibration(lengths, h_grid=DEFAULT_H_GRID, trials_per_cell: int = 200,
                      seed: int = 0, config: MfdfaConfig | None = None,
                      estimator: Callable[[np.ndarray, float], float] | None = None,
                      threads: int = 1) -> CalibrationTable:
    """Tabulate bias and spread of the Hurst estimator per series length.

    ``estimator(series, h_true)`` replaces the MFDFA estimate when given
    (used to check the perfect-estimator limit).
    """
    lengths = [int(n) for n in lengths]
    h_grid = tuple(float(h) for h in h_grid)
    if not lengths or not h_grid:
        raise ValueError("lengths and h_grid must be non-empty")
    for n in lengths:
        if n < 2 or n & (n - 1):
            raise ValueError(f"series length {n} is not a power of two")
    if trials_per_cell < MIN_TRIALS:
        raise ValueError(f"trials_per_cell must be >= {MIN_TRIALS}")
    config = config or MfdfaConfig()
    est = estimator or _default_estimator(config)

    entries = {}
    for n in lengths:
        levels = n.bit_length() - 1
        cells = [(h, t) for h in h_grid for t in range(trials_per_cell)]

        def run(cell, n=n, levels=levels):
            h, t = cell
            params = CascadeParams(levels, alpha_for_hurst(h), seed=derive_seed(seed, "calibrate", n, h, t))
            return est(generate_cascade(params), h) - h

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                err = np.array(list(pool.map(run, cells)))
        else:
            err = np.array([run(c) for c in cells])
        err_by_h = err.reshape(len(h_grid), trials_per_cell)
        s = float(np.std(err, ddof=1))
        entry = CalibrationEntry(
            delta=float(-err.mean()), s=s, trials=err.size, h_grid=h_grid,
            bias_by_h={h: float(b) for h, b in zip(h_grid, err_by_h.mean(axis=1))})
        if entry.degenerate:
            warnings.warn(f"calibration for N={n} has zero spread", DegenerateCalibrationWarning,
                          stacklevel=2)
        entries[n] = entry
    return CalibrationTable(entries=entries, config_hash=config_hash(config))


def normal_quantile(alpha_level: float) -> float:
    """Two-sided standard normal quantile ``t`` with ``P(|Z| > t) = alpha_level``."""
    if not 0.0 < alpha_level < 1.0:
        raise ValueError(f"alpha_level must lie in (0, 1), got {alpha_level}")
    return float(norm.ppf(1.0 - alpha_level / 2.0))


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    center: float
    alpha_level: float
    t_quantile: float

    def __contains__(self, h: float) -> bool:
        return self.lower <= h <= self.upper


def interval_from_stats(h_hat: float, delta: float, s: float, alpha_level: float) -> ConfidenceInterval:
    t = normal_quantile(alpha_level)
    center = h_hat + delta
    return ConfidenceInterval(center - t * s, center + t * s, center, alpha_level, t)


def confidence_interval(h_hat: float, length: int, alpha_level: float,
                        table: CalibrationTable) -> ConfidenceInterval:
    e = table.lookup(length)
    return interval_from_stats(h_hat, e.delta, e.s, alpha_level)


@dataclass(frozen=True)
class IntervalClassification:
    probabilities: np.ndarray
    below: float
    above: float
    predicted: int
    interval: ConfidenceInterval

    def score(self, true_class: int) -> float:
        return float(self.probabilities[true_class])


def class_masses(center: float, s: float, scheme: HurstClassScheme) -> tuple[np.ndarray, float, float]:
    """Normal(center, s) probability mass per class plus the two exterior tails."""
    lo, hi = scheme.lower, scheme.upper
    if s > 0:
        cdf_lo = norm.cdf((lo - center) / s)
        cdf_hi = norm.cdf((hi - center) / s)
        probs = cdf_hi - cdf_lo
        below = float(norm.cdf((lo[0] - center) / s))
        above = float(norm.sf((hi[-1] - center) / s))
        return probs, below, above
    probs = np.zeros(scheme.n_classes)
    k = scheme.class_of(center)
    if k is not None:
        probs[k] = 1.0
    below = 1.0 if k is None and center < lo[0] else 0.0
    return probs, below, 1.0 - below - probs.sum()


def classify_by_interval(h_hat: float, length: int, alpha_level: float,
                         table: CalibrationTable, scheme: HurstClassScheme) -> IntervalClassification:
    """Assign class probabilities from the calibrated normal error model of ``h_hat``."""
    e = table.lookup(length)
    ci = interval_from_stats(h_hat, e.delta, e.s, alpha_level)
    probs, below, above = class_masses(ci.center, e.s, scheme)
    # ties (up to round-off) go to the lower index
    predicted = int(np.flatnonzero(probs >= probs.max() - 1e-12)[0])
    return IntervalClassification(probs, below, above, predicted, ci)
