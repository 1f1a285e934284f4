"""Statistical and multifractal feature vector of a series."""

from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np

from .mfdfa import REQUIRED_Q, MfdfaResult

FEATURE_NAMES = ("std", "max", "median", "h_mean", "h_std", "h1", "h2", "delta_h")


@dataclass(frozen=True)
class FeatureVector:
    std: float
    max: float
    median: float
    h_mean: float
    h_std: float
    h1: float
    h2: float
    delta_h: float

    def to_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, values) -> FeatureVector:
        values = [float(v) for v in values]
        if len(values) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} values, got {len(values)}")
        return cls(*values)


def extract_features(series, result: MfdfaResult) -> FeatureVector:
    """Feature vector from the raw series and its MFDFA result.

    Both standard deviations use the ``n - 1`` denominator; ``h_mean`` and
    ``h_std`` weight every q in the grid equally.
    """
    x = np.asarray(series, dtype=float)
    missing = [q for q in REQUIRED_Q if not np.any(np.isclose(result.q, q, rtol=0, atol=1e-12))]
    if missing:
        raise ValueError(f"MFDFA q grid lacks required orders {missing}")
    h = np.asarray(result.h, dtype=float)
    return FeatureVector(
        std=float(np.std(x, ddof=1)) if x.size > 1 else 0.0,
        max=float(np.max(x)),
        median=float(np.median(x)),
        h_mean=float(np.mean(h)),
        h_std=float(np.std(h, ddof=1)) if h.size > 1 else 0.0,
        h1=result.at(1.0),
        h2=result.at(2.0),
        delta_h=result.at(0.1) - result.at(5.0),
    )
