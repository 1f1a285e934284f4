"""Multifractal detrended fluctuation analysis (MFDFA).

The pipeline is: profile -> per-segment polynomial detrending -> order-q
power mean over segments -> log-log slope per q.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

DEFAULT_Q = (0.1, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0)
REQUIRED_Q = (0.1, 1.0, 2.0, 5.0)
F2_FLOOR = 1e-300
LOW_R2 = 0.8


class DegenerateSeriesWarning(RuntimeWarning):
    pass


class LowConfidenceFitWarning(RuntimeWarning):
    pass


def tau_grid(length: int, poly_order: int = 2, count: int = 16) -> tuple[int, ...]:
    """Log-spaced integer segment lengths from ``max(8, m + 2)`` to ``length // 4``."""
    lo = max(8, poly_order + 2)
    hi = length // 4
    if hi < lo:
        raise ValueError(f"series of length {length} is too short for MFDFA (need >= {4 * lo})")
    grid = np.unique(np.round(np.geomspace(lo, hi, count)).astype(int))
    return tuple(int(t) for t in grid)


@dataclass(frozen=True)
class MfdfaConfig:
    poly_order: int = 2
    tau: tuple[int, ...] = ()
    q: tuple[float, ...] = DEFAULT_Q
    backward: bool = True

    def __post_init__(self):
        object.__setattr__(self, "tau", tuple(int(t) for t in self.tau))
        object.__setattr__(self, "q", tuple(float(v) for v in self.q))
        if self.poly_order < 0:
            raise ValueError("poly_order must be >= 0")
        if any(v == 0 for v in self.q):
            raise ValueError("q = 0 is not supported")
        if self.tau:
            if any(b <= a for a, b in zip(self.tau, self.tau[1:])):
                raise ValueError("tau grid must be strictly increasing")
            if len(self.tau) < 8:
                raise ValueError("tau grid needs at least 8 distinct values")
            if self.tau[0] < self.poly_order + 2:
                raise ValueError(f"every tau must be >= poly_order + 2 = {self.poly_order + 2}")

    @classmethod
    def for_length(cls, length: int, poly_order: int = 2, **kwargs) -> "MfdfaConfig":
        return cls(poly_order=poly_order, tau=tau_grid(length, poly_order), **kwargs)

    def resolve(self, length: int) -> "MfdfaConfig":
        """Return a config with a concrete tau grid for series of ``length``."""
        cfg = self if self.tau else MfdfaConfig(
            poly_order=self.poly_order, tau=tau_grid(length, self.poly_order),
            q=self.q, backward=self.backward)
        if cfg.tau[-1] > length // 4:
            raise ValueError(
                f"max tau {cfg.tau[-1]} exceeds length/4 for a series of length {length}")
        return cfg

    def to_dict(self) -> dict:
        return {"poly_order": self.poly_order, "tau": list(self.tau),
                "q": list(self.q), "backward": self.backward}

    @classmethod
    def from_dict(cls, d: dict) -> "MfdfaConfig":
        return cls(poly_order=d.get("poly_order", 2), tau=tuple(d.get("tau", ())),
                   q=tuple(d.get("q", DEFAULT_Q)), backward=d.get("backward", True))


@dataclass
class MfdfaResult:
    q: np.ndarray
    h: np.ndarray
    r2: np.ndarray
    tau: np.ndarray
    fq: np.ndarray  # shape (len(q), len(tau))
    low_confidence: list[float] = field(default_factory=list)

    @property
    def h_of_q(self) -> dict[float, float]:
        return {float(q): float(h) for q, h in zip(self.q, self.h)}

    @property
    def fit_r2(self) -> dict[float, float]:
        return {float(q): float(r) for q, r in zip(self.q, self.r2)}

    def at(self, q: float) -> float:
        idx = np.flatnonzero(np.isclose(self.q, q, rtol=0, atol=1e-12))
        if idx.size == 0:
            raise KeyError(f"q={q} not in the q grid")
        return float(self.h[idx[0]])

    @property
    def hurst(self) -> float:
        return self.at(2.0)

    def to_dict(self) -> dict:
        return {"q": self.q.tolist(), "h": self.h.tolist(), "r2": self.r2.tolist(),
                "tau": self.tau.tolist(), "Fq": self.fq.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "MfdfaResult":
        return cls(q=np.asarray(d["q"], float), h=np.asarray(d["h"], float),
                   r2=np.asarray(d["r2"], float), tau=np.asarray(d["tau"], float),
                   fq=np.asarray(d["Fq"], float))


def profile(series) -> np.ndarray:
    """Cumulative sum of the mean-subtracted series."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("profile needs a 1-D series with at least 2 samples")
    return np.cumsum(x - x.mean())


def _detrend_basis(tau: int, poly_order: int) -> np.ndarray:
    # Orthonormal basis of degree-m polynomials on tau points; x scaled to [-1, 1]
    # keeps the Vandermonde matrix well conditioned.
    x = np.linspace(-1.0, 1.0, tau)
    q, _ = np.linalg.qr(np.vander(x, poly_order + 1))
    return q


def _segment_f2(segments: np.ndarray, poly_order: int) -> np.ndarray:
    basis = _detrend_basis(segments.shape[-1], poly_order)
    resid = segments - (segments @ basis) @ basis.T
    return np.mean(resid ** 2, axis=-1)


def segment_fluctuation(segment, poly_order: int = 2) -> float:
    """Mean squared residual of a least-squares degree-``poly_order`` fit."""
    seg = np.asarray(segment, dtype=float)
    if seg.ndim != 1 or seg.size < poly_order + 2:
        raise ValueError(f"segment needs at least {poly_order + 2} points for order {poly_order}")
    return float(_segment_f2(seg[None, :], poly_order)[0])


def _local_profiles(x: np.ndarray, starts: np.ndarray, tau: int, poly_order: int) -> np.ndarray:
    # Profile segments rebuilt from the raw increments. Centering each segment
    # on its own mean instead of the global one changes the profile segment by
    # a constant plus a linear term, which any fit of order >= 1 removes
    # exactly; round-off then scales with the local mass, not the global one.
    segs = x[starts[:, None] + np.arange(tau)]
    if poly_order == 0:
        segs = segs - x.mean()
    else:
        segs = segs - segs.mean(axis=1, keepdims=True)
    return np.cumsum(segs, axis=1)


def segment_variances(series, tau: int, poly_order: int, backward: bool) -> np.ndarray:
    """Detrended variance F^2 of every profile segment of length ``tau``.

    Segments tile the series from the start; with ``backward`` a second set
    aligned to the end is appended (listed left to right).
    """
    x = np.asarray(series, dtype=float)
    n_seg = x.size // tau
    starts = np.arange(n_seg) * tau
    if backward:
        starts = np.concatenate([starts, x.size - n_seg * tau + np.arange(n_seg) * tau])
    return _segment_f2(_local_profiles(x, starts, tau, poly_order), poly_order)


def power_mean(f2: np.ndarray, q: float) -> float:
    """Order-q power mean of the segment RMS values ``sqrt(f2)``."""
    scale = f2.max()
    return float(np.sqrt(scale) * np.mean((f2 / scale) ** (q / 2.0)) ** (1.0 / q))


def fluctuation_function(series, config: MfdfaConfig | None = None) -> tuple[np.ndarray, MfdfaConfig]:
    """Fluctuation table ``F_q(tau)`` of shape ``(len(q), len(tau))``.

    Returns the table together with the resolved config (concrete tau grid).
    """
    x = np.asarray(series, dtype=float)
    cfg = (config or MfdfaConfig()).resolve(x.size)
    if x.size < 4 * cfg.tau[0]:
        raise ValueError(f"series of length {x.size} is shorter than 4 * min(tau)")
    table = np.empty((len(cfg.q), len(cfg.tau)))
    floored = total = 0
    for j, tau in enumerate(cfg.tau):
        f2 = segment_variances(x, tau, cfg.poly_order, cfg.backward)
        low = f2 < F2_FLOOR
        floored += int(low.sum())
        total += f2.size
        f2 = np.where(low, F2_FLOOR, f2)
        for i, q in enumerate(cfg.q):
            table[i, j] = power_mean(f2, q)
    if floored > total / 2:
        warnings.warn(
            f"{floored} of {total} segments had zero fluctuation; series is degenerate",
            DegenerateSeriesWarning, stacklevel=2)
    return table, cfg


def fit_h_of_q(table, tau, q=None) -> MfdfaResult:
    """OLS slope of ``log F_q`` against ``log tau`` for each q.

    ``tau`` may be a resolved :class:`MfdfaConfig`, in which case its tau and
    q grids are used.
    """
    if isinstance(tau, MfdfaConfig):
        tau, q = tau.tau, tau.q
    table = np.asarray(table, dtype=float)
    tau = np.asarray(tau, dtype=float)
    q = np.asarray(q, dtype=float)
    if tau.size < 8 or table.shape != (q.size, tau.size):
        raise ValueError("need a (len(q), len(tau)) table with at least 8 tau values")
    if not np.all(np.isfinite(table) & (table > 0)):
        raise ValueError("fluctuation table must be finite and positive")
    lx = np.log(tau)
    ly = np.log(table)
    xc = lx - lx.mean()
    yc = ly - ly.mean(axis=1, keepdims=True)
    slope = yc @ xc / (xc @ xc)
    ss_res = np.sum((yc - slope[:, None] * xc) ** 2, axis=1)
    ss_tot = np.sum(yc ** 2, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        r2 = np.where(ss_tot > 0, 1.0 - ss_res / ss_tot, 1.0)
    low = [float(v) for v, r in zip(q, r2) if r < LOW_R2]
    if low:
        warnings.warn(f"log-log fit has R^2 < {LOW_R2} for q = {low}",
                      LowConfidenceFitWarning, stacklevel=2)
    return MfdfaResult(q=q, h=slope, r2=r2, tau=tau, fq=table, low_confidence=low)


def mfdfa(series, config: MfdfaConfig | None = None) -> MfdfaResult:
    table, cfg = fluctuation_function(series, config)
    return fit_h_of_q(table, cfg.tau, cfg.q)


def estimate_hurst(series, config: MfdfaConfig | None = None) -> float:
    """Hurst exponent estimate h(2)."""
    cfg = config or MfdfaConfig()
    if 2.0 not in cfg.q:
        cfg = MfdfaConfig(cfg.poly_order, cfg.tau, tuple(sorted(set(cfg.q) | {2.0})), cfg.backward)
    return mfdfa(series, cfg).hurst
