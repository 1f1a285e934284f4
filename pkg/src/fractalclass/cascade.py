"""Conservative binomial multiplicative cascades with Beta-distributed weights."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Weights are kept inside [WEIGHT_EPS, 1 - WEIGHT_EPS] so that products over
# many levels stay representable and strictly positive for very small alpha.
WEIGHT_EPS = 1e-15


@dataclass(frozen=True)
class CascadeParams:
    """Parameters of one cascade realisation.

    Attributes
    ----------
    n : int
        Number of refinement levels; the series has ``2**n`` samples.
    alpha, beta : float
        Shape parameters of the Beta weight distribution.
    seed : int
        Seed of the generator that draws the weights.
    """

    n: int
    alpha: float
    beta: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.beta is None:
            object.__setattr__(self, "beta", self.alpha)
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n!r}")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(
                f"Beta shape parameters must be positive, got alpha={self.alpha}, beta={self.beta}"
            )
        if not math.isfinite(self.alpha) or not math.isfinite(self.beta):
            raise ValueError("Beta shape parameters must be finite")

    @property
    def length(self) -> int:
        return 2 ** self.n


def cascade_from_weights(weights: np.ndarray, n: int) -> np.ndarray:
    """Build the level-``n`` cascade from an explicit weight sequence.

    ``weights`` holds ``2**n - 1`` values in draw order: level by level, left
    to right within a level. Interval ``j`` at level ``k`` splits its mass into
    ``(w, 1 - w)`` using the ``j``-th weight of that level.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (2 ** n - 1,):
        raise ValueError(f"expected {2 ** n - 1} weights for n={n}, got {weights.shape}")
    mass = np.ones(1)
    start = 0
    for level in range(n):
        w = weights[start:start + 2 ** level]
        start += 2 ** level
        nxt = np.empty(2 * mass.size)
        nxt[0::2] = mass * w
        nxt[1::2] = mass * (1.0 - w)
        mass = nxt
    return mass


def draw_weights(params: CascadeParams) -> np.ndarray:
    rng = np.random.default_rng(params.seed)
    w = np.concatenate(
        [rng.beta(params.alpha, params.beta, size=2 ** level) for level in range(params.n)]
    )
    return np.clip(w, WEIGHT_EPS, 1.0 - WEIGHT_EPS)


def generate_cascade(params: CascadeParams) -> np.ndarray:
    """Generate a cascade series of length ``2**params.n`` summing to one.

    Examples
    --------
    >>> x = generate_cascade(CascadeParams(n=10, alpha=1.0, seed=3))
    >>> x.size, bool(abs(x.sum() - 1) < 1e-9)
    (1024, True)
    """
    return cascade_from_weights(draw_weights(params), params.n)


def hurst_for_alpha(alpha: float) -> float:
    """Asymptotic h(2) of a symmetric Beta(alpha, alpha) cascade.

    With ``E[W^2 + (1-W)^2] = (alpha + 1) / (2 alpha + 1)`` the second-order
    scaling exponent is ``tau(2) = log2((2 alpha + 1) / (alpha + 1))`` and
    ``H = (tau(2) + 1) / 2``.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if math.isinf(alpha):
        return 1.0
    return 0.5 * (1.0 + math.log2((2.0 * alpha + 1.0) / (alpha + 1.0)))


def alpha_for_hurst(hurst: float) -> float:
    """Symmetric Beta shape giving a cascade with h(2) equal to ``hurst``.

    Inverse of :func:`hurst_for_alpha`; only defined for ``0.5 < hurst < 1``.
    """
    if not 0.5 < hurst < 1.0:
        raise ValueError(f"hurst must lie in (0.5, 1), got {hurst}")
    r = 2.0 ** (2.0 * hurst - 1.0)
    return (r - 1.0) / (2.0 - r)
