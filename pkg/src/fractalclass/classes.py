"""Hurst-exponent class schemes: ordered, disjoint H intervals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

H_MIN, H_MAX = 0.51, 0.99


@dataclass(frozen=True)
class HurstClassScheme:
    """Ordered list of ``(lower, upper)`` H intervals; class ``k`` is the k-th.

    Membership is closed-open ``[lower, upper)`` except for the last class,
    which is closed.
    """

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        iv = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        object.__setattr__(self, "intervals", iv)
        if not iv:
            raise ValueError("class scheme must contain at least one interval")
        for lo, hi in iv:
            if not lo < hi:
                raise ValueError(f"empty class interval [{lo}, {hi}]")
        for (_, hi), (lo, _) in zip(iv, iv[1:]):
            if lo < hi:
                raise ValueError("class intervals overlap or are out of order")

    @classmethod
    def from_edges(cls, edges) -> HurstClassScheme:
        edges = [float(e) for e in edges]
        return cls(tuple(zip(edges[:-1], edges[1:])))

    @property
    def n_classes(self) -> int:
        return len(self.intervals)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.intervals])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.intervals])

    def class_of(self, h: float) -> int | None:
        last = self.n_classes - 1
        for k, (lo, hi) in enumerate(self.intervals):
            if lo <= h < hi or (k == last and h == hi):
                return k
        return None

    def shifted(self, offset: float) -> HurstClassScheme:
        return HurstClassScheme(tuple((lo + offset, hi + offset) for lo, hi in self.intervals))

    def to_dict(self) -> dict:
        return {"intervals": [[lo, hi, k] for k, (lo, hi) in enumerate(self.intervals)]}

    @classmethod
    def from_dict(cls, d) -> HurstClassScheme:
        rows = d["intervals"] if isinstance(d, dict) else d
        if rows and len(rows[0]) == 3 and [int(r[2]) for r in rows] != list(range(len(rows))):
            raise ValueError("class indices must be 0..K-1 in order")
        return cls(tuple((r[0], r[1]) for r in rows))


def eleven_class_scheme() -> HurstClassScheme:
    """0.51, 0.525, 0.575, ..., 0.975, 0.99 (half-width end classes)."""
    inner = [round(0.525 + 0.05 * k, 3) for k in range(10)]
    return HurstClassScheme.from_edges([H_MIN, *inner, H_MAX])


def two_class_scheme() -> HurstClassScheme:
    return HurstClassScheme.from_edges([H_MIN, 0.7, H_MAX])


NAMED_SCHEMES = {"11-class": eleven_class_scheme, "2-class": two_class_scheme}


def scheme_by_name(name: str) -> HurstClassScheme:
    try:
        return NAMED_SCHEMES[name]()
    except KeyError:
        raise ValueError(f"unknown class scheme {name!r}; known: {sorted(NAMED_SCHEMES)}") from None
