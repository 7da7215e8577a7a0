"""Shared numerical machinery.

Everything here is deliberately boring: tri-state evidence values,
compensated summation, a couple of sequence-extrapolation helpers, and
the tail-window statistics used by the boundedness probes.  The
criteria modules lean on these instead of rolling their own loops so
that every probe in the package reports growth and stability the same
way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "TriState",
    "Trend",
    "ChunkedSum",
    "richardson_pair",
    "aitken",
    "geometric_ladder",
    "tail_windows",
    "signed_drift",
    "tail_trend",
    "TrendReport",
    "sqrt_series_coeffs",
    "sqrt1p_minus_1",
    "sqrt1p_tail",
    "block_index",
    "DRIFT_TOL",
]

# Stability threshold shared by every two-window probe: a statistic is
# window-stable when its later-window sup grows by less than 5% of the
# earlier-window sup.  Shrinking is always stable.
DRIFT_TOL = 0.05


class TriState(str, Enum):
    """Three-valued evidence: numerics may honestly fail to decide."""

    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    @staticmethod
    def of(flag: bool) -> "TriState":
        return TriState.TRUE if flag else TriState.FALSE

    def __bool__(self) -> bool:
        # Guard against `if probe.holds:` silently treating UNKNOWN as
        # truthy.  Compare against the members explicitly.
        raise TypeError("TriState has no truth value; compare with TriState.TRUE etc.")


class Trend(str, Enum):
    """Classification of a positive statistic sampled along a ladder."""

    BOUNDED = "bounded"
    GROWING = "growing"
    UNKNOWN = "unknown"


class ChunkedSum:
    """Accumulates array chunks; the grand total is an fsum of chunk sums.

    One np.sum per chunk keeps the cost linear while fsum over the
    (few) chunk totals removes the usual cancellation drift of a long
    running float sum.
    """

    __slots__ = ("_parts",)

    def __init__(self) -> None:
        self._parts: list[float] = []

    def add(self, value: float) -> None:
        self._parts.append(float(value))

    def add_array(self, arr: np.ndarray) -> None:
        if len(arr):
            self._parts.append(float(np.sum(arr)))

    def total(self) -> float:
        return math.fsum(self._parts)


def richardson_pair(coarse: float, fine: float, ratio: float, order: float) -> float:
    """One Richardson step: eliminate the c*h^order error term.

    ``coarse`` and ``fine`` are the statistic at step sizes h and
    h/ratio.  Requires ratio > 1 and order > 0.
    """
    if not (ratio > 1.0 and order > 0.0):
        raise ValueError("richardson_pair needs ratio > 1 and order > 0")
    w = ratio**order
    return (w * fine - coarse) / (w - 1.0)


def aitken(s0: float, s1: float, s2: float) -> float:
    """Aitken delta-squared acceleration of three consecutive estimates.

    Falls back to the last value when the second difference underflows.
    """
    d1 = s1 - s0
    d2 = s2 - s1
    denom = d2 - d1
    if denom == 0.0 or not math.isfinite(denom):
        return s2
    return s2 - d2 * d2 / denom


def geometric_ladder(lo: int, hi: int, rungs: int = 16) -> list[int]:
    """Roughly geometric integer ladder from lo to hi inclusive, deduplicated."""
    if lo < 1 or hi < lo:
        raise ValueError("need 1 <= lo <= hi")
    if rungs < 2 or lo == hi:
        return [hi]
    pts = np.unique(np.rint(np.geomspace(lo, hi, rungs)).astype(np.int64))
    return [int(p) for p in pts]


def tail_windows(n: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """The two comparison windows [n/4, n/2) and [n/2, n] used by drift probes."""
    if n < 64:
        raise ValueError("tail windows need n >= 64")
    q = n // 4
    h = n // 2
    return (q, h), (h, n + 1)


def signed_drift(sup_early: float, sup_late: float) -> float:
    """Relative growth of a window statistic: (late - early) / |early|.

    Negative values mean the statistic shrank; only positive drift
    counts against stability.  Degenerate early values fall back to the
    larger magnitude so the ratio stays finite.
    """
    scale = abs(sup_early)
    if scale == 0.0 or not math.isfinite(scale):
        scale = max(abs(sup_late), 1e-300)
    return (sup_late - sup_early) / scale


@dataclass(frozen=True)
class TrendReport:
    trend: Trend
    rungs: tuple[int, ...]
    values: tuple[float, ...]
    rates: tuple[float, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "trend": self.trend.value,
            "rungs": list(self.rungs),
            "values": list(self.values),
            "rates": list(self.rates),
        }


def tail_trend(
    rungs: list[int],
    values: list[float],
    grow_tol: float = 0.015,
    flat_tol: float = 0.005,
    last: int = 3,
) -> TrendReport:
    """Classify a ladder statistic by its trailing per-rung growth rates.

    rate_i = values[i]/values[i-1] - 1 over the last ``last`` rungs.
    All rates above grow_tol: GROWING.  All at or below flat_tol:
    BOUNDED.  A mix, non-finite data, or too few rungs: UNKNOWN.
    Values near zero classify as BOUNDED outright.
    """
    vals = [float(v) for v in values]
    if len(vals) != len(rungs):
        raise ValueError("rungs and values must align")
    if any(not math.isfinite(v) for v in vals):
        return TrendReport(Trend.UNKNOWN, tuple(rungs), tuple(vals))
    scale = max((abs(v) for v in vals), default=0.0)
    if scale == 0.0 or max(abs(v) for v in vals[-last:]) < 1e-280 * max(scale, 1.0):
        return TrendReport(Trend.BOUNDED, tuple(rungs), tuple(vals))
    if len(vals) < last + 1:
        return TrendReport(Trend.UNKNOWN, tuple(rungs), tuple(vals))
    rates = []
    for a, b in zip(vals[-last - 1 : -1], vals[-last:]):
        if a == 0.0:
            return TrendReport(Trend.UNKNOWN, tuple(rungs), tuple(vals))
        rates.append(b / a - 1.0)
    report = lambda t: TrendReport(t, tuple(rungs), tuple(vals), tuple(rates))
    if all(r > grow_tol for r in rates):
        return report(Trend.GROWING)
    if all(r <= flat_tol for r in rates):
        return report(Trend.BOUNDED)
    return report(Trend.UNKNOWN)


def sqrt_series_coeffs(k: int) -> list[float]:
    """Taylor coefficients C_0..C_{k-1} of sqrt(1+x) about x=0.

    C_0 = 1, C_1 = 1/2, and C_i = C_{i-1} * (3/(2i) - 1) afterwards.
    """
    if k < 1:
        raise ValueError("need k >= 1")
    coeffs = [1.0]
    c = 1.0
    for i in range(1, k):
        c *= 1.5 / i - 1.0
        coeffs.append(c)
    return coeffs


def sqrt1p_minus_1(x):
    """sqrt(1+x) - 1 without cancellation; works on scalars and arrays."""
    return x / (1.0 + np.sqrt(1.0 + x))


def sqrt1p_tail(x: np.ndarray, k: int, series_cut: float = 0.25, terms: int = 64) -> np.ndarray:
    """Remainder sqrt(1+x) - sum_{i<k} C_i x^i, evaluated without cancellation.

    For |x| < series_cut the remainder is summed as the tail series
    sum_{i>=k} C_i x^i (the direct difference loses every significant
    digit once the remainder is orders below the partial sum).  Larger
    |x| falls back to the direct difference, where cancellation is mild.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    coeffs = sqrt_series_coeffs(k + terms)
    small = np.abs(x) < series_cut
    if np.any(small):
        xs = x[small]
        acc = np.zeros_like(xs)
        power = xs**k
        for i in range(k, k + terms):
            acc += coeffs[i] * power
            power = power * xs
        out[small] = acc
    if np.any(~small):
        xl = x[~small]
        head = np.zeros_like(xl)
        power = np.ones_like(xl)
        for i in range(k):
            head += coeffs[i] * power
            power = power * xl
        out[~small] = np.sqrt(1.0 + xl) - head
    return out


def block_index(n: int) -> int:
    """Dyadic block number: n lives in [2^k, 2^{k+1}) for k = block_index(n)."""
    if n < 1:
        raise ValueError("need n >= 1")
    return n.bit_length() - 1
