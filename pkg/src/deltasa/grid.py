"""Gap families for delta-interaction grids on the half line.

A grid is the increasing point sequence x_0 = 0 < x_1 < x_2 < ... with
gaps d_n = x_n - x_{n-1} > 0.  The operators downstream only ever see
the gaps, so the grid API is gap-centric: d_n, log d_n, the effective
radii r_n = sqrt(d_n + d_{n+1}) (with the r_0 = 1 convention), and the
log-gap ratios log(d_{n+k}/d_n) that the stabilized difference
quotients are built from.

The workhorse family is PowerLogGrid with d_n = d_1 at n = 1 and
d_n = n^{-gamma} * (ln n)^{-eta} for n >= 2.  Its summability class is
known in closed form: the gaps are summable iff gamma > 1 or
(gamma = 1 and eta > 1), and square-summable iff gamma > 1/2 or
(gamma = 1/2 and eta > 1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .numerics import ChunkedSum, TriState

__all__ = [
    "GridError",
    "GridSequence",
    "PowerLogGrid",
    "ConstantGrid",
    "ExplicitGrid",
    "CustomGrid",
    "SmoothFamilyDerivatives",
    "RatioStats",
    "Summability",
    "ratio_stats",
    "classify_summability",
]

_CHUNK = 1 << 15


class GridError(ValueError):
    """Raised for invalid gap data: non-positive gaps, bad indices."""


@dataclass(frozen=True)
class SmoothFamilyDerivatives:
    """Derivative data for grids sampled from a smooth gap profile d(x).

    ``first`` and ``second`` evaluate d'(x) and d''(x); the regularity
    checks only trust them for x >= valid_from (sign changes below that
    point are artifacts of the profile, not of the tail behaviour).
    """

    first: Callable[[float], float]
    second: Callable[[float], float]
    valid_from: int = 2


class GridSequence:
    """Base class: a positive gap sequence indexed from 1."""

    name: str = "grid"
    #: Largest index with data, or None for genuinely infinite families.
    max_index: Optional[int] = None

    def gap(self, n: int) -> float:
        raise NotImplementedError

    def gaps(self, lo: int, hi: int) -> np.ndarray:
        """Vector of d_n for lo <= n < hi."""
        self._check_range(lo, hi)
        return np.array([self.gap(n) for n in range(lo, hi)], dtype=float)

    def log_gap(self, n: int) -> float:
        return math.log(self.gap(n))

    def log_gaps(self, lo: int, hi: int) -> np.ndarray:
        return np.log(self.gaps(lo, hi))

    def gap_log_ratio(self, n: int, k: int) -> Optional[float]:
        """log(d_{n+k}/d_n) in a cancellation-free form, when available.

        Families that cannot do better than log(gap) arithmetic return
        None and callers fall back to direct differences.
        """
        return None

    def gap_log_ratio_block(self, lo: int, hi: int, k: int) -> Optional[np.ndarray]:
        return None

    def r(self, n: int) -> float:
        """Effective radius: r_0 = 1, r_n = sqrt(d_n + d_{n+1})."""
        if n == 0:
            return 1.0
        if n < 0:
            raise GridError(f"r index must be >= 0, got {n}")
        return math.sqrt(self.gap(n) + self.gap(n + 1))

    def x(self, n: int) -> float:
        """Point position x_n = d_1 + ... + d_n."""
        if n == 0:
            return 0.0
        if n < 0:
            raise GridError(f"x index must be >= 0, got {n}")
        acc = ChunkedSum()
        for lo in range(1, n + 1, _CHUNK):
            acc.add_array(self.gaps(lo, min(lo + _CHUNK, n + 1)))
        return acc.total()

    def derivatives(self) -> Optional[SmoothFamilyDerivatives]:
        """Smooth-profile derivative data, when the family has one."""
        return None

    def _in_ell1(self) -> TriState:
        return TriState.UNKNOWN

    def _in_ell2(self) -> TriState:
        return TriState.UNKNOWN

    def describe(self) -> dict:
        return {"family": self.name}

    def _check_range(self, lo: int, hi: int) -> None:
        if lo < 1 or hi < lo:
            raise GridError(f"bad gap range [{lo}, {hi})")
        if self.max_index is not None and hi - 1 > self.max_index:
            raise GridError(f"index {hi - 1} beyond available data ({self.max_index})")


@dataclass(frozen=True)
class PowerLogGrid(GridSequence):
    """Gaps d_n = n^{-gamma} (ln n)^{-eta} for n >= 2; d_1 is free.

    The first gap is a separate parameter because the profile's value
    at n = 1 would hit ln 1 = 0.  Every asymptotic question downstream
    is insensitive to it.
    """

    gamma: float
    eta: float = 0.0
    d1: float = 1.0
    name: str = "power-log"

    def __post_init__(self) -> None:
        if not (self.d1 > 0.0 and math.isfinite(self.d1)):
            raise GridError("d1 must be positive and finite")
        if not (math.isfinite(self.gamma) and math.isfinite(self.eta)):
            raise GridError("gamma and eta must be finite")

    def gap(self, n: int) -> float:
        if n == 1:
            return self.d1
        if n < 1:
            raise GridError(f"gap index must be >= 1, got {n}")
        return math.exp(self.log_gap(n))

    def log_gap(self, n: int) -> float:
        if n == 1:
            return math.log(self.d1)
        if n < 1:
            raise GridError(f"gap index must be >= 1, got {n}")
        t = math.log(n)
        return -self.gamma * t - self.eta * math.log(t)

    def gaps(self, lo: int, hi: int) -> np.ndarray:
        self._check_range(lo, hi)
        return np.exp(self.log_gaps(lo, hi))

    def log_gaps(self, lo: int, hi: int) -> np.ndarray:
        self._check_range(lo, hi)
        ns = np.arange(lo, hi, dtype=float)
        if lo == 1:
            ns[0] = 2.0  # placeholder, overwritten below
        t = np.log(ns)
        out = -self.gamma * t - self.eta * np.log(t)
        if lo == 1:
            out[0] = math.log(self.d1)
        return out

    def gap_log_ratio(self, n: int, k: int) -> Optional[float]:
        if n < 2 or n + k < 2:
            return None
        t = math.log1p(k / n)
        w = math.log1p(t / math.log(n))
        return -self.gamma * t - self.eta * w

    def gap_log_ratio_block(self, lo: int, hi: int, k: int) -> Optional[np.ndarray]:
        if lo < 2 or lo + k < 2:
            return None
        ns = np.arange(lo, hi, dtype=float)
        t = np.log1p(k / ns)
        w = np.log1p(t / np.log(ns))
        return -self.gamma * t - self.eta * w

    def derivatives(self) -> SmoothFamilyDerivatives:
        g, e = self.gamma, self.eta

        def first(x: float) -> float:
            t = math.log(x)
            return -(g * t + e) * x ** (-g - 1.0) * t ** (-e - 1.0)

        def second(x: float) -> float:
            t = math.log(x)
            q = g * (g + 1.0) * t * t + (2.0 * g + 1.0) * e * t + e * (e + 1.0)
            return q * x ** (-g - 2.0) * t ** (-e - 2.0)

        # d' and d'' keep a fixed sign once ln x clears every root of
        # their polynomial factors.
        ts = [0.0]
        if g != 0.0:
            ts.append(-e / g)
        a2, a1, a0 = g * (g + 1.0), (2.0 * g + 1.0) * e, e * (e + 1.0)
        if a2 != 0.0:
            disc = a1 * a1 - 4.0 * a2 * a0
            if disc >= 0.0:
                rt = math.sqrt(disc)
                ts.extend([(-a1 - rt) / (2.0 * a2), (-a1 + rt) / (2.0 * a2)])
        elif a1 != 0.0:
            ts.append(-a0 / a1)
        t_req = max(ts)
        valid_from = max(2, int(math.floor(math.exp(t_req))) + 1)
        return SmoothFamilyDerivatives(first=first, second=second, valid_from=valid_from)

    def _in_ell1(self) -> TriState:
        g, e = self.gamma, self.eta
        return TriState.of(g > 1.0 or (g == 1.0 and e > 1.0))

    def _in_ell2(self) -> TriState:
        g, e = self.gamma, self.eta
        return TriState.of(g > 0.5 or (g == 0.5 and e > 0.5))

    def describe(self) -> dict:
        return {"family": self.name, "gamma": self.gamma, "eta": self.eta, "d1": self.d1}


@dataclass(frozen=True)
class ConstantGrid(GridSequence):
    """Equally spaced points: d_n = d for all n."""

    d: float = 1.0
    name: str = "constant"

    def __post_init__(self) -> None:
        if not (self.d > 0.0 and math.isfinite(self.d)):
            raise GridError("constant gap must be positive and finite")

    def gap(self, n: int) -> float:
        if n < 1:
            raise GridError(f"gap index must be >= 1, got {n}")
        return self.d

    def gaps(self, lo: int, hi: int) -> np.ndarray:
        self._check_range(lo, hi)
        return np.full(hi - lo, self.d)

    def gap_log_ratio(self, n: int, k: int) -> float:
        return 0.0

    def gap_log_ratio_block(self, lo: int, hi: int, k: int) -> np.ndarray:
        return np.zeros(hi - lo)

    def x(self, n: int) -> float:
        if n < 0:
            raise GridError(f"x index must be >= 0, got {n}")
        return self.d * n

    def derivatives(self) -> SmoothFamilyDerivatives:
        return SmoothFamilyDerivatives(first=lambda x: 0.0, second=lambda x: 0.0, valid_from=1)

    def _in_ell1(self) -> TriState:
        return TriState.FALSE

    def _in_ell2(self) -> TriState:
        return TriState.FALSE

    def describe(self) -> dict:
        return {"family": self.name, "d": self.d}


@dataclass(frozen=True)
class ExplicitGrid(GridSequence):
    """Finite list of gaps with a tail policy.

    tail="cycle" repeats the list periodically (the default; it keeps
    every finite list inside the infinite-grid model), "hold" repeats
    the last gap, "error" raises beyond the data.
    """

    values: tuple[float, ...]
    tail: str = "cycle"
    name: str = "explicit"

    def __post_init__(self) -> None:
        if not self.values:
            raise GridError("explicit grid needs at least one gap")
        if any(not (v > 0.0 and math.isfinite(v)) for v in self.values):
            raise GridError("explicit gaps must be positive and finite")
        if self.tail not in ("cycle", "hold", "error"):
            raise GridError(f"unknown tail policy {self.tail!r}")
        if self.tail == "error":
            object.__setattr__(self, "max_index", len(self.values))

    def gap(self, n: int) -> float:
        if n < 1:
            raise GridError(f"gap index must be >= 1, got {n}")
        m = len(self.values)
        if n <= m:
            return self.values[n - 1]
        if self.tail == "cycle":
            return self.values[(n - 1) % m]
        if self.tail == "hold":
            return self.values[-1]
        raise GridError(f"index {n} beyond explicit data ({m} gaps, tail='error')")

    def gaps(self, lo: int, hi: int) -> np.ndarray:
        self._check_range(lo, hi)
        m = len(self.values)
        vals = np.asarray(self.values, dtype=float)
        idx = np.arange(lo - 1, hi - 1)
        if self.tail == "cycle":
            return vals[idx % m]
        out = vals[np.minimum(idx, m - 1)]
        return out

    def _in_ell1(self) -> TriState:
        # cycle and hold tails have gaps bounded below by a positive
        # constant, so neither sum converges; a finite list decides nothing.
        return TriState.FALSE if self.tail in ("cycle", "hold") else TriState.UNKNOWN

    def _in_ell2(self) -> TriState:
        return TriState.FALSE if self.tail in ("cycle", "hold") else TriState.UNKNOWN

    def describe(self) -> dict:
        return {
            "family": self.name,
            "count": len(self.values),
            "tail": self.tail,
            "head": list(self.values[:8]),
        }


class CustomGrid(GridSequence):
    """Wraps an arbitrary gap callable; values are validated on the way out."""

    def __init__(
        self,
        fn: Callable[[int], float],
        name: str = "custom",
        max_index: Optional[int] = None,
        derivatives: Optional[SmoothFamilyDerivatives] = None,
    ) -> None:
        self._fn = fn
        self.name = name
        self.max_index = max_index
        self._derivatives = derivatives

    def gap(self, n: int) -> float:
        if n < 1:
            raise GridError(f"gap index must be >= 1, got {n}")
        if self.max_index is not None and n > self.max_index:
            raise GridError(f"index {n} beyond available data ({self.max_index})")
        v = float(self._fn(n))
        if not (v > 0.0 and math.isfinite(v)):
            raise GridError(f"gap callable returned non-positive value {v!r} at n={n}")
        return v

    def derivatives(self) -> Optional[SmoothFamilyDerivatives]:
        return self._derivatives

    def describe(self) -> dict:
        return {"family": self.name}


@dataclass(frozen=True)
class RatioStats:
    """Tail behaviour of the consecutive-gap ratio d_{n+1}/d_n."""

    window: tuple[int, int]
    min_ratio: float
    max_ratio: float
    limit_estimate: float

    def to_json(self) -> dict:
        return {
            "window": list(self.window),
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "limit_estimate": self.limit_estimate,
        }


def ratio_stats(grid: GridSequence, horizon: int) -> RatioStats:
    """Min, max, and a limit estimate of d_{n+1}/d_n over [horizon/2, horizon].

    The limit estimate is the geometric mean of the window ratios
    (partial products telescope, so it is robust); for genuinely
    oscillating families it is a cycle average, not a limit, and the
    min/max spread says so.
    """
    if horizon < 4:
        raise GridError("ratio_stats needs horizon >= 4")
    lo = max(2, horizon // 2)
    mn, mx = math.inf, -math.inf
    logsum = ChunkedSum()
    count = 0
    for a in range(lo, horizon + 1, _CHUNK):
        b = min(a + _CHUNK, horizon + 1)
        d = grid.gaps(a, b + 1)
        ratios = d[1:] / d[:-1]
        mn = min(mn, float(ratios.min()))
        mx = max(mx, float(ratios.max()))
        logsum.add_array(np.log(ratios))
        count += len(ratios)
    est = math.exp(logsum.total() / count)
    return RatioStats(window=(lo, horizon), min_ratio=mn, max_ratio=mx, limit_estimate=est)


@dataclass(frozen=True)
class Summability:
    """Membership of the gap sequence in l^1 and l^2."""

    in_ell1: TriState
    in_ell2: TriState
    method: str
    diagnostics: dict

    def to_json(self) -> dict:
        return {
            "in_ell1": self.in_ell1.value,
            "in_ell2": self.in_ell2.value,
            "method": self.method,
            "diagnostics": self.diagnostics,
        }


def classify_summability(grid: GridSequence, probe_horizon: int = 1 << 16) -> Summability:
    """Decide whether sum d_n and sum d_n^2 converge.

    Closed-form families answer exactly.  For custom grids the partial
    sums at dyadic checkpoints are reported as diagnostics but never
    promoted to a divergence verdict on their own.
    """
    e1, e2 = grid._in_ell1(), grid._in_ell2()
    if e1 is not TriState.UNKNOWN and e2 is not TriState.UNKNOWN:
        return Summability(e1, e2, method="closed-form", diagnostics={})
    horizon = probe_horizon
    if grid.max_index is not None:
        horizon = min(horizon, grid.max_index)
    checkpoints = []
    total1, total2 = ChunkedSum(), ChunkedSum()
    prev = 1
    mark = 16
    while mark <= horizon:
        d = grid.gaps(prev, mark + 1)
        total1.add_array(d)
        total2.add_array(d * d)
        checkpoints.append({"n": mark, "sum_d": total1.total(), "sum_d2": total2.total()})
        prev = mark + 1
        mark *= 2
    return Summability(
        e1,
        e2,
        method="partial-sums",
        diagnostics={"checkpoints": checkpoints, "horizon": horizon},
    )
