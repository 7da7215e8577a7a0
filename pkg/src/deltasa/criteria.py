"""Self-adjointness tests and gap-asymptotics checks.

Four families of machinery live here:

* divergence probes for the weighted coupling series (test_carleman_i,
  test_condition_I) and for the tail series of condition A;
* envelope bound probes (test_bound_II / test_bound_III) asking whether
  alpha stays below / above an explicit envelope built from the gap
  profile and a comparison function G;
* regularity checks on the gap profile itself: the first-order ratio
  expansion (check_asymptotic_eq10), the smooth-family conditions
  d0..d3 (check_d_conditions), the higher-order gate d4 (check_d4),
  and the curvature functional F with its Taylor expansion;
* the period-two tail structure: parity limits of rho_n
  (check_condition_B), the l2 test on r_n*rtilde_n (check_condition_A),
  and the comparison function selection (select_G, G_nlog,
  verify_G_limits).

Numerical honesty rule: a series is declared divergent only by exponent
comparison on recognized families.  Partial sums alone never upgrade a
trend to a verdict.  Boundedness-style conclusions ("holds with some
constant") are reported as window-stabilization facts at a stated
horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .grid import (
    ConstantGrid,
    ExplicitGrid,
    GridError,
    GridSequence,
    PowerLogGrid,
    classify_summability,
    ratio_stats,
)
from .jacobi import AlphaSequence, ExplicitAlpha, PeriodPair, TildeSequence
from .numerics import (
    DRIFT_TOL,
    ChunkedSum,
    Trend,
    TriState,
    aitken,
    geometric_ladder,
    richardson_pair,
    signed_drift,
    sqrt1p_minus_1,
    sqrt1p_tail,
    sqrt_series_coeffs,
    tail_trend,
    tail_windows,
)

__all__ = [
    "SeriesVerdict",
    "SeriesProbe",
    "BoundProbe",
    "GKind",
    "GFunction",
    "G_nlog",
    "select_G",
    "F",
    "F_block",
    "F_expansion",
    "expansion_remainder_block",
    "FOverDProbe",
    "f_over_d_probe",
    "test_carleman_i",
    "test_condition_I",
    "test_bound_II",
    "test_bound_III",
    "Eq10Result",
    "check_asymptotic_eq10",
    "DConditions",
    "check_d_conditions",
    "D4Result",
    "check_d4",
    "GLimits",
    "verify_G_limits",
    "check_condition_A",
    "ConditionB",
    "check_condition_B",
]

_CHUNK = 1 << 15


# ---------------------------------------------------------------------------
# probe result types


class SeriesVerdict(str, Enum):
    DIVERGES = "diverges"
    CONVERGES = "converges"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SeriesProbe:
    test: str
    params: dict
    checkpoints: tuple[tuple[int, float], ...]
    fitted_growth: str
    verdict: SeriesVerdict
    gate_failed: bool = False
    witnesses: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "test": self.test,
            "params": self.params,
            "checkpoints": [[n, s] for n, s in self.checkpoints],
            "verdict": self.verdict.value,
            "witnesses": {"fitted_growth": self.fitted_growth, "gate_failed": self.gate_failed}
            | self.witnesses,
        }


@dataclass(frozen=True)
class BoundProbe:
    test: str
    params: dict
    horizon: int
    minimal_constant: float
    window_sups: tuple[float, float]
    drift: float
    holds: TriState
    witnesses: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "test": self.test,
            "params": self.params,
            "horizon": self.horizon,
            "minimal_constant": self.minimal_constant,
            "window_sups": list(self.window_sups),
            "drift": self.drift,
            "holds": self.holds.value,
            "witnesses": self.witnesses,
        }


class GKind(str, Enum):
    ZERO = "zero"
    NLOG = "nlog"
    CUSTOM = "custom"


@dataclass(frozen=True)
class GFunction:
    """Comparison function G for the envelope bounds.

    kind ZERO is the flat choice valid whenever F(n)/d_n is bounded;
    NLOG carries the two-branch closed form for the gamma = 1 gap
    family; CUSTOM wraps an arbitrary evaluator (by default the
    measured F itself).
    """

    kind: GKind
    eta: Optional[float] = None
    fn: Optional[Callable[[int], float]] = None
    provenance: str = ""

    def evaluate(self, n: int) -> float:
        if self.kind is GKind.ZERO:
            return 0.0
        if self.kind is GKind.NLOG:
            # the closed form needs ln n > 0; clamp the single index n=1
            return G_nlog(self.eta, max(n, 2))
        return float(self.fn(n))

    def evaluate_block(self, lo: int, hi: int) -> np.ndarray:
        if self.kind is GKind.ZERO:
            return np.zeros(hi - lo)
        if self.kind is GKind.NLOG:
            ns = np.maximum(np.arange(lo, hi, dtype=float), 2.0)
            t = np.log(ns)
            out = 0.25 * t**self.eta / ns
            if self.eta > 0.5:
                out = out + self.eta / (ns * t ** (1.0 - self.eta))
            return out
        return np.array([float(self.fn(n)) for n in range(lo, hi)])

    def to_json(self) -> dict:
        d = {"kind": self.kind.value, "provenance": self.provenance}
        if self.eta is not None:
            d["eta"] = self.eta
        return d


def G_nlog(eta: float, n: int) -> float:
    """Two-branch comparison function for gaps 1/(n ln^eta n), eta in (0,1].

    (1/4) ln^eta(n)/n for eta <= 1/2; the branch above 1/2 adds the
    slower term eta/(n ln^{1-eta} n).
    """
    if not (0.0 < eta <= 1.0):
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    t = math.log(n)
    g = 0.25 * t**eta / n
    if eta > 0.5:
        g += eta / (n * t ** (1.0 - eta))
    return g


# ---------------------------------------------------------------------------
# the curvature functional F and its expansion


def _uv_block(grid: GridSequence, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    """u(n) = (d_{n+1}-d_{n-1})/(d_n+d_{n-1}), v(n) = (d_n-d_{n+2})/(d_{n+1}+d_{n+2}).

    Uses the grid's cancellation-free log-ratios when available (the
    difference d_{n+1}-d_{n-1} loses all precision evaluated directly
    once the gaps vary slowly); plain gap arithmetic otherwise.
    """
    g1 = grid.gap_log_ratio_block(lo, hi, 1)
    gm1 = grid.gap_log_ratio_block(lo, hi, -1)
    g2 = grid.gap_log_ratio_block(lo, hi, 2)
    if g1 is not None and gm1 is not None and g2 is not None:
        em1 = np.exp(gm1)
        u = em1 * np.expm1(g1 - gm1) / (1.0 + em1)
        v = -np.expm1(g2) / (np.exp(g1) + np.exp(g2))
        return u, v
    d = grid.gaps(lo - 1, hi + 2)
    dm1, d0, d1, d2 = d[:-3], d[1:-2], d[2:-1], d[3:]
    u = (d1 - dm1) / (d0 + dm1)
    v = (d0 - d2) / (d1 + d2)
    return u, v


def F(grid: GridSequence, n: int) -> float:
    """F(n) = (1/d_n)(r_n/r_{n-1} - 1) + (1/d_{n+1})(r_n/r_{n+1} - 1), r_0 = 1."""
    if n < 1:
        raise GridError(f"F index must be >= 1, got {n}")
    if n == 1:
        d1, d2 = grid.gap(1), grid.gap(2)
        return (grid.r(1) - 1.0) / d1 + (grid.r(1) / grid.r(2) - 1.0) / d2
    return float(F_block(grid, n, n + 1)[0])


def F_block(grid: GridSequence, lo: int, hi: int) -> np.ndarray:
    """F(n) for lo <= n < hi; lo >= 2 (index 1 carries the r_0 convention)."""
    if lo < 2:
        raise GridError("F_block needs lo >= 2; use F() for n = 1")
    if hi <= lo:
        return np.empty(0)
    # the stable log-ratio route needs d_{n-1} on the profile, i.e. n >= 3
    head = []
    start = lo
    if lo == 2:
        u2, v2 = _uv_block(grid, 2, 3)
        d2, d3 = grid.gap(2), grid.gap(3)
        head = [float(sqrt1p_minus_1(u2[0]) / d2 + sqrt1p_minus_1(v2[0]) / d3)]
        start = 3
        if hi <= start:
            return np.array(head)
    u, v = _uv_block(grid, start, hi)
    d = grid.gaps(start, hi + 1)
    vals = sqrt1p_minus_1(u) / d[:-1] + sqrt1p_minus_1(v) / d[1:]
    return np.concatenate([head, vals]) if head else vals


def F_expansion(grid: GridSequence, n: int, k: int) -> float:
    """Truncated expansion (1/d_n) sum_{i<k} C_i u^i + (1/d_{n+1}) sum_{i<k} C_i v^i."""
    if n < 2:
        raise GridError(f"F_expansion needs n >= 2, got {n}")
    if k < 2:
        raise GridError(f"F_expansion needs k >= 2, got {k}")
    u, v = _uv_block(grid, n, n + 1)
    coeffs = sqrt_series_coeffs(k)
    su = sum(coeffs[i] * u[0] ** i for i in range(1, k))
    sv = sum(coeffs[i] * v[0] ** i for i in range(1, k))
    return float(su / grid.gap(n) + sv / grid.gap(n + 1))


def expansion_remainder_block(grid: GridSequence, lo: int, hi: int, k: int) -> np.ndarray:
    """F(n) - F_expansion(n, k) evaluated in fused form.

    The direct difference is hopeless: at n ~ 1e5 on slowly varying
    grids the remainder sits fifteen orders below the leading term.
    Fusing the subtraction into the sqrt Taylor tail keeps full
    relative precision.
    """
    if lo < 2:
        raise GridError("expansion_remainder_block needs lo >= 2")
    if k < 2:
        raise GridError("need k >= 2")
    u, v = _uv_block(grid, lo, hi)
    d = grid.gaps(lo, hi + 1)
    return sqrt1p_tail(u, k) / d[:-1] + sqrt1p_tail(v, k) / d[1:]


@dataclass(frozen=True)
class FOverDProbe:
    sup: float
    window_sups: tuple[float, float]
    drift: float
    stable: TriState
    argmax: int
    window: tuple[int, int]

    def to_json(self) -> dict:
        return {
            "sup": self.sup,
            "window_sups": list(self.window_sups),
            "drift": self.drift,
            "stable": self.stable.value,
            "argmax": self.argmax,
            "window": list(self.window),
        }


def f_over_d_probe(grid: GridSequence, lo: int, hi: int) -> FOverDProbe:
    """Window-stability probe of sup |F(n)|/d_n over [lo, hi].

    Stability means the [hi/2, hi] sup exceeds the [hi/4, hi/2) sup by
    less than the shared drift tolerance; a shrinking sup is stable.
    """
    if hi < 64 or lo < 2:
        raise GridError("f_over_d_probe needs lo >= 2 and hi >= 64")
    (w1a, w1b), (w2a, w2b) = tail_windows(hi)
    w1a = max(w1a, lo)
    sup = -math.inf
    argmax = lo
    sup1 = -math.inf
    sup2 = -math.inf
    for a in range(lo, hi + 1, _CHUNK):
        b = min(a + _CHUNK, hi + 1)
        vals = np.abs(F_block(grid, a, b)) / grid.gaps(a, b)
        m = int(np.argmax(vals))
        if vals[m] > sup:
            sup, argmax = float(vals[m]), a + m
        for (wa, wb), which in (((w1a, w1b), 1), ((w2a, w2b), 2)):
            la, lb = max(a, wa), min(b, wb)
            if la < lb:
                wmax = float(np.max(vals[la - a : lb - a]))
                if which == 1:
                    sup1 = max(sup1, wmax)
                else:
                    sup2 = max(sup2, wmax)
    drift = signed_drift(sup1, sup2)
    stable = TriState.of(drift < DRIFT_TOL)
    if not (math.isfinite(sup1) and math.isfinite(sup2)):
        stable = TriState.UNKNOWN
    return FOverDProbe(
        sup=sup,
        window_sups=(sup1, sup2),
        drift=drift,
        stable=stable,
        argmax=argmax,
        window=(lo, hi),
    )


def select_G(grid: GridSequence, horizon: int = 10**5) -> GFunction:
    """Pick the comparison function G for the envelope bounds.

    Flat grids and profiles with bounded F/d take G = 0.  The
    gamma = 1, eta in (0,1] profile takes the closed two-branch form.
    Everything else falls back to the measured F itself (slack zero),
    keeping the bounds sharp but empirical.
    """
    if isinstance(grid, ConstantGrid):
        return GFunction(GKind.ZERO, provenance="flat-gaps")
    if isinstance(grid, PowerLogGrid):
        g, e = grid.gamma, grid.eta
        if g == 1.0 and 0.0 < e <= 1.0:
            return GFunction(GKind.NLOG, eta=e, provenance="nlog-family")
        if 0.5 < g < 1.0 or (g == 1.0 and e <= 0.0):
            return GFunction(GKind.ZERO, provenance="smooth-family-bounded-F")
    probe = f_over_d_probe(grid, 2, max(64, min(horizon, 10**5)))
    if probe.stable is TriState.TRUE:
        return GFunction(GKind.ZERO, provenance="tail-probe")
    return GFunction(
        GKind.CUSTOM, fn=lambda n: F(grid, n), provenance="measured-curvature"
    )


# ---------------------------------------------------------------------------
# series probes


def _leading_exponents(alpha: AlphaSequence) -> Optional[tuple[float, float, float]]:
    lead = alpha.leading_term()
    if lead is not None:
        return lead
    if isinstance(alpha, ExplicitAlpha) and alpha.tail in ("cycle", "hold"):
        floor = min(abs(v) for v in alpha.values)
        peak = max(abs(v) for v in alpha.values)
        if floor > 0.0:
            # bounded above and below: any positive constant represents
            # the order; use the floor so divergence claims stay sound
            return (floor, 0.0, 0.0)
        if peak == 0.0:
            return (0.0, 0.0, 0.0)
    return None


def _gap_exponents(grid: GridSequence) -> Optional[tuple[float, float]]:
    if isinstance(grid, PowerLogGrid):
        return (-grid.gamma, -grid.eta)
    if isinstance(grid, ConstantGrid):
        return (0.0, 0.0)
    if isinstance(grid, ExplicitGrid) and grid.tail in ("cycle", "hold"):
        return (0.0, 0.0)
    return None


def _bertrand_verdict(P: float, Q: float) -> SeriesVerdict:
    """Convergence class of sum n^P (ln n)^Q by exponent comparison."""
    if P > -1.0:
        return SeriesVerdict.DIVERGES
    if P < -1.0:
        return SeriesVerdict.CONVERGES
    return SeriesVerdict.DIVERGES if Q >= -1.0 else SeriesVerdict.CONVERGES


def _growth_description(checkpoints: list[tuple[int, float]]) -> str:
    if len(checkpoints) < 2:
        return "single checkpoint"
    (n0, s0), (n1, s1) = checkpoints[-2], checkpoints[-1]
    if s1 <= 0.0 or s0 <= 0.0:
        return "degenerate partial sums"
    if s0 == s1:
        return "partial sums flat (converged to working precision)"
    rel = (s1 - s0) / s1
    if rel < 1e-6:
        return f"partial sums nearly flat (relative step {rel:.2e})"
    p_hat = math.log(s1 / s0) / math.log(n1 / n0)
    if p_hat > 0.1:
        return f"power-like growth, exponent ~ {p_hat:.2f}"
    return f"slow growth (log-like; relative step {rel:.2e} per decade)"


def _stream_series(
    term_block: Callable[[int, int], np.ndarray], horizons: tuple[int, ...]
) -> list[tuple[int, float]]:
    acc = ChunkedSum()
    checkpoints = []
    prev = 1
    for h in horizons:
        for a in range(prev, h + 1, _CHUNK):
            b = min(a + _CHUNK, h + 1)
            acc.add_array(term_block(a, b))
        checkpoints.append((h, acc.total()))
        prev = h + 1
    return checkpoints


def _normalize_horizons(horizons) -> tuple[int, ...]:
    hs = tuple(int(h) for h in horizons)
    if not hs or any(b <= a for a, b in zip(hs, hs[1:])):
        raise ValueError("horizons must be nonempty and strictly increasing")
    return hs


def test_carleman_i(
    grid: GridSequence, alpha: AlphaSequence, horizons=(10**4, 10**5, 10**6)
) -> SeriesProbe:
    """Probe of sum |alpha_n| d_n d_{n+1} r_{n-1} r_{n+1}.

    Divergence of this series certifies self-adjointness on its own.
    The verdict comes from exponent comparison when both the coupling
    and the gap family expose their leading orders; otherwise the probe
    reports partial sums and a trend only.
    """
    hs = _normalize_horizons(horizons)

    def term_block(a: int, b: int) -> np.ndarray:
        lo = max(a - 1, 1)
        d = grid.gaps(lo, b + 2)  # gaps d_lo .. d_{b+1}
        idx = a - lo  # position of d_a in the fetched slice
        dn = d[idx : idx + (b - a)]
        dn1 = d[idx + 1 : idx + 1 + (b - a)]
        dn2 = d[idx + 2 : idx + 2 + (b - a)]
        if a >= 2:
            r_prev = np.sqrt(d[idx - 1 : idx - 1 + (b - a)] + dn)
        else:
            # r_0 = 1 convention at the first site
            r_prev = np.empty(b - a)
            r_prev[0] = 1.0
            if b > 2:
                r_prev[1:] = np.sqrt(d[0 : b - 2] + d[1 : b - 1])
        return np.abs(alpha.alphas(a, b)) * dn * dn1 * r_prev * np.sqrt(dn1 + dn2)

    checkpoints = _stream_series(term_block, hs)
    lead = _leading_exponents(alpha)
    gexp = _gap_exponents(grid)
    verdict = SeriesVerdict.UNKNOWN
    witnesses: dict = {}
    if lead is not None and gexp is not None:
        c, p, q = lead
        if c == 0.0:
            verdict = SeriesVerdict.CONVERGES
            witnesses["analytic"] = "zero coupling"
        else:
            P, Q = p + 3.0 * gexp[0], q + 3.0 * gexp[1]
            verdict = _bertrand_verdict(P, Q)
            witnesses["analytic"] = {"P": P, "Q": Q}
    return SeriesProbe(
        test="carleman-i",
        params={"grid": grid.describe(), "alpha": alpha.describe()},
        checkpoints=tuple(checkpoints),
        fitted_growth=_growth_description(checkpoints),
        verdict=verdict,
        witnesses=witnesses,
    )


def test_condition_I(
    grid: GridSequence, alpha: AlphaSequence, horizons=(10**4, 10**5, 10**6)
) -> SeriesProbe:
    """Probe of sum |alpha_n| d_n^3, gated by the gap-ratio condition.

    The divergence certificate needs lim inf d_{n+1}/d_n > 0 and gaps
    in l2 but not l1; outside that gate the probe still reports, with
    gate_failed set so the pipeline will not certify from it.
    """
    hs = _normalize_horizons(horizons)

    def term_block(a: int, b: int) -> np.ndarray:
        d = grid.gaps(a, b)
        return np.abs(alpha.alphas(a, b)) * d**3

    checkpoints = _stream_series(term_block, hs)
    stats = ratio_stats(grid, min(hs[-1], 10**5))
    summ = classify_summability(grid)
    gate_failed = not (
        stats.min_ratio > 1e-6
        and summ.in_ell2 is TriState.TRUE
        and summ.in_ell1 is TriState.FALSE
    )
    lead = _leading_exponents(alpha)
    gexp = _gap_exponents(grid)
    verdict = SeriesVerdict.UNKNOWN
    witnesses: dict = {"ratio_stats": stats.to_json(), "summability": summ.to_json()}
    if lead is not None and gexp is not None:
        c, p, q = lead
        if c == 0.0:
            verdict = SeriesVerdict.CONVERGES
        else:
            P, Q = p + 3.0 * gexp[0], q + 3.0 * gexp[1]
            verdict = _bertrand_verdict(P, Q)
            witnesses["analytic"] = {"P": P, "Q": Q}
    return SeriesProbe(
        test="condition-I",
        params={"grid": grid.describe(), "alpha": alpha.describe()},
        checkpoints=tuple(checkpoints),
        fitted_growth=_growth_description(checkpoints),
        verdict=verdict,
        gate_failed=gate_failed,
        witnesses=witnesses,
    )


# ---------------------------------------------------------------------------
# envelope bound probes


def _bound_probe(
    test: str,
    grid: GridSequence,
    alpha: AlphaSequence,
    G: GFunction,
    N: int,
    residual_block: Callable[[int, int], np.ndarray],
) -> BoundProbe:
    if N < 4:
        raise ValueError("bound probes need N >= 4")
    sup = -math.inf
    arg = 1
    sup1 = sup2 = -math.inf
    have_windows = N >= 64
    if have_windows:
        (w1a, w1b), (w2a, w2b) = tail_windows(N)
    for a in range(1, N + 1, _CHUNK):
        b = min(a + _CHUNK, N + 1)
        vals = residual_block(a, b)
        m = int(np.argmax(vals))
        if vals[m] > sup:
            sup, arg = float(vals[m]), a + m
        if have_windows:
            for lo_w, hi_w, which in ((w1a, w1b, 1), (w2a, w2b, 2)):
                la, lb = max(a, lo_w), min(b, hi_w)
                if la < lb:
                    wmax = float(np.max(vals[la - a : lb - a]))
                    if which == 1:
                        sup1 = max(sup1, wmax)
                    else:
                        sup2 = max(sup2, wmax)
    if have_windows and math.isfinite(sup1) and math.isfinite(sup2):
        drift = signed_drift(sup1, sup2)
        holds = TriState.of(drift < DRIFT_TOL)
    else:
        drift = math.nan
        holds = TriState.UNKNOWN
    return BoundProbe(
        test=test,
        params={"grid": grid.describe(), "alpha": alpha.describe(), "G": G.to_json()},
        horizon=N,
        minimal_constant=sup,
        window_sups=(sup1, sup2),
        drift=drift,
        holds=holds,
        witnesses={"argmax": arg, "minimal_constant_nonneg": max(sup, 0.0)},
    )


def test_bound_II(
    grid: GridSequence, alpha: AlphaSequence, G: GFunction, N: int = 10**6
) -> BoundProbe:
    """Minimal C1 with alpha_n <= -(2/d_n + 2/d_{n+1} + G(n)) + C1 d_n.

    The probe reports the per-n minimal constant's global sup and
    whether it has stabilized between the last two dyadic windows.
    """

    def residual_block(a: int, b: int) -> np.ndarray:
        d = grid.gaps(a, b + 1)
        dn, dn1 = d[:-1], d[1:]
        g = G.evaluate_block(a, b)
        return (alpha.alphas(a, b) + 2.0 / dn + 2.0 / dn1 + g) / dn

    return _bound_probe("bound-II", grid, alpha, G, N, residual_block)


def test_bound_III(
    grid: GridSequence, alpha: AlphaSequence, G: GFunction, N: int = 10**6
) -> BoundProbe:
    """Minimal C2 with alpha_n >= G(n) - C2 d_n (mirror of test_bound_II)."""

    def residual_block(a: int, b: int) -> np.ndarray:
        d = grid.gaps(a, b)
        g = G.evaluate_block(a, b)
        return (g - alpha.alphas(a, b)) / d

    return _bound_probe("bound-III", grid, alpha, G, N, residual_block)


# ---------------------------------------------------------------------------
# gap-profile regularity


def _ratio_minus_1_block(grid: GridSequence, a: int, b: int) -> np.ndarray:
    """d_{n+1}/d_n - 1 for n in [a, b), cancellation-free when possible."""
    g1 = grid.gap_log_ratio_block(a, b, 1)
    if g1 is not None:
        return np.expm1(g1)
    d = grid.gaps(a, b + 1)
    return d[1:] / d[:-1] - 1.0


@dataclass(frozen=True)
class Eq10Result:
    C_estimate: float
    residual_bound: float
    holds: TriState
    increments: tuple[float, ...]
    horizon: int

    def to_json(self) -> dict:
        return {
            "C_estimate": self.C_estimate,
            "residual_bound": self.residual_bound,
            "holds": self.holds.value,
            "increments": list(self.increments),
            "horizon": self.horizon,
        }


def check_asymptotic_eq10(grid: GridSequence, N: int = 10**6) -> Eq10Result:
    """First-order gap-ratio expansion: d_{n+1}/d_n = 1 + C d_n + O(d_n^2).

    The expansion holds for some constant C exactly when the mean of
    y(n) = (ratio - 1)/d_n over the dyadic window [2^j, 2^{j+1}) moves
    by O(d(2^j)) per octave.  The check therefore classifies the ladder
    of scaled window-mean increments |c_{j+1} - c_j| / d(2^j); fitting
    a single C and measuring residual drift cannot make this call (a
    fitted C hides the failure inside its own fit window while slow
    in-window bias flags sound families).

    C_estimate is the tail mean of y over [N/4, N] (finite even for
    families where the expansion fails), and residual_bound the
    realized sup of |ratio - 1 - C d_n|/d_n^2 there; the bound is only
    meaningful when holds is true.
    """
    if N < 100:
        raise ValueError("check_asymptotic_eq10 needs N >= 100")

    def window_mean(a: int, b: int) -> float:
        acc = ChunkedSum()
        for lo_c in range(a, b, _CHUNK):
            hi_c = min(lo_c + _CHUNK, b)
            acc.add_array(_ratio_minus_1_block(grid, lo_c, hi_c) / grid.gaps(lo_c, hi_c))
        return acc.total() / (b - a)

    j_top = N.bit_length() - 1  # 2^{j_top} <= N
    means = {j: window_mean(1 << j, 1 << (j + 1)) for j in range(4, j_top)}
    rungs = sorted(means)[:-1]
    incs = [abs(means[j + 1] - means[j]) / grid.gap(1 << j) for j in rungs]
    report = tail_trend([1 << j for j in rungs], incs)
    holds = _trend_tristate(report.trend)

    lo_fit = max(16, N // 4)
    C = window_mean(lo_fit, N + 1)
    sup_all = -math.inf
    for a in range(lo_fit, N + 1, _CHUNK):
        b = min(a + _CHUNK, N + 1)
        d = grid.gaps(a, b)
        resid = np.abs(_ratio_minus_1_block(grid, a, b) - C * d) / (d * d)
        sup_all = max(sup_all, float(np.max(resid)))
    return Eq10Result(
        C_estimate=C,
        residual_bound=sup_all,
        holds=holds,
        increments=tuple(incs),
        horizon=N,
    )


@dataclass(frozen=True)
class DConditions:
    d0: TriState
    d1: TriState
    d2: TriState
    d3: TriState
    witnesses: dict = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return all(
            s is TriState.TRUE for s in (self.d0, self.d1, self.d2, self.d3)
        )

    def to_json(self) -> dict:
        return {
            "d0": self.d0.value,
            "d1": self.d1.value,
            "d2": self.d2.value,
            "d3": self.d3.value,
            "witnesses": self.witnesses,
        }


def _trend_tristate(trend: Trend) -> TriState:
    if trend is Trend.BOUNDED:
        return TriState.TRUE
    if trend is Trend.GROWING:
        return TriState.FALSE
    return TriState.UNKNOWN


def check_d_conditions(grid: GridSequence, N: int = 10**6) -> DConditions:
    """Smooth-family regularity conditions on the gap profile.

    d0: (d_{n+1}/d_n - 1)/d_n bounded, judged by the trailing trend of
    a geometric ladder (a two-window test misses ln^s-slow growth).
    d1/d2: the profile derivative (resp. second derivative) keeps its
    sign and has bounded oscillation ratio over shifted windows
    [n-1, n+2], sampled on a 13-point grid per n.
    d3: |d''(n)/(d'(n) d_n)| bounded along the tail.
    """
    rungs = geometric_ladder(16, N, 16)
    d0_vals = [abs(float(_ratio_minus_1_block(grid, n, n + 1)[0])) / grid.gap(n) for n in rungs]
    d0_report = tail_trend(rungs, d0_vals)
    witnesses: dict = {"d0_trend": d0_report.to_json()}
    d0 = _trend_tristate(d0_report.trend)

    derivs = grid.derivatives()
    if derivs is None:
        witnesses["derivatives"] = "no derivative data"
        return DConditions(d0, TriState.UNKNOWN, TriState.UNKNOWN, TriState.UNKNOWN, witnesses)

    lo = max(16, derivs.valid_from + 1)
    sample = geometric_ladder(lo, max(N - 2, lo + 1), 64)
    zetas = np.linspace(-1.0, 2.0, 13)

    def oscillation(fn, label: str) -> tuple[TriState, dict]:
        ratios = []
        for n in sample:
            vals = np.array([fn(n + z) for z in zetas])
            if not np.all(np.isfinite(vals)):
                return TriState.UNKNOWN, {label: f"non-finite value near n={n}"}
            if np.any(vals == 0.0) or (np.min(vals) < 0.0 < np.max(vals)):
                return TriState.FALSE, {label: f"zero or sign change near n={n}"}
            a = np.abs(vals)
            ratios.append(float(np.max(a) / np.min(a)))
        report = tail_trend(sample, ratios)
        return _trend_tristate(report.trend), {label: report.to_json()}

    d1, w1 = oscillation(derivs.first, "d1_oscillation")
    witnesses.update(w1)
    d2, w2 = oscillation(derivs.second, "d2_oscillation")
    witnesses.update(w2)

    d3_vals = []
    d3 = None
    for n in sample:
        fp = derivs.first(float(n))
        fpp = derivs.second(float(n))
        if fp == 0.0:
            d3 = TriState.UNKNOWN
            witnesses["d3"] = f"first derivative vanishes at n={n}"
            break
        d3_vals.append(abs(fpp / (fp * grid.gap(n))))
    if d3 is None:
        report = tail_trend(sample, d3_vals)
        witnesses["d3_trend"] = report.to_json()
        d3 = _trend_tristate(report.trend)
    return DConditions(d0, d1, d2, d3, witnesses)


@dataclass(frozen=True)
class D4Result:
    k_min: Optional[int]
    holds: TriState
    per_k: dict
    witnesses: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "k_min": self.k_min,
            "holds": self.holds.value,
            "per_k": {str(k): v for k, v in self.per_k.items()},
            "witnesses": self.witnesses,
        }


def check_d4(grid: GridSequence, N: int = 10**6, k_max: int = 8) -> D4Result:
    """Smallest integer k with |d'(n)/d_n|^k = O(d_n^2).

    Scans k upward and accepts the first k whose ladder statistic
    |d'(n)/d_n|^k / d_n^2 trends bounded.  Minimality is not needed for
    the downstream expansion bound (any admissible k works), so a k
    whose trend is ambiguous is skipped, recorded as unknown.
    """
    derivs = grid.derivatives()
    if derivs is None:
        return D4Result(None, TriState.UNKNOWN, {}, {"derivatives": "no derivative data"})
    lo = max(16, derivs.valid_from + 1)
    rungs = geometric_ladder(lo, max(N, lo + 1), 16)
    base = []
    for n in rungs:
        fp = derivs.first(float(n))
        if fp == 0.0:
            return D4Result(
                None,
                TriState.UNKNOWN,
                {},
                {"derivatives": f"first derivative vanishes at n={n} (condition not applicable)"},
            )
        d = grid.gap(n)
        base.append((math.log(abs(fp)) - math.log(d), math.log(d)))
    per_k = {}
    k_min = None
    for k in range(1, k_max + 1):
        vals = [math.exp(k * lr - 2.0 * ld) for lr, ld in base]
        report = tail_trend(rungs, vals)
        per_k[k] = report.trend.value
        if report.trend is Trend.BOUNDED:
            k_min = k
            break
    if k_min is not None:
        return D4Result(k_min, TriState.TRUE, per_k, {"rungs": rungs})
    all_growing = all(v == Trend.GROWING.value for v in per_k.values())
    return D4Result(
        None,
        TriState.FALSE if all_growing else TriState.UNKNOWN,
        per_k,
        {"rungs": rungs},
    )


# ---------------------------------------------------------------------------
# limits of F for the gamma = 1 family


@dataclass(frozen=True)
class GLimits:
    eta: float
    L1: float
    L2: float
    L3: float
    samples: dict

    def to_json(self) -> dict:
        return {
            "eta": self.eta,
            "L1": self.L1,
            "L2": self.L2,
            "L3": self.L3,
            "samples": self.samples,
        }


def verify_G_limits(grid: PowerLogGrid, horizon: int = 10**6) -> GLimits:
    """Extrapolated limits of the F(n) asymptotics for gaps 1/(n ln^eta n).

    L1 = lim (n/ln^eta n) F(n)                      (expected 1/4)
    L2 = lim n ln^{1-eta}(n) (F - (1/4)ln^eta(n)/n) (expected eta)
    L3 = lim n ln^eta(n) (F - ... - eta/(n ln^{1-eta}n))
         (expected 0 for eta < 1, 1/4 at eta = 1)

    Estimators are calibrated to the corrections' decay: L1 sees a
    1/ln n error, removed by a ratio-2 Richardson step in 1/ln n; L2's
    correction decays like ln^{-(2 eta - 1)}, extrapolated only when
    that exponent is >= 1/2 (below that the raw tail value is already
    the better estimate); L3 uses Aitken acceleration on a three-point
    geometric ladder.
    """
    if not isinstance(grid, PowerLogGrid) or grid.gamma != 1.0:
        raise ValueError("verify_G_limits expects the gamma = 1 profile")
    eta = grid.eta
    if not (0.0 < eta <= 1.0):
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    H = int(horizon)
    if H < 10**3:
        raise ValueError("horizon too small for limit extrapolation")

    def stats(n: int) -> tuple[float, float, float]:
        t = math.log(n)
        f = F(grid, n)
        a = (n / t**eta) * f
        b = n * t ** (1.0 - eta) * (f - 0.25 * t**eta / n)
        c = n * t**eta * (f - 0.25 * t**eta / n - eta / (n * t ** (1.0 - eta)))
        return a, b, c

    n_half = int(round(math.sqrt(H)))
    n_34 = int(round(H ** 0.75))
    a_h, b_h, c_h = stats(H)
    a_s, b_s, c_s = stats(n_half)
    _, _, c_m = stats(n_34)
    L1 = richardson_pair(a_s, a_h, 2.0, 1.0)
    p = 2.0 * eta - 1.0
    L2 = richardson_pair(b_s, b_h, 2.0, p) if p >= 0.5 else b_h
    L3 = aitken(c_s, c_m, c_h)
    return GLimits(
        eta=eta,
        L1=L1,
        L2=L2,
        L3=L3,
        samples={
            "points": [n_half, n_34, H],
            "A": [a_s, a_h],
            "B": [b_s, b_h],
            "C": [c_s, c_m, c_h],
        },
    )


# ---------------------------------------------------------------------------
# tail structure: conditions A and B


def check_condition_A(
    grid: GridSequence, horizons=(10**4, 10**5, 10**6), tilde: Optional[TildeSequence] = None
) -> SeriesProbe:
    """l2 test for the sequence r_n rtilde_n: partial sums of (r_n rtilde_n)^2.

    Convergence here is what lets the periodic comparison argument map
    bounded solutions to l2 ones.  Closed-form families get an analytic
    verdict; flat and cyclic grids always diverge (the terms have a
    positive floor along one parity).
    """
    hs = _normalize_horizons(horizons)
    t = tilde if tilde is not None else TildeSequence(grid)

    def term_block(a: int, b: int) -> np.ndarray:
        d = grid.gaps(a, b + 1)
        L = t.log_abs_block(a, b)
        # parity-unbalanced grids push 2L past the float range; saturate
        # the terms instead of overflowing (the verdict there is analytic
        # anyway, and saturated partial sums still read as divergence)
        return (d[:-1] + d[1:]) * np.exp(np.minimum(2.0 * L, 500.0))

    checkpoints = _stream_series(term_block, hs)
    verdict = SeriesVerdict.UNKNOWN
    witnesses: dict = {}
    if isinstance(grid, PowerLogGrid):
        # terms behave like d_n^2 up to a parity constant
        v = _bertrand_verdict(-2.0 * grid.gamma, -2.0 * grid.eta)
        # the series CONVERGING is the good case for the comparison
        verdict = v
        witnesses["analytic"] = {"P": -2.0 * grid.gamma, "Q": -2.0 * grid.eta}
    elif isinstance(grid, ConstantGrid) or (
        isinstance(grid, ExplicitGrid) and grid.tail in ("cycle", "hold")
    ):
        verdict = SeriesVerdict.DIVERGES
        witnesses["analytic"] = "terms bounded below along a parity"
    if len(checkpoints) >= 2 and checkpoints[-1][1] > checkpoints[-2][1] > 0:
        witnesses["tail_mass"] = checkpoints[-1][1] - checkpoints[-2][1]
    return SeriesProbe(
        test="condition-A",
        params={"grid": grid.describe()},
        checkpoints=tuple(checkpoints),
        fitted_growth=_growth_description(checkpoints),
        verdict=verdict,
        witnesses=witnesses,
    )


@dataclass(frozen=True)
class ConditionB:
    u: PeriodPair
    residual_order: float
    holds: TriState
    window_sups: tuple[float, float]
    horizon: int
    witnesses: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "u": self.u.to_json(),
            "residual_order": self.residual_order,
            "holds": self.holds.value,
            "window_sups": list(self.window_sups),
            "horizon": self.horizon,
            "witnesses": self.witnesses,
        }


def check_condition_B(
    grid: GridSequence,
    horizon: int = 10**6,
    error_order: Optional[float] = None,
    tilde: Optional[TildeSequence] = None,
    ceiling: float = 10.0,
    growth_allowance: float = 4.0,
) -> ConditionB:
    """Period-two structure of rho_n = (1/d_n + 1/d_{n+1}) rtilde_n^2.

    Estimates the parity limits u_odd, u_even by Richardson
    extrapolation along each parity (error order 2*gamma for the
    power-log family, overridable), then checks the defining remainder
    bound: |rho_n - u_parity| / (r_n rtilde_n)^2 bounded over the tail.

    The remainder statistic is noise-floored: at gamma = 1 the float
    error of the log accumulation is amplified by n^2 to order 0.1-0.5,
    so "bounded" is operationalized as staying under an order-unity
    ceiling without explosive window growth, rather than as a vanishing
    drift.  Genuine violations overshoot the ceiling quickly.
    """
    H = int(horizon)
    if H < 256:
        raise ValueError("check_condition_B needs horizon >= 256")
    t = tilde if tilde is not None else TildeSequence(grid)
    if error_order is None:
        if isinstance(grid, PowerLogGrid):
            error_order = 2.0 * grid.gamma
        else:
            error_order = 1.0

    def rho_at(n: int) -> float:
        inv = np.logaddexp(-grid.log_gap(n), -grid.log_gap(n + 1))
        return math.exp(float(inv) + 2.0 * t.log_abs(n))

    # two largest probed indices of each parity: H-ish and H/2-ish
    def parity_estimate(parity: int) -> tuple[float, list]:
        n1 = H if H % 2 == parity else H - 1
        n0 = H // 2 if (H // 2) % 2 == parity else H // 2 - 1
        r0, r1 = rho_at(n0), rho_at(n1)
        est = richardson_pair(r0, r1, n1 / n0, error_order)
        return est, [[n0, r0], [n1, r1]]

    u_odd, pts_odd = parity_estimate(1)
    u_even, pts_even = parity_estimate(0)
    u = PeriodPair(odd=u_odd, even=u_even)

    (w1a, w1b), (w2a, w2b) = tail_windows(H)
    sup1 = sup2 = -math.inf
    for a in range(w1a, H + 1, _CHUNK):
        b = min(a + _CHUNK, H + 1)
        d = grid.gaps(a, b + 1)
        inv = 1.0 / d[:-1] + 1.0 / d[1:]
        L = t.log_abs_block(a, b)
        upar = u.block(a, b)
        # |rho - u|/(r rtilde)^2 computed in the well-scaled frame:
        # |(1/d_n + 1/d_{n+1}) - u e^{-2L}| / (d_n + d_{n+1})
        resid = np.abs(inv - upar * np.exp(-2.0 * L)) / (d[:-1] + d[1:])
        for lo_w, hi_w, which in ((w1a, w1b, 1), (w2a, w2b, 2)):
            la, lb = max(a, lo_w), min(b, hi_w)
            if la < lb:
                wmax = float(np.max(resid[la - a : lb - a]))
                if which == 1:
                    sup1 = max(sup1, wmax)
                else:
                    sup2 = max(sup2, wmax)
    finite = all(
        math.isfinite(x) and x > 0.0 for x in (u_odd, u_even)
    ) and math.isfinite(sup1) and math.isfinite(sup2)
    if not finite:
        holds = TriState.UNKNOWN
    elif sup2 > ceiling:
        holds = TriState.FALSE
    elif sup2 <= growth_allowance * max(sup1, 1e-6):
        holds = TriState.TRUE
    else:
        holds = TriState.UNKNOWN
    return ConditionB(
        u=u,
        residual_order=error_order,
        holds=holds,
        window_sups=(sup1, sup2),
        horizon=H,
        witnesses={
            "parity_points": {"odd": pts_odd, "even": pts_even},
            "ceiling": ceiling,
            "growth_allowance": growth_allowance,
            "product": u.product,
        },
    )


# the probe functions follow the test-(i)/(I)/(II)/(III) naming of the
# criteria they implement; keep pytest from collecting them as tests
# when a test module imports them by name
for _probe in (test_carleman_i, test_condition_I, test_bound_II, test_bound_III):
    _probe.__test__ = False
del _probe
