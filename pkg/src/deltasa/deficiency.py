"""Deficiency analysis: recurrence oracle, Floquet discriminant, verdict.

The oracle solves (B - lambda) h = 0 forward from h_1 = 1 with dynamic
rescaling, classifies square-summability from dyadic block masses, and
never claims more than the block trend supports.  The verdict pipeline
runs the analytic certificates in order of strength and falls back to
the oracle, whose conclusions are always labeled advisory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from .criteria import (
    GFunction,
    SeriesVerdict,
    check_condition_A,
    check_condition_B,
    select_G,
    test_bound_II,
    test_bound_III,
    test_carleman_i,
    test_condition_I,
)
from .grid import GridSequence, classify_summability, ratio_stats
from .jacobi import AlphaSequence, JacobiOperator, PeriodPair, TildeSequence
from .numerics import TriState, block_index

__all__ = [
    "RecurrenceSolution",
    "solve_recurrence",
    "L2Verdict",
    "l2_probe",
    "FloquetResult",
    "floquet_discriminant",
    "VerdictKind",
    "VerdictConfig",
    "CriterionVerdict",
    "deficiency_verdict",
]

_SCALE_BITS = 100  # rescale when |h| leaves [2^-100, 2^100]
_SCALE_UP = 2.0**_SCALE_BITS
_SCALE_DOWN = 2.0**-_SCALE_BITS


@dataclass(frozen=True)
class RecurrenceSolution:
    """Forward solution of (B - lambda) h = 0, stored in scaled form.

    head holds the first entries in plain float precision (complex when
    lambda is complex); block_log_masses[k] is ln of the true l2 mass
    of indices [2^k, 2^{k+1}), complete blocks only.  scale_events
    counts dynamic rescalings; residual_max is the largest row residual
    |off(n-1)h(n-1) + (diag(n)-lambda)h(n) + off(n)h(n+1)| relative to
    the row's magnitude, sampled on rescale-free segments.
    """

    lam: complex
    horizon: int
    head: np.ndarray
    block_log_masses: tuple[tuple[int, float], ...]
    scale_events: int
    residual_max: float
    meta: dict = field(default_factory=dict)

    def head_values(self) -> np.ndarray:
        return self.head

    def to_json(self) -> dict:
        lam = self.lam
        return {
            "lambda": [lam.real, lam.imag] if isinstance(lam, complex) else lam,
            "horizon": self.horizon,
            "head": [
                [v.real, v.imag] if isinstance(v, complex) else float(v)
                for v in self.head[: min(len(self.head), 16)].tolist()
            ],
            "block_log_masses": [[k, m] for k, m in self.block_log_masses],
            "scale_events": self.scale_events,
            "residual_max": self.residual_max,
            "meta": self.meta,
        }


def solve_recurrence(
    op: JacobiOperator,
    lam: Union[float, complex],
    N: int,
    keep: int = 4096,
    residual_stride: int = 997,
) -> RecurrenceSolution:
    """March h_{n+1} = ((lambda - diag(n)) h_n - off(n-1) h_{n-1}) / off(n).

    The first row fixes h_2: (diag(1) - lambda) h_1 + off(1) h_2 = 0
    with h_1 = 1.  Growth beyond 2^100 (or decay below) triggers a
    power-of-two rescale of the running pair, tracked in a log ledger
    so block masses stay exact.  Row residuals are spot-checked every
    residual_stride steps, skipping rows adjacent to a rescale (the
    identity only holds within one scale frame).

    head entries are stored in whatever scale frame was current when
    they streamed past; meta["head_pure_until"] marks the last index
    before the first rescale, up to which head carries true values.
    """
    if N < 8:
        raise ValueError("solve_recurrence needs N >= 8")
    complex_lam = isinstance(lam, complex) and lam.imag != 0.0
    lam_c = complex(lam) if complex_lam else float(lam)
    dtype = np.complex128 if complex_lam else np.float64
    keep = min(keep, N)

    head = np.empty(keep, dtype=dtype)
    h_prev = 1.0 + 0.0j if complex_lam else 1.0
    head[0] = h_prev
    diag1 = op.diag(1)
    off1 = op.off(1)
    h_cur = -(diag1 - lam_c) * h_prev / off1
    if keep > 1:
        head[1] = h_cur

    sigma = 0.0  # true h = stored h * exp(sigma)
    scale_events = 0
    residual_max = 0.0
    last_rescale = 1
    first_rescale = N + 1

    block_logs: list[tuple[int, float]] = []
    acc = abs(h_prev) ** 2  # running block mass, current scale frame
    cur_block = 0  # block [1, 2) holds n = 1

    chunk = 1 << 14
    n = 1  # h_cur is h at index n+1
    while n < N - 1:
        hi = min(n + chunk, N - 1)
        diags = op.diag_block(n + 1, hi + 1)
        offs_prev = op.off_block(n, hi)
        offs_cur = op.off_block(n + 1, hi + 1)
        for j in range(hi - n):
            m = n + 1 + j  # index of h_cur
            b = block_index(m)
            if b != cur_block:
                block_logs.append((cur_block, math.log(acc) + 2.0 * sigma if acc > 0.0 else -math.inf))
                acc = 0.0
                cur_block = b
            a = abs(h_cur)
            acc += a * a
            h_next = ((lam_c - diags[j]) * h_cur - offs_prev[j] * h_prev) / offs_cur[j]
            if residual_stride and m % residual_stride == 0 and m - last_rescale > 1:
                row = offs_prev[j] * h_prev + (diags[j] - lam_c) * h_cur + offs_cur[j] * h_next
                scale = abs(offs_prev[j] * h_prev) + abs((diags[j] - lam_c) * h_cur) + abs(
                    offs_cur[j] * h_next
                )
                if scale > 0.0:
                    residual_max = max(residual_max, abs(row) / scale)
            h_prev, h_cur = h_cur, h_next
            if m + 1 < keep + 1:
                head[m] = h_cur  # h at index m+1 lands at position m (0-based)
            peak = max(abs(h_cur), abs(h_prev))
            if peak > _SCALE_UP or (0.0 < peak < _SCALE_DOWN):
                shift = math.ldexp(1.0, -int(math.frexp(peak)[1]))
                h_prev *= shift
                h_cur *= shift
                acc *= shift * shift
                sigma -= math.log(shift)
                scale_events += 1
                last_rescale = m
                first_rescale = min(first_rescale, m)
        n = hi
    # h_cur is h_N; close its block, keeping it only if complete
    b = block_index(N)
    if b != cur_block:
        block_logs.append((cur_block, math.log(acc) + 2.0 * sigma if acc > 0.0 else -math.inf))
    else:
        acc += abs(h_cur) ** 2
        if N == (1 << (cur_block + 1)) - 1:
            block_logs.append((cur_block, math.log(acc) + 2.0 * sigma if acc > 0.0 else -math.inf))
    head_n = min(keep, N)
    return RecurrenceSolution(
        lam=lam_c if complex_lam else complex(lam_c, 0.0),
        horizon=N,
        head=head[:head_n],
        block_log_masses=tuple(block_logs),
        scale_events=scale_events,
        residual_max=residual_max,
        meta={
            "keep": head_n,
            "residual_stride": residual_stride,
            "head_pure_until": min(first_rescale, head_n),
        },
    )


@dataclass(frozen=True)
class L2Verdict:
    classification: str  # "in_ell2" | "not_in_ell2" | "unknown"
    decay_ratio: float
    block_norms: tuple[tuple[int, float], ...]
    margin: float
    window: int
    notes: str = ""

    def to_json(self) -> dict:
        return {
            "classification": self.classification,
            "decay_ratio": self.decay_ratio,
            "block_norms": [[k, m] for k, m in self.block_norms],
            "margin": self.margin,
            "window": self.window,
            "notes": self.notes,
        }


def l2_probe(
    sol: RecurrenceSolution,
    margin: float = 0.1,
    window: int = 6,
    min_blocks: int = 8,
) -> L2Verdict:
    """Classify square-summability from dyadic block masses.

    in_ell2 requires every consecutive block-mass ratio over the last
    `window` blocks to stay below 1 - margin; not_in_ell2 requires
    every ratio above 1 + margin.  Fewer than min_blocks complete
    blocks, or mixed behavior, yields unknown.  decay_ratio is the
    geometric mean ratio over the window.
    """
    blocks = sol.block_log_masses
    if len(blocks) < min_blocks:
        return L2Verdict(
            "unknown",
            math.nan,
            blocks,
            margin,
            window,
            notes=f"only {len(blocks)} complete blocks, need {min_blocks}",
        )
    tail = blocks[-(window + 1):]
    log_ratios = [b[1] - a[1] for a, b in zip(tail, tail[1:])]
    if any(not math.isfinite(r) for r in log_ratios):
        return L2Verdict("unknown", math.nan, blocks, margin, window, notes="empty block in window")
    # compare in log space: exploding solutions overflow exp()
    mean_log = sum(log_ratios) / len(log_ratios)
    decay_ratio = math.exp(mean_log) if mean_log < 700.0 else math.inf
    if max(log_ratios) < math.log(1.0 - margin):
        cls = "in_ell2"
    elif min(log_ratios) > math.log1p(margin):
        cls = "not_in_ell2"
    else:
        cls = "unknown"
    return L2Verdict(cls, decay_ratio, blocks, margin, window)


@dataclass(frozen=True)
class FloquetResult:
    u: PeriodPair
    a: float
    lam: float
    discriminant: float
    inside_band: TriState

    def to_json(self) -> dict:
        return {
            "u": self.u.to_json(),
            "a": self.a,
            "lambda": self.lam,
            "discriminant": self.discriminant,
            "inside_band": self.inside_band.value,
        }


def floquet_discriminant(
    u: PeriodPair, a: float, lam: float = 0.0, margin: float = 1e-6
) -> FloquetResult:
    """Half-trace of the period-two transfer matrix of the comparison
    operator (diagonal (a+1) u_n, off-diagonal 1) at spectral point lam.

    Delta = ((lam - (a+1) u_odd)(lam - (a+1) u_even) - 2) / 2.
    |Delta| < 1 puts lam inside a spectral band: every solution is
    bounded and non-decaying, which upgrades to the deficiency verdict
    whenever the scaling sequence r rtilde is square-summable.  Values
    within `margin` of 1 are flagged unknown rather than called.
    """
    ap1 = a + 1.0
    delta = ((lam - ap1 * u.odd) * (lam - ap1 * u.even) - 2.0) / 2.0
    if abs(delta) <= 1.0 - margin:
        inside = TriState.TRUE
    elif abs(delta) >= 1.0 + margin:
        inside = TriState.FALSE
    else:
        inside = TriState.UNKNOWN
    return FloquetResult(u=u, a=a, lam=lam, discriminant=delta, inside_band=inside)


# ---------------------------------------------------------------------------
# verdict pipeline


class VerdictKind(str, Enum):
    SELF_ADJOINT = "SelfAdjoint"
    DEFICIENT = "Deficient"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class VerdictConfig:
    horizons: tuple[int, ...] = (10**4, 10**5, 10**6)
    oracle_horizon: int = 10**5
    lambda_probes: tuple[complex, complex] = (1j, -1j)
    floquet_margin: float = 1e-6
    condition_b_ceiling: float = 10.0
    ratio_limit_tol: float = 0.02
    ratio_spread_max: float = 1.1
    l2_margin: float = 0.1

    def to_json(self) -> dict:
        return {
            "horizons": list(self.horizons),
            "oracle_horizon": self.oracle_horizon,
            "lambda_probes": [[z.real, z.imag] for z in self.lambda_probes],
            "floquet_margin": self.floquet_margin,
            "condition_b_ceiling": self.condition_b_ceiling,
            "ratio_limit_tol": self.ratio_limit_tol,
            "ratio_spread_max": self.ratio_spread_max,
            "l2_margin": self.l2_margin,
        }


@dataclass(frozen=True)
class CriterionVerdict:
    verdict: VerdictKind
    n_plus: Optional[int]
    n_minus: Optional[int]
    certificate: Optional[str]
    advisory: bool
    provenance: str
    flags: tuple[str, ...] = ()
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "n_plus": self.n_plus,
            "n_minus": self.n_minus,
            "certificate": self.certificate,
            "advisory": self.advisory,
            "provenance": self.provenance,
            "flags": list(self.flags),
            "diagnostics": self.diagnostics,
        }


def _oracle_advisory(
    op: JacobiOperator, cfg: VerdictConfig, diagnostics: dict, flags: list
) -> CriterionVerdict:
    """Numerical fallback: solve at each nonreal probe point and compare."""
    classes = []
    for lam in cfg.lambda_probes:
        sol = solve_recurrence(op, lam, cfg.oracle_horizon)
        probe = l2_probe(sol, margin=cfg.l2_margin)
        classes.append(probe.classification)
        key = f"oracle_lambda_{lam.imag:+g}i" if lam.imag else f"oracle_lambda_{lam.real:g}"
        diagnostics[key] = {"solution": sol.to_json(), "l2": probe.to_json()}
    if all(c == "in_ell2" for c in classes):
        return CriterionVerdict(
            verdict=VerdictKind.DEFICIENT,
            n_plus=1,
            n_minus=1,
            certificate="oracle-ell2",
            advisory=True,
            provenance=(
                "numerical-advisory: the forward solution at each nonreal probe "
                "point is square-summable by dyadic block decay"
            ),
            flags=tuple(flags),
            diagnostics=diagnostics,
        )
    if all(c == "not_in_ell2" for c in classes):
        return CriterionVerdict(
            verdict=VerdictKind.SELF_ADJOINT,
            n_plus=0,
            n_minus=0,
            certificate="oracle-growth",
            advisory=True,
            provenance=(
                "numerical-advisory: the forward solution at each nonreal probe "
                "point grows block-to-block, so no square-summable solution was found"
            ),
            flags=tuple(flags),
            diagnostics=diagnostics,
        )
    return CriterionVerdict(
        verdict=VerdictKind.INCONCLUSIVE,
        n_plus=None,
        n_minus=None,
        certificate=None,
        advisory=True,
        provenance="inconclusive: oracle block trends disagree or are ambiguous",
        flags=tuple(flags),
        diagnostics=diagnostics,
    )


def deficiency_verdict(
    grid: GridSequence,
    alpha: AlphaSequence,
    cfg: Optional[VerdictConfig] = None,
) -> CriterionVerdict:
    """Decide SelfAdjoint / Deficient(1,1) / Inconclusive for B built on
    (grid, alpha).

    Certificate order (strongest first):
      0. gaps summable -> outside the model, Inconclusive;
         gaps not square-summable -> SelfAdjoint for every coupling.
      1. divergent coupling series (carleman-i; condition-I when its
         gate holds).
      2. envelope bounds II / III with the selected G.
      3. scaled-gap couplings near the critical line: conditions A and
         B plus the Floquet discriminant strictly inside a band.
      4. the lambda = +-i oracle, always advisory.
    """
    cfg = cfg or VerdictConfig()
    diagnostics: dict = {"config": cfg.to_json()}
    flags: list[str] = []

    summ = classify_summability(grid)
    diagnostics["summability"] = summ.to_json()
    if summ.in_ell1 is TriState.TRUE:
        return CriterionVerdict(
            verdict=VerdictKind.INCONCLUSIVE,
            n_plus=None,
            n_minus=None,
            certificate=None,
            advisory=False,
            provenance=(
                "inconclusive: the gaps are summable, so the points accumulate "
                "and the half-line model these tests address does not apply"
            ),
            flags=("gaps-summable-outside-model",),
            diagnostics=diagnostics,
        )
    if summ.in_ell2 is TriState.FALSE:
        return CriterionVerdict(
            verdict=VerdictKind.SELF_ADJOINT,
            n_plus=0,
            n_minus=0,
            certificate="non-square-summable-gaps",
            advisory=False,
            provenance=(
                "certified by non-square-summable-gaps: the squared gaps diverge, "
                "which forces self-adjointness for every coupling"
            ),
            flags=tuple(flags),
            diagnostics=diagnostics,
        )

    horizons = cfg.horizons
    carleman = test_carleman_i(grid, alpha, horizons=horizons)
    diagnostics["carleman_i"] = carleman.to_json()
    if carleman.verdict is SeriesVerdict.DIVERGES:
        return CriterionVerdict(
            verdict=VerdictKind.SELF_ADJOINT,
            n_plus=0,
            n_minus=0,
            certificate="carleman-series",
            advisory=False,
            provenance=(
                "certified by carleman-series: the weighted coupling series "
                "diverges by exponent comparison"
            ),
            flags=tuple(flags),
            diagnostics=diagnostics,
        )

    cond_i = test_condition_I(grid, alpha, horizons=horizons)
    diagnostics["condition_I"] = cond_i.to_json()
    if cond_i.verdict is SeriesVerdict.DIVERGES and not cond_i.gate_failed:
        return CriterionVerdict(
            verdict=VerdictKind.SELF_ADJOINT,
            n_plus=0,
            n_minus=0,
            certificate="weighted-gap-series",
            advisory=False,
            provenance=(
                "certified by weighted-gap-series: the cubed-gap coupling series "
                "diverges and the gap-ratio gate holds"
            ),
            flags=tuple(flags),
            diagnostics=diagnostics,
        )

    N_bound = horizons[-1] if len(horizons) == 1 else horizons[-2]
    G = select_G(grid, horizon=min(N_bound, 10**5))
    diagnostics["G"] = G.to_json()
    bound2 = test_bound_II(grid, alpha, G, N=N_bound)
    diagnostics["bound_II"] = bound2.to_json()
    if bound2.holds is TriState.TRUE:
        return CriterionVerdict(
            verdict=VerdictKind.SELF_ADJOINT,
            n_plus=0,
            n_minus=0,
            certificate="upper-envelope-bound",
            advisory=False,
            provenance=(
                "certified by upper-envelope-bound: alpha stays below the "
                f"negative envelope with stabilized constant {bound2.minimal_constant:.6g}"
            ),
            flags=tuple(flags),
            diagnostics=diagnostics,
        )
    bound3 = test_bound_III(grid, alpha, G, N=N_bound)
    diagnostics["bound_III"] = bound3.to_json()
    if bound3.holds is TriState.TRUE:
        return CriterionVerdict(
            verdict=VerdictKind.SELF_ADJOINT,
            n_plus=0,
            n_minus=0,
            certificate="lower-envelope-bound",
            advisory=False,
            provenance=(
                "certified by lower-envelope-bound: alpha stays above the "
                f"comparison envelope with stabilized constant {bound3.minimal_constant:.6g}"
            ),
            flags=tuple(flags),
            diagnostics=diagnostics,
        )

    op = JacobiOperator(grid, alpha)

    scaled = alpha.scaled_gap_form()
    if scaled is not None:
        a, pert_ok = scaled
        stats = ratio_stats(grid, min(horizons[-1], 10**5))
        diagnostics["ratio_stats"] = stats.to_json()
        ratio_ok = (
            abs(stats.limit_estimate - 1.0) <= cfg.ratio_limit_tol
            and stats.max_ratio / stats.min_ratio <= cfg.ratio_spread_max
        )
        if not ratio_ok:
            flags.append("gap-ratio-not-flat")
        if pert_ok is TriState.UNKNOWN:
            flags.append("perturbation-order-unknown")
        if ratio_ok and pert_ok is not TriState.FALSE:
            tilde = TildeSequence(grid)
            cond_a = check_condition_A(grid, horizons=horizons, tilde=tilde)
            diagnostics["condition_A"] = cond_a.to_json()
            cond_b = check_condition_B(
                grid,
                horizon=horizons[-1],
                tilde=tilde,
                ceiling=cfg.condition_b_ceiling,
            )
            diagnostics["condition_B"] = cond_b.to_json()
            if cond_a.verdict is SeriesVerdict.CONVERGES and cond_b.holds is TriState.TRUE:
                fl = floquet_discriminant(cond_b.u, a, 0.0, margin=cfg.floquet_margin)
                diagnostics["floquet"] = fl.to_json()
                if fl.inside_band is TriState.TRUE and pert_ok is TriState.TRUE:
                    return CriterionVerdict(
                        verdict=VerdictKind.DEFICIENT,
                        n_plus=1,
                        n_minus=1,
                        certificate="periodic-comparison",
                        advisory=False,
                        provenance=(
                            "certified by periodic-comparison: the scaled operator "
                            "is a summable perturbation of a period-two matrix whose "
                            f"discriminant {fl.discriminant:.6g} lies strictly inside a band"
                        ),
                        flags=tuple(flags),
                        diagnostics=diagnostics,
                    )
                if fl.inside_band is TriState.UNKNOWN:
                    flags.append("discriminant-at-band-edge")
                elif fl.inside_band is TriState.TRUE:
                    flags.append("perturbation-order-not-certified")
                else:
                    flags.append("discriminant-outside-band")
            else:
                if cond_a.verdict is not SeriesVerdict.CONVERGES:
                    flags.append("scaling-sequence-not-square-summable")
                if cond_b.holds is not TriState.TRUE:
                    flags.append("period-two-structure-not-established")

    return _oracle_advisory(op, cfg, diagnostics, flags)
