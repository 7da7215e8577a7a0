"""Reproduction battery: ten numbered checks with explicit tolerances.

Each check re-derives one quantitative claim about the gap families and
couplings this package handles, compares against an independently
computed expectation, and reports measured value, tolerance, and
runtime.  run_battery is what the CLI's verify subcommand and the
acceptance tests call.

Tolerances are stated at the default horizon 10^6.  A smaller horizon
loosens them by the documented schedule below (each check names its
scale factor); the checks themselves are horizon-independent claims.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .criteria import (
    check_condition_B,
    expansion_remainder_block,
    f_over_d_probe,
    verify_G_limits,
)
from .deficiency import (
    VerdictConfig,
    VerdictKind,
    deficiency_verdict,
    floquet_discriminant,
    l2_probe,
    solve_recurrence,
)
from .grid import PowerLogGrid
from .jacobi import (
    AlphaZeroAlpha,
    JacobiOperator,
    PowerSumAlpha,
    ScaledInverseGapsAlpha,
    TildeSequence,
    rho,
    scaled_operator,
)
from .numerics import TriState, tail_windows

__all__ = ["CheckResult", "BatteryReport", "run_battery", "CHECK_NAMES"]

CHECK_NAMES = (
    "wallis-parity",
    "period-product",
    "ratio-scaling",
    "f-limits",
    "f-over-gap",
    "expansion-remainder",
    "zero-energy-decay",
    "verdict-phases",
    "scaling-identity",
    "oracle-agreement",
)


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    details: list[str] = field(default_factory=list)
    runtime: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        summary = self.details[0] if self.details else ""
        return f"[{status}] {self.criterion:2d} {self.name} ({self.runtime:.2f}s): {summary}"

    def to_json(self) -> dict:
        return {
            "criterion": self.criterion,
            "name": self.name,
            "passed": self.passed,
            "details": self.details,
            "runtime": self.runtime,
        }


@dataclass
class BatteryReport:
    results: list[CheckResult]
    horizon: int

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> list[str]:
        out = [r.line() for r in self.results]
        n_pass = sum(r.passed for r in self.results)
        out.append(f"{n_pass}/{len(self.results)} checks passed at horizon {self.horizon}")
        return out

    def to_json(self) -> dict:
        return {
            "horizon": self.horizon,
            "passed": self.passed,
            "results": [r.to_json() for r in self.results],
        }


def _assert_close(details: list, label: str, measured: float, expected: float, tol: float) -> bool:
    err = abs(measured - expected)
    ok = err <= tol
    details.append(
        f"{label}: measured={measured:.10g} expected={expected:.10g} "
        f"err={err:.3g} tol={tol:.3g} {'ok' if ok else 'VIOLATED'}"
    )
    return ok


def _check_1_wallis(H: int) -> CheckResult:
    """Parity limits of rho_n for d = 1/n: odd -> pi, even -> 4/pi."""
    t0 = time.time()
    grid = PowerLogGrid(1.0, 0.0, 1.0)
    tilde = TildeSequence(grid)
    n = 10**4
    details: list[str] = []
    ok = _assert_close(details, "rho(10001) vs pi", rho(grid, n + 1, tilde), math.pi, 1e-3)
    ok &= _assert_close(details, "rho(10000) vs 4/pi", rho(grid, n, tilde), 4.0 / math.pi, 1e-3)
    rt = time.time() - t0
    if rt >= 1.0:
        ok = False
        details.append(f"runtime {rt:.2f}s exceeds 1s budget")
    return CheckResult(1, "wallis-parity", ok, details, rt)


def _check_2_product(H: int) -> CheckResult:
    """u_odd * u_even = 4 for d = n^-gamma, gamma in {0.6, 0.75, 1.0}."""
    t0 = time.time()
    tol = 1e-4 * max(1.0, (10**6 / H)) ** 1.2
    details: list[str] = []
    ok = True
    for gamma in (0.6, 0.75, 1.0):
        t1 = time.time()
        cb = check_condition_B(PowerLogGrid(gamma, 0.0, 1.0), horizon=H)
        dt = time.time() - t1
        ok &= _assert_close(details, f"gamma={gamma} product", cb.u.product, 4.0, tol)
        if dt >= 5.0:
            ok = False
            details.append(f"gamma={gamma} runtime {dt:.2f}s exceeds 5s budget")
    return CheckResult(2, "period-product", ok, details, time.time() - t0)


def _check_3_ratio_scaling(H: int) -> CheckResult:
    """(n^g + (n+1)^g)/(2n+1)^g approaches 2^{1-g} at rate n^-2, g = 0.75."""
    t0 = time.time()
    g = 0.75
    lo, hi = 10**3, min(10**5, H)
    ns = np.arange(lo, hi + 1, dtype=float)
    vals = np.abs((ns**g + (ns + 1.0) ** g) / (2.0 * ns + 1.0) ** g - 2.0 ** (1.0 - g)) * ns**2
    worst = float(np.max(vals))
    details: list[str] = []
    ok = worst <= 2.0
    details.append(
        f"sup |ratio - 2^(1-g)| n^2 over [{lo},{hi}]: measured={worst:.6g} bound=2 "
        f"{'ok' if ok else 'VIOLATED'}"
    )
    return CheckResult(3, "ratio-scaling", ok, details, time.time() - t0)


def _check_4_f_limits(H: int) -> CheckResult:
    """Extrapolated limits of F for gaps 1/(n ln^eta n)."""
    t0 = time.time()
    scale = (math.log(10**6) / math.log(max(H, 100))) ** 2
    details: list[str] = []
    ok = True
    for eta in (0.6, 0.8, 1.0):
        gl = verify_G_limits(PowerLogGrid(1.0, eta, 1.0), H)
        ok &= _assert_close(details, f"eta={eta} L1", gl.L1, 0.25, 0.01 * scale)
        ok &= _assert_close(details, f"eta={eta} L2", gl.L2, eta, 0.02 * scale)
    gl = verify_G_limits(PowerLogGrid(1.0, 0.4, 1.0), H)
    ok &= _assert_close(details, "eta=0.4 L3", gl.L3, 0.0, 0.02 * scale)
    gl = verify_G_limits(PowerLogGrid(1.0, 1.0, 1.0), H)
    ok &= _assert_close(details, "eta=1.0 L3", gl.L3, 0.25, 0.02 * scale)
    return CheckResult(4, "f-limits", ok, details, time.time() - t0)


def _check_5_f_over_gap(H: int) -> CheckResult:
    """sup F/d window-stable on three bounded families, growing on (1, 0.5)."""
    t0 = time.time()
    hi = min(10**5, H)
    details: list[str] = []
    ok = True
    for gamma, eta in ((0.6, 0.0), (0.75, 3.0), (1.0, -1.0)):
        p = f_over_d_probe(PowerLogGrid(gamma, eta, 1.0), 10**3, hi)
        good = p.stable is TriState.TRUE and math.isfinite(p.sup)
        ok &= good
        details.append(
            f"({gamma},{eta}): sup={p.sup:.6g} drift={p.drift:+.4f} "
            f"stable={p.stable.value} {'ok' if good else 'VIOLATED'}"
        )
    p = f_over_d_probe(PowerLogGrid(1.0, 0.5, 1.0), 10**3, hi)
    good = p.stable is TriState.FALSE
    ok &= good
    details.append(
        f"(1.0,0.5): drift={p.drift:+.4f} growth detected="
        f"{p.stable is TriState.FALSE} {'ok' if good else 'VIOLATED'}"
    )
    return CheckResult(5, "f-over-gap", ok, details, time.time() - t0)


def _check_6_remainder(H: int) -> CheckResult:
    """|F - F_expansion(n,3)| n^2 ln^2 n window-stable for gaps 1/(n ln n)."""
    t0 = time.time()
    grid = PowerLogGrid(1.0, 1.0, 1.0)
    hi = min(10**5, H)
    (w1a, w1b), (w2a, w2b) = tail_windows(hi)
    w1a = max(w1a, 10**3)

    def window_sup(a: int, b: int) -> float:
        sup = -math.inf
        for lo in range(a, b, 1 << 15):
            h = min(lo + (1 << 15), b)
            ns = np.arange(lo, h, dtype=float)
            rem = np.abs(expansion_remainder_block(grid, lo, h, 3))
            sup = max(sup, float(np.max(rem * ns**2 * np.log(ns) ** 2)))
        return sup

    s1 = window_sup(w1a, w1b)
    s2 = window_sup(w2a, w2b)
    drift = (s2 - s1) / abs(s1)
    ok = math.isfinite(s2) and drift < 0.05
    details = [
        f"window sups {s1:.6g} -> {s2:.6g} drift={drift:+.4f} tol +0.05 "
        f"{'ok' if ok else 'VIOLATED'}"
    ]
    return CheckResult(6, "expansion-remainder", ok, details, time.time() - t0)


def _check_7_zero_energy(H: int) -> CheckResult:
    """d = 1/n, alpha = -2n - 1: the zero-energy solution is square-summable."""
    t0 = time.time()
    grid = PowerLogGrid(1.0, 0.0, 1.0)
    alpha = PowerSumAlpha(terms=((-2.0, 1.0, 0.0), (-1.0, 0.0, 0.0)))
    N = min(10**6, max(H, 10**4))
    sol = solve_recurrence(JacobiOperator(grid, alpha), 0.0, N)
    probe = l2_probe(sol)
    rt = time.time() - t0
    ok = probe.classification == "in_ell2" and probe.decay_ratio < 0.9
    details = [
        f"classification={probe.classification} decay_ratio={probe.decay_ratio:.4f} "
        f"(< 0.9 over last {probe.window} blocks) {'ok' if ok else 'VIOLATED'}",
        f"blocks={len(sol.block_log_masses)} residual_max={sol.residual_max:.3g}",
    ]
    if rt >= 2.0:
        ok = False
        details.append(f"runtime {rt:.2f}s exceeds 2s budget")
    return CheckResult(7, "zero-energy-decay", ok, details, rt)


def _verdict_cfg(H: int) -> VerdictConfig:
    horizons = tuple(h for h in (10**4, 10**5, 10**6) if h < H) + (H,)
    return VerdictConfig(horizons=horizons, oracle_horizon=min(10**5, H))


def _check_8_verdicts(H: int) -> CheckResult:
    """Verdict phases on d = 1/n and the discriminant identity."""
    t0 = time.time()
    grid = PowerLogGrid(1.0, 0.0, 1.0)
    cfg = _verdict_cfg(min(H, 10**5))
    details: list[str] = []
    ok = True
    pert = PowerSumAlpha(terms=((1.0, -1.0, 0.0),))
    for a in (-1.5, -0.5):
        v = deficiency_verdict(grid, ScaledInverseGapsAlpha(grid, a, perturbation=pert), cfg)
        good = (
            v.verdict is VerdictKind.DEFICIENT
            and not v.advisory
            and (v.n_plus, v.n_minus) == (1, 1)
        )
        ok &= good
        details.append(
            f"a={a}+1/n: {v.verdict.value} cert={v.certificate} "
            f"n=({v.n_plus},{v.n_minus}) {'ok' if good else 'VIOLATED'}"
        )
    v = deficiency_verdict(grid, PowerSumAlpha(terms=((-1.0, -1.0, 0.0),)), cfg)
    good = v.verdict is VerdictKind.SELF_ADJOINT and v.certificate == "lower-envelope-bound"
    ok &= good
    details.append(f"alpha=-1/n: {v.verdict.value} cert={v.certificate} {'ok' if good else 'VIOLATED'}")
    v = deficiency_verdict(grid, ScaledInverseGapsAlpha(grid, -2.0, perturbation=pert), cfg)
    good = v.verdict is VerdictKind.SELF_ADJOINT and v.certificate == "upper-envelope-bound"
    ok &= good
    details.append(
        f"alpha=-2(2n+1)+1/n: {v.verdict.value} cert={v.certificate} {'ok' if good else 'VIOLATED'}"
    )
    # measured-u discriminant vs the closed form 2(a+1)^2 - 1
    tol = 1e-6 * max(1.0, (10**6 / H)) ** 1.2
    cb = check_condition_B(grid, horizon=H)
    for a in (-1.9, -1.5, -1.0, -0.5, -0.1):
        fl = floquet_discriminant(cb.u, a, 0.0)
        ok &= _assert_close(
            details, f"Delta_{a}(0)", fl.discriminant, 2.0 * (a + 1.0) ** 2 - 1.0, tol
        )
    return CheckResult(8, "verdict-phases", ok, details, time.time() - t0)


def _check_9_scaling_identity(H: int) -> CheckResult:
    """Gauge-aligned coupling: scaled off-diagonal is 1 to 1e-10 for n <= 10^3."""
    t0 = time.time()
    grid = PowerLogGrid(1.0, 0.0, 1.0)
    tilde = TildeSequence(grid)
    cb = check_condition_B(grid, horizon=min(H, 10**6))
    alpha0 = AlphaZeroAlpha(grid, -0.5, cb.u, tilde)
    worst_off = 0.0
    worst_diag = 0.0
    for n in range(1, 10**3 + 1):
        diag_s, off_s = scaled_operator(grid, alpha0, n, tilde)
        worst_off = max(worst_off, abs(off_s - 1.0))
        worst_diag = max(worst_diag, abs(diag_s - 0.5 * cb.u.at(n)))
    ok = worst_off <= 1e-10
    details = [
        f"max |off_s - 1| over n<=1000: {worst_off:.3g} tol 1e-10 {'ok' if ok else 'VIOLATED'}",
        f"max |diag_s - (a+1) u_n|: {worst_diag:.3g}",
    ]
    return CheckResult(9, "scaling-identity", ok, details, time.time() - t0)


def _check_10_oracle_agreement(H: int) -> CheckResult:
    """Nonreal-energy oracle agrees with every analytic certificate."""
    t0 = time.time()
    inv = PowerLogGrid(1.0, 0.0, 1.0)
    g75 = PowerLogGrid(0.75, 0.0, 1.0)
    pert = PowerSumAlpha(terms=((1.0, -1.0, 0.0),))
    cases = [
        ("a=-1.5+1/n", inv, ScaledInverseGapsAlpha(inv, -1.5, perturbation=pert), VerdictKind.DEFICIENT),
        ("a=-0.5+1/n", inv, ScaledInverseGapsAlpha(inv, -0.5, perturbation=pert), VerdictKind.DEFICIENT),
        ("alpha=-1/n", inv, PowerSumAlpha(terms=((-1.0, -1.0, 0.0),)), VerdictKind.SELF_ADJOINT),
        ("alpha=-2(2n+1)+1/n", inv, ScaledInverseGapsAlpha(inv, -2.0, perturbation=pert), VerdictKind.SELF_ADJOINT),
        ("gamma=0.75 a=-0.5", g75, ScaledInverseGapsAlpha(g75, -0.5), VerdictKind.DEFICIENT),
    ]
    cfg = _verdict_cfg(min(H, 10**5))
    N = min(10**5, max(H, 10**4))
    details: list[str] = []
    ok = True
    for label, grid, alpha, expected in cases:
        v = deficiency_verdict(grid, alpha, cfg)
        analytic_ok = v.verdict is expected and not v.advisory
        op = JacobiOperator(grid, alpha)
        classes = []
        for lam in (1j, -1j):
            probe = l2_probe(solve_recurrence(op, lam, N))
            classes.append(probe.classification)
        want = "in_ell2" if expected is VerdictKind.DEFICIENT else "not_in_ell2"
        oracle_ok = all(c == want for c in classes)
        good = analytic_ok and oracle_ok
        ok &= good
        details.append(
            f"{label}: analytic={v.verdict.value}({v.certificate}) "
            f"oracle={classes[0]}/{classes[1]} {'ok' if good else 'VIOLATED'}"
        )
    return CheckResult(10, "oracle-agreement", ok, details, time.time() - t0)


_CHECKS = {
    "wallis-parity": _check_1_wallis,
    "period-product": _check_2_product,
    "ratio-scaling": _check_3_ratio_scaling,
    "f-limits": _check_4_f_limits,
    "f-over-gap": _check_5_f_over_gap,
    "expansion-remainder": _check_6_remainder,
    "zero-energy-decay": _check_7_zero_energy,
    "verdict-phases": _check_8_verdicts,
    "scaling-identity": _check_9_scaling_identity,
    "oracle-agreement": _check_10_oracle_agreement,
}


def run_battery(only: Optional[str] = None, horizon: int = 10**6) -> BatteryReport:
    """Run the checks (all, or those whose name contains `only`)."""
    H = int(horizon)
    if H < 10**4:
        raise ValueError("battery horizon must be at least 10^4")
    results = []
    for name in CHECK_NAMES:
        if only and only not in name:
            continue
        results.append(_CHECKS[name](H))
    if not results:
        raise ValueError(f"no battery check matches {only!r}")
    return BatteryReport(results=results, horizon=H)
