"""Computable self-adjointness tests: series probes, envelope bounds,
curvature function F, and the structural checks behind the periodic
comparison.

Reference values for F, G, and the period constants come from mpmath at
40 digits; verdict expectations come from exact series thresholds.
"""

import math

import mpmath
import numpy as np
import pytest

from deltasa import (
    ConstantGrid,
    CustomAlpha,
    ExplicitAlpha,
    ExplicitGrid,
    F,
    F_block,
    F_expansion,
    GFunction,
    GKind,
    G_nlog,
    PowerLogGrid,
    PowerSumAlpha,
    ScaledInverseGapsAlpha,
    SeriesVerdict,
    check_asymptotic_eq10,
    check_condition_A,
    check_condition_B,
    check_d4,
    check_d_conditions,
    f_over_d_probe,
    select_G,
    test_bound_II,
    test_bound_III,
    test_carleman_i,
    test_condition_I,
    verify_G_limits,
)
from deltasa.criteria import expansion_remainder_block
from deltasa.numerics import TriState


def mp_F(grid, n):
    """40-digit evaluation of the curvature difference at one site."""
    with mpmath.workdps(40):
        d = lambda k: mpmath.mpf(repr(grid.gap(k)))
        r = lambda k: mpmath.sqrt(d(k) + d(k + 1)) if k >= 1 else mpmath.mpf(1)
        val = (r(n) / r(n - 1) - 1) / d(n) + (r(n) / r(n + 1) - 1) / d(n + 1)
        return float(val)


class TestGnlog:
    def test_frozen_reference_point(self):
        got = G_nlog(0.3, 100)
        assert got == pytest.approx(0.003952880760747132, rel=1e-13)
        # published rounding of the same number
        assert abs(got - 0.003955) < 3e-6

    def test_small_eta_branch_formula(self):
        # eta <= 1/2: (1/4) ln^eta(n) / n
        with mpmath.workdps(40):
            want = float(mpmath.log(50) ** mpmath.mpf("0.3") / (4 * 50))
        assert G_nlog(0.3, 50) == pytest.approx(want, rel=1e-13)
        with mpmath.workdps(40):
            want = float(mpmath.log(77) ** mpmath.mpf("0.5") / (4 * 77))
        assert G_nlog(0.5, 77) == pytest.approx(want, rel=1e-13)

    def test_large_eta_branch_formula(self):
        # eta > 1/2 picks up the extra eta / (n ln^{1-eta} n) term
        with mpmath.workdps(40):
            e = mpmath.mpf("0.8")
            t = mpmath.log(200)
            want = float(t**e / (4 * 200) + e / (200 * t ** (1 - e)))
        assert G_nlog(0.8, 200) == pytest.approx(want, rel=1e-13)

    def test_domain(self):
        for eta in (0.0, -0.2, 1.2):
            with pytest.raises(ValueError):
                G_nlog(eta, 10)
        with pytest.raises(ValueError):
            G_nlog(0.5, 1)

    def test_gfunction_wrappers(self):
        z = GFunction(GKind.ZERO)
        assert z.evaluate(17) == 0.0
        assert np.all(z.evaluate_block(2, 50) == 0.0)
        g = GFunction(GKind.NLOG, eta=0.4)
        assert g.evaluate(1) == g.evaluate(2)  # clamped below the domain
        np.testing.assert_allclose(
            g.evaluate_block(2, 30), [g.evaluate(n) for n in range(2, 30)], rtol=1e-13
        )
        c = GFunction(GKind.CUSTOM, fn=lambda n: 1.0 / n)
        assert c.evaluate(4) == 0.25


class TestF:
    def test_flat_grid_values(self):
        g = ConstantGrid(1.0)
        assert F(g, 1) == pytest.approx(math.sqrt(2.0) - 1.0, rel=1e-14)
        for n in range(2, 12):
            assert F(g, n) == 0.0
        # with d = 1/2 the boundary convention r_0 = 1 matches r_1 exactly
        assert F(ConstantGrid(0.5), 1) == 0.0

    def test_matches_high_precision(self):
        # F is a difference of two near-equal curvature terms, so the
        # achievable relative accuracy shrinks with the cancellation; at
        # these sites eight digits is what float arithmetic leaves
        g = PowerLogGrid(gamma=0.6, eta=0.3)
        for n in (2, 5, 50, 400):
            assert F(g, n) == pytest.approx(mp_F(g, n), rel=1e-8, abs=1e-16)

    def test_block_matches_scalar(self):
        g = PowerLogGrid(gamma=0.75, eta=-0.2)
        np.testing.assert_allclose(
            F_block(g, 2, 40), [F(g, n) for n in range(2, 40)], rtol=1e-10
        )

    def test_power_grid_asymptote(self):
        # n^{2-gamma} F(n) -> gamma (3 gamma - 2) / 4
        gamma = 0.75
        g = PowerLogGrid(gamma=gamma)
        n = 10**4
        limit = gamma * (3 * gamma - 2) / 4
        assert F(g, n) * n ** (2 - gamma) == pytest.approx(limit, abs=1e-4)

    def test_expansion_and_remainder(self):
        g = PowerLogGrid(gamma=0.75)
        # the fused remainder equals F minus its k-term truncation, signs
        # included
        for n in (3, 7, 20):
            for k in (2, 3, 5):
                direct = F(g, n) - F_expansion(g, n, k)
                fused = expansion_remainder_block(g, n, n + 1, k)[0]
                assert fused == pytest.approx(direct, rel=1e-6, abs=1e-15)

    def test_expansion_first_order_structure(self):
        # k = 2 keeps only the C_1 = 1/2 terms
        g = PowerLogGrid(gamma=0.6)
        n = 9
        d = [g.gap(k) for k in range(1, 14)]
        u = (d[n] - d[n - 2]) / (d[n - 1] + d[n - 2])
        v = (d[n - 1] - d[n + 1]) / (d[n] + d[n + 1])
        want = 0.5 * u / d[n - 1] + 0.5 * v / d[n]
        assert F_expansion(g, n, 2) == pytest.approx(want, rel=1e-12)


class TestFOverDProbe:
    def test_decaying_family_is_stable(self):
        p = f_over_d_probe(PowerLogGrid(gamma=0.6), 2, 10**4)
        assert p.stable is TriState.TRUE
        assert p.drift == pytest.approx(-0.4256, abs=5e-3)

    def test_log_corrected_family_drifts(self):
        p = f_over_d_probe(PowerLogGrid(gamma=1.0, eta=0.5), 2, 10**4)
        assert p.stable is TriState.FALSE
        assert p.drift > 0.05


class TestSelectG:
    def test_branches(self):
        assert select_G(ConstantGrid(1.0)).kind is GKind.ZERO
        assert select_G(ConstantGrid(1.0)).provenance == "flat-gaps"
        nlog = select_G(PowerLogGrid(gamma=1.0, eta=0.5))
        assert nlog.kind is GKind.NLOG and nlog.eta == 0.5
        assert select_G(PowerLogGrid(gamma=0.75)).kind is GKind.ZERO
        assert select_G(PowerLogGrid(gamma=1.0, eta=-0.5)).kind is GKind.ZERO
        assert select_G(PowerLogGrid(gamma=1.0)).kind is GKind.ZERO

    def test_probe_fallbacks(self):
        cyc = ExplicitGrid(values=(0.5, 0.25), tail="cycle")
        got = select_G(cyc, horizon=10**4)
        assert got.kind is GKind.ZERO and got.provenance == "tail-probe"
        heavy = select_G(PowerLogGrid(gamma=1.0, eta=1.5), horizon=10**4)
        assert heavy.kind is GKind.CUSTOM
        assert heavy.provenance == "measured-curvature"
        # the custom fallback is the measured F itself
        assert heavy.evaluate(50) == pytest.approx(
            F(PowerLogGrid(gamma=1.0, eta=1.5), 50), rel=1e-12
        )


class TestSeriesProbes:
    def test_carleman_diverges_for_strong_coupling(self):
        g = PowerLogGrid(gamma=1.0)
        p = test_carleman_i(g, PowerSumAlpha(terms=((1.0, 2.0, 0.0),)), horizons=(10**4,))
        assert p.verdict is SeriesVerdict.DIVERGES
        assert p.witnesses["analytic"] == {"P": -1.0, "Q": 0.0}

    def test_carleman_converges_for_bounded_coupling(self):
        g = PowerLogGrid(gamma=1.0)
        p = test_carleman_i(g, PowerSumAlpha(terms=((1.0, 0.0, 0.0),)), horizons=(10**4,))
        assert p.verdict is SeriesVerdict.CONVERGES

    def test_carleman_borderline_power(self):
        # p - 3 gamma = 1 - 1.8 > -1: diverges
        g = PowerLogGrid(gamma=0.6)
        p = test_carleman_i(g, PowerSumAlpha(terms=((1.0, 1.0, 0.0),)), horizons=(10**4,))
        assert p.verdict is SeriesVerdict.DIVERGES

    def test_carleman_zero_coupling(self):
        g = PowerLogGrid(gamma=1.0)
        p = test_carleman_i(g, PowerSumAlpha(terms=((0.0, 0.0, 0.0),)), horizons=(10**4,))
        assert p.verdict is SeriesVerdict.CONVERGES
        assert p.witnesses["analytic"] == "zero coupling"

    def test_carleman_numeric_only_stays_unknown(self):
        g = PowerLogGrid(gamma=1.0)
        alpha = CustomAlpha(fn=lambda n: float(n), name="opaque")
        p = test_carleman_i(g, alpha, horizons=(10**3, 10**4))
        assert p.verdict is SeriesVerdict.UNKNOWN
        sums = [s for _, s in p.checkpoints]
        assert sums == sorted(sums)

    def test_condition_I_divergence(self):
        g = PowerLogGrid(gamma=0.75)
        p = test_condition_I(g, PowerSumAlpha(terms=((1.0, 2.0, 0.0),)), horizons=(10**4,))
        assert p.verdict is SeriesVerdict.DIVERGES
        assert p.gate_failed is False

    def test_condition_I_gate_requires_regime(self):
        # summable gaps: outside the regime this test is allowed to use
        p = test_condition_I(
            PowerLogGrid(gamma=1.2), PowerSumAlpha(terms=((1.0, 2.0, 0.0),)),
            horizons=(10**4,),
        )
        assert p.gate_failed is True
        # gaps not square-summable: same
        p = test_condition_I(
            PowerLogGrid(gamma=0.3), PowerSumAlpha(terms=((1.0, 2.0, 0.0),)),
            horizons=(10**4,),
        )
        assert p.gate_failed is True


class TestEnvelopeBounds:
    def test_upper_bound_minimal_constant_exact(self):
        # alpha = -(2/d_n + 2/d_{n+1}) + 0.5 d_n sits exactly on C_1 = 0.5
        g = PowerLogGrid(gamma=0.75)
        alpha = CustomAlpha(
            fn=lambda n: -(2.0 / g.gap(n) + 2.0 / g.gap(n + 1)) + 0.5 * g.gap(n),
            name="critical-upper",
        )
        G = GFunction(GKind.ZERO)
        p = test_bound_II(g, alpha, G, N=10**4)
        assert p.holds is TriState.TRUE
        # the 2/d terms cancel in float, leaving ~1e-9 of rounding noise
        assert p.minimal_constant == pytest.approx(0.5, abs=1e-7)

    def test_upper_bound_violation_detected(self):
        g = PowerLogGrid(gamma=0.75)
        alpha = CustomAlpha(
            fn=lambda n: -(2.0 / g.gap(n) + 2.0 / g.gap(n + 1)) + math.sqrt(n),
            name="violating-upper",
        )
        p = test_bound_II(g, alpha, GFunction(GKind.ZERO), N=10**4)
        assert p.holds is TriState.FALSE
        assert p.drift > 0.05

    def test_lower_bound_minimal_constant_exact(self):
        g = PowerLogGrid(gamma=1.0)
        alpha = CustomAlpha(fn=lambda n: -0.25 * g.gap(n), name="critical-lower")
        p = test_bound_III(g, alpha, GFunction(GKind.ZERO), N=10**4)
        assert p.holds is TriState.TRUE
        assert p.minimal_constant == pytest.approx(0.25, abs=1e-12)

    def test_lower_bound_violation(self):
        g = PowerLogGrid(gamma=1.0)
        alpha = CustomAlpha(fn=lambda n: -math.sqrt(n), name="violating-lower")
        p = test_bound_III(g, alpha, GFunction(GKind.ZERO), N=10**4)
        assert p.holds is TriState.FALSE

    def test_bound_probe_reports_argmax(self):
        g = PowerLogGrid(gamma=0.75)
        alpha = CustomAlpha(
            fn=lambda n: -(2.0 / g.gap(n) + 2.0 / g.gap(n + 1)) + 0.5 * g.gap(n),
            name="critical-upper",
        )
        p = test_bound_II(g, alpha, GFunction(GKind.ZERO), N=10**4)
        assert "argmax" in p.witnesses
        assert p.witnesses["minimal_constant_nonneg"] >= 0.0


class TestAsymptoticProfile:
    @pytest.mark.parametrize(
        "gamma,eta,want",
        [
            (1.0, 0.0, TriState.TRUE),
            (0.75, 0.0, TriState.FALSE),
            (0.6, 0.0, TriState.FALSE),
            (1.0, 0.5, TriState.FALSE),
            (0.4, 0.0, TriState.TRUE),
        ],
    )
    def test_eq10_profile_families(self, gamma, eta, want):
        r = check_asymptotic_eq10(PowerLogGrid(gamma=gamma, eta=eta), N=10**5)
        assert r.holds is want

    def test_eq10_flat_grid(self):
        r = check_asymptotic_eq10(ConstantGrid(1.0), N=10**5)
        assert r.holds is TriState.TRUE

    def test_eq10_constant_estimate(self):
        # for d = 1/n the ratio increment is -1/n + O(1/n^2), so the
        # normalized level is -1
        r = check_asymptotic_eq10(PowerLogGrid(gamma=1.0), N=10**5)
        assert r.C_estimate == pytest.approx(-1.0, abs=0.01)
        assert len(r.increments) > 4


class TestGapRegularity:
    def test_smooth_family_passes_all(self):
        r = check_d_conditions(PowerLogGrid(gamma=0.75), N=10**5)
        assert (r.d0, r.d1, r.d2, r.d3) == (
            TriState.TRUE, TriState.TRUE, TriState.TRUE, TriState.TRUE,
        )
        assert r.all_hold is True

    def test_flat_grid_degenerates(self):
        # zero derivative kills the monotone-envelope conditions
        r = check_d_conditions(ConstantGrid(1.0), N=10**4)
        assert r.d0 is TriState.TRUE
        assert r.d1 is TriState.FALSE and r.d2 is TriState.FALSE
        assert r.all_hold is False

    def test_no_derivatives_means_unknown(self):
        r = check_d_conditions(ExplicitGrid(values=(0.5, 0.25), tail="cycle"), N=10**4)
        assert r.d1 is TriState.UNKNOWN
        assert r.d2 is TriState.UNKNOWN
        assert r.d3 is TriState.UNKNOWN

    @pytest.mark.parametrize(
        "gamma,eta,k_min",
        [(1.0, 0.0, 2), (0.75, 0.0, 2), (1.0, 0.5, 3)],
    )
    def test_d4_minimal_power(self, gamma, eta, k_min):
        r = check_d4(PowerLogGrid(gamma=gamma, eta=eta), N=10**5)
        assert r.k_min == k_min
        assert r.holds is TriState.TRUE

    def test_d4_not_applicable_for_flat(self):
        r = check_d4(ConstantGrid(1.0), N=10**4)
        assert r.k_min is None
        assert r.holds is TriState.UNKNOWN


class TestConditionA:
    @pytest.mark.parametrize(
        "gamma,eta,want",
        [
            (1.0, 0.0, SeriesVerdict.CONVERGES),
            (0.4, 0.0, SeriesVerdict.DIVERGES),
            (0.5, 0.6, SeriesVerdict.CONVERGES),
            (0.5, 0.5, SeriesVerdict.DIVERGES),
        ],
    )
    def test_power_log_thresholds(self, gamma, eta, want):
        p = check_condition_A(PowerLogGrid(gamma=gamma, eta=eta), horizons=(10**4,))
        assert p.verdict is want

    def test_parity_floor_grids_diverge(self):
        p = check_condition_A(ConstantGrid(1.0), horizons=(10**4,))
        assert p.verdict is SeriesVerdict.DIVERGES
        p = check_condition_A(
            ExplicitGrid(values=(0.5, 0.25), tail="cycle"), horizons=(10**4,)
        )
        assert p.verdict is SeriesVerdict.DIVERGES
        # the saturation guard keeps checkpoints finite even when the
        # scaling sequence explodes along one parity
        assert all(math.isfinite(s) for _, s in p.checkpoints)


class TestConditionB:
    def test_harmonic_family_period_constants(self):
        b = check_condition_B(PowerLogGrid(gamma=1.0), horizon=10**5)
        assert b.holds is TriState.TRUE
        assert b.u.odd == pytest.approx(math.pi, abs=1e-8)
        assert b.u.even == pytest.approx(4.0 / math.pi, abs=1e-8)
        assert b.u.product == pytest.approx(4.0, abs=1e-9)

    def test_power_family_period_constants(self):
        gamma = 0.75
        b = check_condition_B(PowerLogGrid(gamma=gamma), horizon=10**5)
        assert b.holds is TriState.TRUE
        with mpmath.workdps(40):
            scale = 2 ** (1 - mpmath.mpf(repr(gamma)))
            want_odd = float(scale * mpmath.pi ** mpmath.mpf(repr(gamma)))
            want_even = float(scale * (4 / mpmath.pi) ** mpmath.mpf(repr(gamma)))
        assert b.u.odd == pytest.approx(want_odd, abs=1e-6)
        assert b.u.even == pytest.approx(want_even, abs=1e-6)

    def test_log_corrected_family_fails(self):
        b = check_condition_B(PowerLogGrid(gamma=1.0, eta=0.5), horizon=10**6)
        assert b.holds is TriState.FALSE
        assert b.window_sups[-1] > b.witnesses["ceiling"]

    def test_weak_log_correction_below_noise_floor(self):
        # eta = 0.25 deviates too slowly (like ln^{2 eta} n) to clear the
        # residual ceiling within float range; the probe reports true and
        # the deviation it misses is summable, so downstream verdicts are
        # unaffected
        b = check_condition_B(PowerLogGrid(gamma=1.0, eta=0.25), horizon=10**6)
        assert b.holds is TriState.TRUE

    def test_small_horizon_rejected(self):
        with pytest.raises(ValueError):
            check_condition_B(PowerLogGrid(gamma=1.0), horizon=100)


class TestGLimits:
    def test_nlog_eta_one(self):
        gl = verify_G_limits(PowerLogGrid(gamma=1.0, eta=1.0), horizon=10**5)
        assert gl.L1 == pytest.approx(0.25, abs=0.01)
        assert gl.L2 == pytest.approx(1.0, abs=0.02)
        assert gl.L3 == pytest.approx(0.25, abs=0.01)

    def test_nlog_fractional_eta(self):
        gl = verify_G_limits(PowerLogGrid(gamma=1.0, eta=0.6), horizon=10**5)
        assert gl.L1 == pytest.approx(0.25, abs=0.01)
        assert gl.L2 == pytest.approx(0.6, abs=0.02)
        # the third statistic is specific to eta = 1 and collapses otherwise
        assert abs(gl.L3) < 0.02

    def test_domain(self):
        with pytest.raises(ValueError):
            verify_G_limits(PowerLogGrid(gamma=0.75), horizon=10**4)
        with pytest.raises(ValueError):
            verify_G_limits(PowerLogGrid(gamma=1.0, eta=0.0), horizon=10**4)
