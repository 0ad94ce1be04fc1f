import math
import warnings

import numpy as np
import pytest

import oracles as oc
from tiltsim import (
    DEFAULT_PARAMS,
    DELTA_L_CAP,
    ErrorState,
    ModelParams,
    acceleration_angle,
    angle_in_cone,
    critical_lyapunov,
    delta_l,
    delta_l_grid,
    feasible_cone,
    half_period_map,
    hitting_time_neg,
    hitting_time_pos,
    hitting_time_simulated,
    in_admissible_region,
    lyapunov,
    s11_flow,
    saturated_flow,
    verify_quadrant_capture,
)
from tiltsim.analysis import _map_default, _map_generic

SQRT3 = math.sqrt(3.0)
INV3 = 1.0 / SQRT3


class TestLyapunov:
    def test_zero(self):
        assert lyapunov(ErrorState(0.0, 0.0)) == 0.0

    def test_position_term(self):
        assert lyapunov(ErrorState(0.1, 0.0)) == pytest.approx(0.09)

    def test_kinetic_term(self):
        assert lyapunov(ErrorState(0.0, 1.0)) == pytest.approx(0.5)


class TestS11Flow:
    def test_initial_condition(self):
        s = ErrorState(0.3, -0.7)
        out = s11_flow(s, 0.0)
        assert out.e == pytest.approx(s.e, abs=1e-15)
        assert out.edot == pytest.approx(s.edot, abs=1e-15)

    def test_decay(self):
        # slow mode decays at rate 3, so e(t) ~ 2 exp(-3 t) from (1, 0)
        out = s11_flow(ErrorState(1.0, 0.0), 8.0)
        assert abs(out.e) < 1e-9
        assert abs(out.edot) < 1e-9

    def test_against_rk4_oracle(self):
        # frozen from the fixed-step RK4 oracle at 1e-6 step
        out = s11_flow(ErrorState(0.1, 0.0), 0.1)
        assert out.e == pytest.approx(0.09328248052693948, abs=1e-8)
        assert out.edot == pytest.approx(-0.11520395075261305, abs=1e-8)

    def test_many_states_against_oracle(self):
        rng = np.random.default_rng(3)
        e0 = rng.uniform(-2, 2, 1000)
        ed0 = rng.uniform(-2, 2, 1000)
        eo, edo = oc.rk4_linear_flow(e0, ed0, 9.0, 18.0, 0.37, 4000)
        for i in range(0, 1000, 7):
            out = s11_flow(ErrorState(e0[i], ed0[i]), 0.37)
            assert out.e == pytest.approx(eo[i], abs=1e-6)
            assert out.edot == pytest.approx(edo[i], abs=1e-6)

    def test_nondefault_gains_match_oracle(self):
        for ky1, ky2 in [(4.0, 3.0), (6.0, 9.0), (2.0, 30.0)]:
            p = ModelParams(ky1=ky1, ky2=ky2)
            eo, edo = oc.rk4_linear_flow(0.8, -0.4, ky1, ky2, 0.9, 20000)
            out = s11_flow(ErrorState(0.8, -0.4), 0.9, p)
            assert out.e == pytest.approx(float(eo), abs=1e-10)
            assert out.edot == pytest.approx(float(edo), abs=1e-10)


class TestSaturatedFlow:
    def test_first_half_period_from_rest(self):
        out = saturated_flow(ErrorState(0.0, 0.0), 1.0, +1)
        assert out.e == pytest.approx(1 / (2 * SQRT3), abs=1e-15)
        assert out.edot == pytest.approx(INV3, abs=1e-15)

    def test_identity_at_zero(self):
        s = ErrorState(0.2, -0.1)
        out = saturated_flow(s, 0.0, -1)
        assert (out.e, out.edot) == (s.e, s.edot)

    def test_against_rk4_oracle(self):
        # frozen from the constant-acceleration RK4 oracle
        out = saturated_flow(ErrorState(0.2, -0.1), 0.5, -1)
        assert out.e == pytest.approx(0.07783121635129628, abs=1e-10)
        assert out.edot == pytest.approx(-0.388675134594809, abs=1e-10)

    def test_bad_sign(self):
        with pytest.raises(ValueError):
            saturated_flow(ErrorState(0.0, 0.0), 1.0, 0)


class TestHittingTimes:
    def test_on_threshold_is_zero(self):
        e = INV3 / 18.0  # ky2*e = 1/sqrt(3) with edot = 0
        assert hitting_time_pos(ErrorState(e, 0.0)) == pytest.approx(0.0, abs=1e-12)
        assert hitting_time_neg(ErrorState(-e, 0.0)) == pytest.approx(0.0, abs=1e-12)

    def test_known_value(self):
        # frozen from the event-detection oracle (RK4 sweep plus bisection)
        t = hitting_time_pos(ErrorState(0.1, 0.0))
        assert t == pytest.approx(0.10853217910009144, abs=1e-9)

    def test_inside_unit_interval(self):
        assert 0.0 < hitting_time_pos(ErrorState(1.0, 1.0)) < 1.0
        assert 0.0 < hitting_time_neg(ErrorState(-1.0, -1.0)) < 1.0

    def test_point_symmetry(self):
        rng = np.random.default_rng(23)
        e0, ed0 = oc.sample_capture_region(rng, 100, +1, 9.0, 18.0)
        for e, ed in zip(e0, ed0):
            tp = hitting_time_pos(ErrorState(e, ed))
            tn = hitting_time_neg(ErrorState(-e, -ed))
            assert tn == pytest.approx(tp, abs=1e-13)

    def test_domain_errors(self):
        with pytest.raises(ValueError, match="first-quadrant"):
            hitting_time_pos(ErrorState(-0.1, 0.0))
        with pytest.raises(ValueError, match="third-quadrant"):
            hitting_time_neg(ErrorState(0.1, 0.0))
        with pytest.raises(ValueError):
            hitting_time_pos(ErrorState(0.001, 0.001))  # below the threshold

    def test_against_event_oracle(self):
        rng = np.random.default_rng(29)
        for sign in (+1, -1):
            e0, ed0 = oc.sample_capture_region(rng, 100, sign, 9.0, 18.0)
            t_oracle = oc.event_hitting_times(e0, ed0, sign, 9.0, 18.0)
            for i in range(len(e0)):
                s = ErrorState(e0[i], ed0[i])
                t = hitting_time_pos(s) if sign > 0 else hitting_time_neg(s)
                assert t == pytest.approx(t_oracle[i], abs=1e-6)
                assert 0.0 <= t < 1.0

    def test_simulated_channel_agrees(self):
        s = ErrorState(0.4, 0.9)
        t_closed = hitting_time_pos(s)
        t_event = hitting_time_simulated(s, +1)
        assert abs(t_closed - t_event) < 1e-8

    def test_nondefault_gains_against_oracle(self):
        p = ModelParams(ky1=6.0, ky2=10.0)
        s = ErrorState(0.5, 0.2)
        assert in_admissible_region(s, +1, p)
        t = hitting_time_pos(s, p)
        t_oracle = float(oc.event_hitting_times([0.5], [0.2], +1, 6.0, 10.0)[0])
        assert t == pytest.approx(t_oracle, abs=1e-6)


class TestHalfPeriodMap:
    def test_origin_rejected(self):
        with pytest.raises(ValueError):
            half_period_map(ErrorState(0.0, 0.0), +1)

    def test_first_boundary_state_lands_in_mirror_region(self):
        s1 = ErrorState(1 / (2 * SQRT3), INV3)
        out = half_period_map(s1, +1)
        assert in_admissible_region(out, -1)

    def test_against_switched_loop_oracle(self):
        # frozen from the RK4 oracle through the full clamped controller
        out = half_period_map(ErrorState(0.5, 0.5), +1)
        assert out.e == pytest.approx(-0.33131365931481366, abs=1e-6)
        assert out.edot == pytest.approx(-1.1947081709008267, abs=1e-6)

    def test_many_states_against_switched_oracle(self):
        rng = np.random.default_rng(31)
        for sign, lam in ((+1, math.pi / 3), (-1, -math.pi / 3)):
            e0, ed0 = oc.sample_capture_region(rng, 250, sign, 9.0, 18.0)
            eo, edo = oc.rk4_switched_flow(e0, ed0, lam, DEFAULT_PARAMS, 1.0, 10000)
            for i in range(len(e0)):
                out = half_period_map(ErrorState(e0[i], ed0[i]), sign)
                assert out.e == pytest.approx(eo[i], abs=1e-6)
                assert out.edot == pytest.approx(edo[i], abs=1e-6)

    def test_odd_symmetry(self):
        rng = np.random.default_rng(37)
        e0, ed0 = oc.sample_capture_region(rng, 200, +1, 9.0, 18.0)
        for e, ed in zip(e0, ed0):
            fwd = half_period_map(ErrorState(e, ed), +1)
            mir = half_period_map(ErrorState(-e, -ed), -1)
            assert mir.e == pytest.approx(-fwd.e, abs=1e-13)
            assert mir.edot == pytest.approx(-fwd.edot, abs=1e-13)

    def test_generic_engine_matches_default_path(self):
        rng = np.random.default_rng(41)
        e0, ed0 = oc.sample_capture_region(rng, 200, +1, 9.0, 18.0)
        for e, ed in zip(e0, ed0):
            gd = _map_generic(float(e), float(ed), +1, DEFAULT_PARAMS, 1.0)
            dd = _map_default(float(e), float(ed), +1, DEFAULT_PARAMS, 1.0)
            assert gd[0] == pytest.approx(float(dd[0]), abs=1e-12)
            assert gd[1] == pytest.approx(float(dd[1]), abs=1e-12)

    def test_nondefault_gains_against_switched_oracle(self):
        p = ModelParams(ky1=6.0, ky2=10.0)
        rng = np.random.default_rng(43)
        e0, ed0 = oc.sample_capture_region(rng, 40, +1, 6.0, 10.0)
        eo, edo = oc.rk4_switched_flow(e0, ed0, math.pi / 3, p, 1.0, 20000)
        for i in range(len(e0)):
            out = half_period_map(ErrorState(e0[i], ed0[i]), +1, p)
            assert out.e == pytest.approx(eo[i], abs=1e-6)
            assert out.edot == pytest.approx(edo[i], abs=1e-6)


class TestLyapunovAlongHalfPeriod:
    def test_unsaturated_energy_never_increases(self):
        # finite differences of the energy along the decay flow
        rng = np.random.default_rng(47)
        for _ in range(50):
            s = ErrorState(rng.uniform(-2, 2), rng.uniform(-2, 2))
            taus = np.linspace(0.0, 1.0, 300)
            vals = [lyapunov(s11_flow(s, float(t))) for t in taus]
            diffs = np.diff(vals)
            assert (diffs <= 1e-12).all()

    def test_unsaturated_energy_rate_identity(self):
        # central differences of the energy match -ky1 * edot^2
        h = 1e-6
        for s0 in (ErrorState(0.5, -0.3), ErrorState(-1.2, 0.8), ErrorState(0.05, 0.0)):
            for tau in (0.1, 0.4, 0.9):
                plus = lyapunov(s11_flow(s0, tau + h))
                minus = lyapunov(s11_flow(s0, tau - h))
                rate_fd = (plus - minus) / (2 * h)
                mid = s11_flow(s0, tau)
                assert rate_fd == pytest.approx(-9.0 * mid.edot**2, abs=1e-6)

    def test_peak_at_endpoints(self):
        rng = np.random.default_rng(53)
        for sign in (+1, -1):
            e0, ed0 = oc.sample_capture_region(rng, 60, sign, 9.0, 18.0)
            for e, ed in zip(e0, ed0):
                s = ErrorState(float(e), float(ed))
                t_hit = hitting_time_pos(s) if sign > 0 else hitting_time_neg(s)
                mid = s11_flow(s, t_hit)
                vals = []
                for tau in np.linspace(0.0, 1.0, 201):
                    if tau <= t_hit:
                        vals.append(lyapunov(s11_flow(s, float(tau))))
                    else:
                        vals.append(lyapunov(saturated_flow(mid, float(tau - t_hit), -sign)))
                assert max(vals) <= max(vals[0], vals[-1]) + 1e-9


class TestDeltaL:
    def test_bounded_by_cap(self):
        rng = np.random.default_rng(59)
        for sign in (+1, -1):
            e0, ed0 = oc.sample_capture_region(rng, 200, sign, 9.0, 18.0)
            for e, ed in zip(e0, ed0):
                assert delta_l(ErrorState(float(e), float(ed)), sign) <= DELTA_L_CAP + 1e-12

    def test_cap_attained_on_threshold_corner(self):
        # the maximizer sits on the threshold line at edot = 0
        s = ErrorState(INV3 / 18.0, 0.0)
        assert delta_l(s, +1) == pytest.approx(DELTA_L_CAP, abs=1e-12)

    def test_threshold_sweep_peaks_at_cap(self):
        # sweep along the first-quadrant threshold segment; the tiny nudge
        # keeps rounded points on the admissible side of the line
        best = -math.inf
        for w in np.linspace(0.0, INV3 / 9.0, 400):
            e = (INV3 - 9.0 * w) / 18.0 + 1e-12
            if e < 0.0 or w < 0.0:
                continue
            best = max(best, delta_l(ErrorState(float(e), float(w)), +1))
        assert best == pytest.approx(DELTA_L_CAP, abs=1e-3)

    def test_first_boundary_state_value(self):
        # frozen from the switched-loop RK4 oracle
        s1 = ErrorState(1 / (2 * SQRT3), INV3)
        assert delta_l(s1, +1) == pytest.approx(-0.006132518117316743, abs=1e-7)

    def test_threshold_line_identity(self):
        # on the threshold, dividing by ky1 gives edot + 2 e = 1/(9 sqrt(3))
        for w in (0.0, 0.01, 0.05):
            e = (INV3 - 9.0 * w) / 18.0
            assert w + 2 * e == pytest.approx(INV3 / 9.0, abs=1e-15)


class TestDeltaLGrid:
    def test_wrong_quadrant_fully_masked(self):
        grid = delta_l_grid((-2.0, -0.1), (0.1, 2.0), 40, +1)
        assert grid.n_admissible == 0
        assert grid.max_delta_l() is None
        assert grid.argmax_state() is None

    def test_first_quadrant_positive_region(self):
        grid = delta_l_grid((0.0, 2.0), (0.0, 2.0), 200, +1)
        assert grid.n_positive > 0
        # the nonnegative-change set stays away from the far grid edges
        sign = grid.sign_map()
        assert not (sign[-1, :] > 0).any()
        assert not (sign[:, -1] > 0).any()
        assert grid.max_delta_l() <= DELTA_L_CAP + 1e-3

    def test_quadrant_mirror_symmetry(self):
        g1 = delta_l_grid((0.0, 2.0), (0.0, 2.0), 120, +1)
        g3 = delta_l_grid((-2.0, 0.0), (-2.0, 0.0), 120, -1)
        np.testing.assert_allclose(
            g1.values[g1.mask], g3.values[g3.mask][::-1], atol=1e-12
        )

    def test_rows_roundtrip(self):
        grid = delta_l_grid((0.0, 1.0), (0.0, 1.0), 10, +1)
        rows = list(grid.rows())
        assert len(rows) == 100
        admissible = [r for r in rows if r[2] == 1]
        assert len(admissible) == grid.n_admissible

    def test_bad_args(self):
        with pytest.raises(ValueError):
            delta_l_grid((0, 1), (0, 1), 0, +1)
        with pytest.raises(ValueError):
            delta_l_grid((0, 1), (0, 1), 10, 0)


class TestQuadrantCapture:
    def test_first_quadrant(self):
        rep = verify_quadrant_capture((-2.0, 2.0), (-2.0, 2.0), 150, +1)
        assert rep.n_admissible > 0
        assert rep.passed

    def test_third_quadrant(self):
        rep = verify_quadrant_capture((-2.0, 2.0), (-2.0, 2.0), 150, -1)
        assert rep.n_admissible > 0
        assert rep.passed

    def test_empty_grid_trivially_passes(self):
        rep = verify_quadrant_capture((-1.0, -0.5), (-0.1, 0.0), 20, +1)
        assert rep.n_admissible == 0
        assert rep.passed


class TestCriticalLyapunov:
    def test_positive_and_refined(self):
        crit = critical_lyapunov(resolution=150)
        assert crit.l_critical > 0.0
        assert crit.l_critical >= crit.grid_max - 1e-12
        assert crit.sup_bound == pytest.approx(crit.l_critical + DELTA_L_CAP)

    def test_stable_under_refinement(self):
        c1 = critical_lyapunov(resolution=100)
        c2 = critical_lyapunov(resolution=200)
        assert abs(c1.l_critical - c2.l_critical) / c2.l_critical < 0.01

    def test_degenerate_when_no_positive_cells(self):
        # far corner of the admissible region: every cell loses energy
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            crit = critical_lyapunov((1.5, 2.0), (1.5, 2.0), 40)
        assert crit.l_critical == 0.0
        assert crit.n_positive_cells == 0


class TestAngles:
    def test_examples(self):
        assert acceleration_angle(1.0, 0.0) == 0.0
        assert acceleration_angle(0.0, -1.0) == pytest.approx(3 * math.pi / 2)
        assert acceleration_angle(-1.0, -1.0) == pytest.approx(5 * math.pi / 4)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            acceleration_angle(0.0, 0.0)

    def test_cone_examples(self):
        lo, hi = feasible_cone(0.0)
        assert lo == pytest.approx(2 * math.pi - math.pi / 6)
        assert hi == pytest.approx(math.pi / 6)
        lo, hi = feasible_cone(math.pi / 3)
        assert lo == pytest.approx(math.pi / 6)
        assert hi == pytest.approx(math.pi / 2)

    def test_wraparound_membership(self):
        lo, hi = feasible_cone(0.0)
        assert angle_in_cone(0.0, lo, hi)
        assert angle_in_cone(2 * math.pi - 0.1, lo, hi)
        assert not angle_in_cone(math.pi, lo, hi)

    def test_small_gait_never_leaves_cone(self):
        # on-reference desired acceleration points along +x; at a small yaw
        # the cone always contains it
        for lam in (math.pi / 8, -math.pi / 8):
            lo, hi = feasible_cone(lam)
            assert angle_in_cone(0.0, lo, hi)
