import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import plapeig.model_ode as mo
from plapeig.model_ode import (
    EventNotFoundError,
    IntegrationError,
    ModelParams,
    ToleranceSpec,
    find_abar,
    geometry_scan,
    integrate_prufer,
    inverse_profile,
    neumann_identity,
    solve_model_ivp,
)
from plapeig.ptrig import cos_p, pi_p, sin_p

import oracles

FINE = ToleranceSpec(rtol=1e-12, atol=1e-14)


def hermite_oracle_rhs(kappa, lam):
    # p = 2 model equation as a first-order linear system
    return lambda t, y: np.array([y[1], kappa * t * y[1] - lam * y[0]])


class TestParams:
    def test_alpha(self):
        assert ModelParams(2.0, 0.0, 9.0).alpha == pytest.approx(3.0)
        assert ModelParams(3.0, -1.0, 16.0).alpha == pytest.approx(2.0)

    @pytest.mark.parametrize("lam", [0.0, -1.0, math.inf, math.nan])
    def test_rejects_bad_lambda(self, lam):
        with pytest.raises(ValueError):
            ModelParams(2.0, 0.0, lam)

    def test_rejects_bad_tolerances(self):
        with pytest.raises(ValueError):
            ToleranceSpec(rtol=0.0)


class TestIntegrate:
    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_kappa_zero_is_explicit(self, p):
        prm = ModelParams(p, 0.0, 3.0)
        tr = integrate_prufer(prm, 0.5, 0.2, 4.0)
        assert np.allclose(tr.theta, 0.2 + prm.alpha * (tr.t - 0.5), atol=1e-9)
        assert np.allclose(tr.log_r, math.log(prm.alpha), atol=1e-12)

    def test_matches_fixed_step_rk4(self):
        prm = ModelParams(2.0, -1.0, 2.0)
        alpha = prm.alpha

        def f(t, y):
            return np.array([alpha + t * math.cos(y[0]) * math.sin(y[0]),
                             -t * math.cos(y[0]) ** 2])

        ts, ys = oracles.rk4(f, [0.0, 0.0], 0.0, 1.0, 1e-5)
        tr = integrate_prufer(prm, 0.0, 0.0, 1.0, log_r0=0.0)
        theta, log_r = tr.state(ts[::1000])
        assert np.allclose(theta, ys[::1000, 0], atol=1e-8)
        assert np.allclose(log_r, ys[::1000, 1], atol=1e-8)

    def test_backward_direction(self):
        prm = ModelParams(2.5, -1.0, 4.0)
        tr = integrate_prufer(prm, 0.0, 0.0, -1.0)
        assert tr.t_min == pytest.approx(-1.0) and tr.t_max == 0.0

    def test_rejects_empty_span(self):
        with pytest.raises(ValueError):
            integrate_prufer(ModelParams(2.0, 0.0, 1.0), 1.0, 0.0, 1.0)

    @pytest.mark.parametrize("p", [1.4, 2.0, 3.5])
    def test_reconstruction_identity(self, p):
        prm = ModelParams(p, -1.3, 5.0)
        tr = integrate_prufer(prm, -0.3, -0.5 * pi_p(p), 2.0)
        r = np.exp(tr.log_r)
        assert np.allclose(prm.alpha * tr.w, r * sin_p(p, tr.theta), atol=1e-9)
        assert np.allclose(tr.dw, r * cos_p(p, tr.theta), atol=1e-9)
        assert np.all(np.isfinite(tr.log_r))

    @pytest.mark.parametrize("p,kappa,lam", [(1.5, -1.0, 3.0), (2.0, -2.0, 6.0), (3.0, -0.5, 2.0)])
    def test_second_order_residual(self, p, kappa, lam):
        prm = ModelParams(p, kappa, lam)
        tr = integrate_prufer(prm, -0.4, -0.5 * pi_p(p), -0.4 + 1.5 * pi_p(p) / prm.alpha, FINE)
        res, count = oracles.prufer_ode_residual(tr)
        assert count > 1000
        assert res < 1e-6

    def test_wrong_amplitude_exponent_would_fail_residual(self):
        # the printed exponent p-1 for alpha breaks the equation for p != 2
        class Wrong(ModelParams):
            @property
            def alpha(self):
                return (self.lam / (self.p.p - 1.0)) ** (self.p.p - 1.0)

        prm = Wrong(3.0, -1.0, 5.0)
        tr = integrate_prufer(prm, 0.0, 0.0, 1.0, FINE)
        # reconstruct with the correct equation's lambda
        good = SimpleNamespace(p=prm.p, kappa=prm.kappa, lam=prm.lam, alpha=prm.alpha)
        res, _ = oracles.prufer_ode_residual(SimpleNamespace(
            params=good, t_min=tr.t_min, t_max=tr.t_max, state=tr.state))
        assert res > 1e-2

    def test_integration_failure_carries_state(self, monkeypatch):
        fake = SimpleNamespace(status=-1, message="step size too small",
                               t=np.array([0.0, 0.5]), y=np.array([[0.0, 1.0], [0.0, 0.1]]))
        monkeypatch.setattr(mo, "solve_ivp", lambda *a, **k: fake)
        with pytest.raises(IntegrationError) as err:
            integrate_prufer(ModelParams(2.0, 0.0, 1.0), 0.0, 0.0, 1.0)
        t_last, y_last = err.value.state
        assert t_last == 0.5 and np.allclose(y_last, [1.0, 0.1])

    def test_trajectory_helpers(self):
        prm = ModelParams(2.0, 0.0, 1.0)
        tr = integrate_prufer(prm, 0.0, 0.0, 1.0)
        rs = tr.resample(11)
        assert rs.t.size == 11 and np.allclose(rs.w, np.sin(rs.t), atol=1e-9)
        sc = tr.scaled(2.0)
        assert np.allclose(sc.w_at(0.5), 2.0 * tr.w_at(0.5))
        rows = rs.rows()
        assert len(rows) == 11 and len(rows[0]) == 5

    def test_parameter_continuity(self):
        prm = ModelParams(2.5, -1.0, 4.0)
        base = integrate_prufer(prm, 0.0, -0.5 * pi_p(2.5), 2.0)
        bumped = integrate_prufer(prm.with_lam(4.0 + 1e-6), 1e-6, -0.5 * pi_p(2.5), 2.0)
        ts = np.linspace(0.1, 1.9, 50)
        w0, d0 = base.w_dw_at(ts)
        w1, d1 = bumped.w_dw_at(ts)
        assert np.max(np.abs(w1 - w0)) < 1e-5
        assert np.max(np.abs(d1 - d0)) < 1e-5


class TestModelIVP:
    @pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
    def test_kappa_zero_geometry(self, p):
        lam = 2.5
        prm = ModelParams(p, 0.0, lam)
        _, g = solve_model_ivp(prm, 0.3)
        assert g.b_of_a == pytest.approx(0.3 + pi_p(p) / prm.alpha, rel=1e-10)
        assert g.m_of_a == pytest.approx(1.0, abs=1e-10)
        assert g.delta_of_a == pytest.approx(pi_p(p) * ((p - 1) / lam) ** (1 / p), rel=1e-10)

    def test_start_state(self):
        prm = ModelParams(3.0, -1.0, 4.0)
        tr, _ = solve_model_ivp(prm, -0.2)
        assert tr.theta[0] == pytest.approx(-0.5 * pi_p(3.0))
        assert tr.log_r[0] == pytest.approx(math.log(prm.alpha))
        w, dw = tr.w_dw_at(-0.2)
        assert w[0] == pytest.approx(-1.0) and dw[0] == pytest.approx(0.0, abs=1e-15)

    def test_linear_oracle_geometry(self):
        prm = ModelParams(2.0, -1.0, 2.0)
        _, g = solve_model_ivp(prm, 0.0, step_control=FINE)
        ts, ys = oracles.rk4(hermite_oracle_rhs(-1.0, 2.0), [-1.0, 0.0], 0.0, 6.0, 1e-4)
        i, b = oracles.first_crossing(ts, ys[:, 1], start=1)
        frac = (b - ts[i]) / (ts[i + 1] - ts[i])
        m = ys[i, 0] + frac * (ys[i + 1, 0] - ys[i, 0])
        assert g.b_of_a == pytest.approx(b, abs=1e-6)
        assert g.delta_of_a == pytest.approx(b, abs=1e-6)
        assert g.m_of_a == pytest.approx(m, abs=1e-6)

    @pytest.mark.parametrize("p,a", [(1.5, -0.5), (2.0, 0.0), (3.0, 0.4), (2.5, -0.9)])
    def test_neumann_identity(self, p, a):
        prm = ModelParams(p, -1.0, 2.0 + p)
        tr, g = solve_model_ivp(prm, a, step_control=FINE)
        assert g.reached
        val, scale = neumann_identity(tr, g.b_of_a)
        assert abs(val) < 1e-6 * scale

    def test_unreached_convention(self):
        prm = ModelParams(1.5, -1.0, 2.0)
        tr, g = solve_model_ivp(prm, 5.0)
        assert not g.reached
        assert math.isinf(g.b_of_a) and math.isinf(g.delta_of_a)
        assert g.m_of_a <= 0
        assert g.m_of_a == pytest.approx(np.max(tr.w))


class TestAbar:
    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_kappa_zero(self, p):
        prm = ModelParams(p, 0.0, 3.0)
        assert find_abar(prm) == pytest.approx(pi_p(p) / (2 * prm.alpha))

    def test_exact_gaussian_case(self):
        # t exp(-t^2/2) solves the p = 2, kappa = -1, lam = 2 equation with turning point at 1
        assert find_abar(ModelParams(2.0, -1.0, 2.0)) == pytest.approx(1.0, abs=1e-9)

    def test_rk4_bisection_cross_check(self):
        lam = 3.0
        ts, ys = oracles.rk4(hermite_oracle_rhs(-1.0, lam), [0.0, 1.0], 0.0, -2.0, 1e-4)
        _, t_turn = oracles.first_crossing(ts, ys[:, 1], start=1)
        assert find_abar(ModelParams(2.0, -1.0, lam)) == pytest.approx(-t_turn, abs=1e-6)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(1.2, 5.0), st.floats(-4.0, -0.05), st.floats(0.2, 20.0))
    def test_shorter_than_free_arc(self, p, kappa, lam):
        prm = ModelParams(p, kappa, lam)
        assert 0 < find_abar(prm) < pi_p(p) / (2 * prm.alpha)

    def test_rejects_positive_kappa(self):
        with pytest.raises(ValueError):
            find_abar(ModelParams(2.0, 1.0, 1.0))

    def test_event_not_found(self):
        with pytest.raises(EventNotFoundError):
            find_abar(ModelParams(2.0, -1.0, 2.0), horizon=0.1)

    @pytest.mark.parametrize("p", [1.5, 3.0])
    def test_phase_speed_bound_on_backward_leg(self, p):
        prm = ModelParams(p, -1.5, 4.0)
        abar = find_abar(prm)
        tr = integrate_prufer(prm, 0.0, 0.0, -abar)
        rhs = mo._prufer_rhs(prm)
        inside = np.abs(tr.theta) <= 0.5 * pi_p(p)
        assert inside.sum() > 10
        speeds = np.array([rhs(t, [th, 0.0])[0]
                           for t, th in zip(tr.t[inside], tr.theta[inside])])
        assert np.all(speeds >= prm.alpha - 1e-12)

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_odd_symmetry(self, p):
        prm = ModelParams(p, -1.0, 3.0)
        fwd = integrate_prufer(prm, 0.0, 0.0, 1.5, log_r0=0.0)
        bwd = integrate_prufer(prm, 0.0, 0.0, -1.5, log_r0=0.0)
        ts = np.linspace(0.0, 1.5, 40)
        th_f, lr_f = fwd.state(ts)
        th_b, lr_b = bwd.state(-ts)
        assert np.allclose(th_b, -th_f, atol=1e-8)
        assert np.allclose(lr_b, lr_f, atol=1e-8)


class TestGeometry:
    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_odd_start(self, p):
        prm = ModelParams(p, -1.0, 2.0)
        abar = find_abar(prm)
        _, g = solve_model_ivp(prm, -abar)
        assert g.m_of_a == pytest.approx(1.0, abs=1e-6)
        assert g.delta_of_a == pytest.approx(2 * abar, abs=1e-6)

    def test_examples(self):
        prm = ModelParams(2.0, -1.0, 2.0)
        abar = find_abar(prm)
        g1, g2 = geometry_scan(prm, [-abar + 1.0, 20.0])
        assert g1.delta_of_a > 2 * abar
        assert g2.m_of_a < 0.1

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_m_range_and_delta_minimum(self, p):
        prm = ModelParams(p, -1.0, 2.0)
        abar = find_abar(prm)
        scan = geometry_scan(prm, -abar + np.linspace(0.05, 3.0, 8))
        for g in scan:
            if g.reached:
                assert 0 < g.m_of_a <= 1
                assert g.delta_of_a > 2 * abar


class TestInverseProfile:
    def _arc(self, p=2.5, kappa=-1.0, lam=4.0, a=-0.3):
        prm = ModelParams(p, kappa, lam)
        tr, g = solve_model_ivp(prm, a)
        return tr, g

    def test_endpoints_and_round_trip(self):
        tr, g = self._arc()
        inv = inverse_profile(tr, g.a, g.b_of_a)
        assert inv(-1.0) == pytest.approx(g.a, abs=1e-6)
        assert inv(g.m_of_a) == pytest.approx(g.b_of_a, abs=1e-4)
        ts = np.linspace(g.a + 0.05, g.b_of_a - 0.05, 25)
        assert np.allclose(inv(tr.w_at(ts)), ts, atol=1e-6)

    def test_circular_case(self):
        prm = ModelParams(2.0, 0.0, 4.0)
        tr, g = solve_model_ivp(prm, 0.0)
        inv = inverse_profile(tr, 0.0, g.b_of_a)
        x = np.linspace(-0.9, 0.9, 13)
        expected = (np.arcsin(x) + 0.5 * math.pi) / prm.alpha
        assert np.allclose(inv(x), expected, atol=1e-9)
        assert np.allclose(inv.slope(x), prm.alpha * np.sqrt(1 - x**2), atol=1e-8)

    def test_rejects_non_monotone_range(self):
        prm = ModelParams(2.0, 0.0, 1.0)
        tr = integrate_prufer(prm, 0.0, 0.0, 3.0)
        with pytest.raises(ValueError):
            mo.InverseProfile(tr, 0.0, 3.0)

    def test_rejects_out_of_range_value(self):
        tr, g = self._arc()
        inv = inverse_profile(tr, g.a, g.b_of_a)
        with pytest.raises(ValueError):
            inv(1.5)
