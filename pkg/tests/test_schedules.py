import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from qalab.errors import ScheduleJunctionError
from qalab.ising import DriverKind
from qalab.schedules import (AdiabaticityTarget, Constant, Exponential, ExtendedPowerLaw, Linear, PowerLaw,
                             adiabaticity_envelope, calibrate_alpha, dgamma_dt, gamma_at, schedule_from_config)


def test_power_law_values():
    s = PowerLaw(1.0, 2, 10.0)
    assert gamma_at(s, 8.0) == pytest.approx(0.5, rel=1e-15)
    assert dgamma_dt(s, 8.0) == pytest.approx(-(1 / 3) * 8 ** (-4 / 3), rel=1e-14)
    assert gamma_at(s, 1e-12) == 10.0
    assert gamma_at(s, 0.0) == 10.0


def test_extended_values():
    s = ExtendedPowerLaw(1.0, 3, 10.0)
    assert s.decay_order == 2
    assert gamma_at(s, 4.0) == pytest.approx(0.5, rel=1e-15)


def test_cap_junction():
    s = PowerLaw(0.02, 3, 1.5)
    tc = s.t_cap
    assert tc == pytest.approx(1.5**-5 / 0.02)
    assert abs(s.gamma(tc * (1 + 1e-14)) - 1.5) <= 1e-12
    assert dgamma_dt(s, 0.5 * tc) == 0.0
    with pytest.raises(ScheduleJunctionError) as err:
        dgamma_dt(s, tc)
    assert err.value.left == 0.0 and err.value.right < 0


def test_linear_end_junction():
    s = Linear(2.0, 4.0)
    assert s.gamma(5.0) == 0.0 and s.dgamma(5.0) == 0.0
    with pytest.raises(ScheduleJunctionError):
        s.dgamma(4.0)


def test_constant_zero_rate():
    assert dgamma_dt(Constant(0.7), 123.0) == 0.0


def test_negative_time():
    with pytest.raises(ValueError):
        gamma_at(Constant(1.0), -1.0)


@pytest.mark.parametrize("bad", [lambda: PowerLaw(0.0, 2, 1.0), lambda: PowerLaw(1.0, 2, -1.0),
                                 lambda: ExtendedPowerLaw(1.0, 1, 1.0), lambda: Linear(0.0, 1.0),
                                 lambda: Exponential(1.0, 0.0), lambda: Constant(-1.0),
                                 lambda: AdiabaticityTarget(0.0), lambda: AdiabaticityTarget(1.0)])
def test_invalid_parameters(bad):
    with pytest.raises(ValueError):
        bad()


SCHEDULES = [PowerLaw(1e-2, 3, 2.0), ExtendedPowerLaw(1e-2, 4, 2.0), Linear(2.0, 50.0),
             Exponential(2.0, 0.05), Constant(0.8)]


@pytest.mark.parametrize("s", SCHEDULES, ids=lambda s: s.kind)
def test_finite_difference(s):
    for t in np.geomspace(1.0, 1e5, 23):
        if isinstance(s, Linear) and t >= s.t_final * 0.999:
            continue
        if hasattr(s, "t_cap") and abs(t / s.t_cap - 1) < 1e-3:
            continue
        h = 1e-6 * t
        fd = (s.gamma(t + h) - s.gamma(t - h)) / (2 * h)
        exact = s.dgamma(t)
        assert exact <= 0
        assert fd == pytest.approx(exact, rel=1e-6, abs=1e-13 * abs(s.gamma(t)) / h)


@settings(max_examples=100, deadline=None)
@given(idx=st.integers(0, len(SCHEDULES) - 1), t1=st.floats(0, 1e6), dt=st.floats(0, 1e6))
def test_monotone(idx, t1, dt):
    s = SCHEDULES[idx]
    assert s.gamma(t1 + dt) <= s.gamma(t1)


def test_calibration_identity_symbolic():
    # substitute Gamma = (alpha t)^(-1/m) into K/(A^2 Gamma^(2q)) |dGamma/dt| and solve for alpha
    t, alpha, a, delta = sp.symbols("t alpha A delta", positive=True)
    for n in (2, 3, 5):
        for k, m, q in ((n, 2 * n - 1, n), (n * (n + 1) // 2, n - 1, sp.Rational(n, 2))):
            gamma = (alpha * t) ** sp.Rational(-1, m)
            env = sp.simplify(-k / (a**2 * gamma ** (2 * q)) * sp.diff(gamma, t))
            assert sp.simplify(sp.diff(env, t)) == 0
            solved = sp.solve(sp.Eq(env, delta), alpha)[0]
            driver = DriverKind.TRANSVERSE if m == 2 * n - 1 else DriverKind.PAIRWISE
            val = calibrate_alpha(AdiabaticityTarget(0.1), 0.3, n, driver)
            assert float(solved.subs({delta: 0.1, a: 0.3})) == pytest.approx(val, rel=1e-14)


def test_calibration_example():
    assert calibrate_alpha(AdiabaticityTarget(0.1), 0.25, 2) == pytest.approx(9.375e-3, rel=1e-14)


def test_calibration_linear_in_delta():
    a1 = calibrate_alpha(AdiabaticityTarget(0.2), 0.01, 5)
    a2 = calibrate_alpha(AdiabaticityTarget(0.1), 0.01, 5)
    assert a2 == pytest.approx(a1 / 2, rel=1e-15)


@pytest.mark.parametrize("cls,driver", [(PowerLaw, DriverKind.TRANSVERSE), (ExtendedPowerLaw, DriverKind.PAIRWISE)])
@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_closure(cls, driver, n):
    a, delta = 0.37 / n, 0.07
    alpha = calibrate_alpha(AdiabaticityTarget(delta), a, n, driver)
    s = cls(alpha, n, 1.3)
    for mult in (1.0001, 2.0, 10.0, 100.0, 1e4):
        assert adiabaticity_envelope(s, a, n, s.t_cap * mult) == pytest.approx(delta, rel=1e-10)


def test_envelope_constant_and_linear():
    assert adiabaticity_envelope(Constant(0.5), 0.2, 3, 10.0) == 0.0
    lin = Linear(1.0, 10.0)
    env = [adiabaticity_envelope(lin, 0.2, 3, t) for t in (1.0, 9.0, 9.9, 9.999)]
    assert np.all(np.diff(env) > 0) and env[-1] > 1e10
    with pytest.raises(ValueError):
        adiabaticity_envelope(lin, 0.2, 3, 10.0)


def test_calibration_needs_decay():
    with pytest.raises(ValueError):
        calibrate_alpha(AdiabaticityTarget(0.1), 0.2, 1, DriverKind.PAIRWISE)
    with pytest.raises(ValueError):
        calibrate_alpha(AdiabaticityTarget(0.1), 0.0, 3)


class TestFromConfig:
    def test_power_with_delta(self):
        s = schedule_from_config({"schedule": "power", "delta": "0.1"}, 2, a=0.25, default_cap=2.0)
        assert isinstance(s, PowerLaw) and s.alpha == pytest.approx(9.375e-3) and s.gamma_cap == 2.0

    def test_extended_with_alpha(self):
        s = schedule_from_config({"schedule": "extended", "alpha": "0.5", "gamma_cap": "3"}, 4)
        assert isinstance(s, ExtendedPowerLaw) and (s.alpha, s.gamma_cap) == (0.5, 3.0)

    def test_other_kinds(self):
        assert schedule_from_config({"schedule": "linear", "t_final": "5"}, 3, default_cap=1.0) == Linear(1.0, 5.0)
        assert schedule_from_config({"schedule": "exponential", "rate": "0.2", "gamma_start": "2"}, 3) \
            == Exponential(2.0, 0.2)
        assert schedule_from_config({"schedule": "constant", "gamma": "0.4"}, 3) == Constant(0.4)

    @pytest.mark.parametrize("cfg", [{"schedule": "power", "delta": "0.1"}, {"schedule": "linear"},
                                     {"schedule": "cosine"}])
    def test_errors(self, cfg):
        with pytest.raises(ValueError):
            schedule_from_config(cfg, 3, default_cap=1.0)


def test_cap_value_continuity_all_n():
    for n in range(2, 9):
        s = PowerLaw(10.0 ** -n, n, 2.0)
        assert math.isclose(s.gamma(s.t_cap * (1 + 1e-13)), 2.0, rel_tol=1e-12)
