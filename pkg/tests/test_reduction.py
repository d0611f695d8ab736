import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from bornfront.errors import DomainError
from bornfront.reaction import classify, combustion, cubic_bistable, fisher, huxley, nagylaki
from bornfront.reduction import (DEFAULT_CONTROLS, ModelParams, R, E_inverse, E_transform,
                                 integrate_backward, integrate_forward, join, y_max_closed_form)
from bornfront.speed import compute_speed


def test_R_values():
    p = ModelParams(1, 1)
    assert R(p, 0.0) == 0.0
    assert R(p, 2.0) == pytest.approx(math.sqrt(8) / 3, abs=1e-15)
    assert R(ModelParams(1, 2), 1e12) == pytest.approx(0.5, rel=1e-6)
    with pytest.raises(DomainError):
        R(p, -1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(0, 1e6))
def test_R_bounded_by_inverse_b(a, b, y):
    assert R(ModelParams(a, b), y) <= 1.0 / b * (1 + 1e-14)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(0, 100), st.floats(1e-6, 1.0))
def test_R_increasing(a, b, y, dy):
    p = ModelParams(a, b)
    assert R(p, y + dy) >= R(p, y) * (1 - 4e-16)


def test_E_values():
    p = ModelParams(1, 1)
    assert E_transform(p, 0.0) == 0.0
    assert E_transform(p, 1.0) == pytest.approx(math.sqrt(3), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-12, 1e6))
def test_E_round_trip(a, b, y):
    p = ModelParams(a, b)
    assert abs(E_inverse(p, E_transform(p, y)) - y) <= 1e-12 * max(y, 1e-300) * 10 or \
        abs(E_inverse(p, E_transform(p, y)) - y) / y < 1e-12


def test_y_max_closed_form_values():
    assert y_max_closed_form(ModelParams(1, 1), 1.0, 1.0) == pytest.approx(math.sqrt(2) - 1,
                                                                           abs=1e-15)
    v = np.linspace(0, 1, 11)
    assert np.all(y_max_closed_form(ModelParams(2, 3), 0.0, v) == 0.0)


@pytest.mark.parametrize("spec", [fisher(), nagylaki(), huxley()])
@pytest.mark.parametrize("ab", [(1.0, 1.0), (0.5, 2.0), (3.0, 0.5)])
def test_backward_at_zero_speed(spec, ab):
    calc = classify(spec)
    sol = integrate_backward(calc, ModelParams(*ab), 0.0)
    assert np.max(np.abs(sol.y - (calc.F1 - calc.F(sol.v)))) < 1e-8


def test_backward_below_lower_bound_stays_positive():
    # below c* the solution from (1, 0) passes above the origin: y(0) > 0
    calc = classify(fisher())
    for c in (0.5, 0.9):
        sol = integrate_backward(calc, ModelParams(1, 1), c)
        assert sol.hit_zero_at is None
        assert sol.v[0] == 0.0
        assert sol.y[0] > 1e-3


def test_backward_hits_zero_for_slow_bistable():
    # bistable with c well above c*: the backward branch dies before alpha
    calc = classify(cubic_bistable(0.4))
    sol = integrate_backward(calc, ModelParams(1, 1), 1.0)
    assert sol.hit_zero_at is not None
    assert 0.4 < sol.hit_zero_at < 1.0


def test_balanced_backward_zero_speed():
    calc = classify(cubic_bistable(0.5))
    sol = integrate_backward(calc, ModelParams(1, 1), 0.0)
    assert sol.y_at(0.5) == pytest.approx(-float(calc.F(0.5)), abs=1e-8)
    assert -float(calc.F(0.5)) > 0
    assert sol.y[0] == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize("ab", [(1.0, 1.0), (0.5, 4.0), (10.0, 10.0)])
@pytest.mark.parametrize("c", [0.05, 0.4, 3.0])
def test_type_b_forward_matches_closed_form(ab, c):
    calc = classify(combustion(0.3))
    p = ModelParams(*ab)
    for closed in (True, False):
        sol = integrate_forward(calc, p, c, use_closed_form=closed)
        assert sol.v[-1] == pytest.approx(0.3)
        assert np.max(np.abs(sol.y - y_max_closed_form(p, c, sol.v))) < 1e-8


def test_type_c_forward_zero_speed():
    calc = classify(cubic_bistable(0.4))
    for ab in ((1.0, 1.0), (2.0, 0.5)):
        sol = integrate_forward(calc, ModelParams(*ab), 0.0)
        assert np.max(np.abs(sol.y + calc.F(sol.v))) < 1e-8


@pytest.mark.parametrize("spec", [combustion(0.3), cubic_bistable(0.4)])
def test_forward_backward_agree_at_critical_speed(spec):
    calc = classify(spec)
    p = ModelParams(1, 1)
    res = compute_speed(calc, p)
    fw = integrate_forward(calc, p, res.c_star)
    bw = integrate_backward(calc, p, res.c_star, v_stop=calc.alpha)
    assert abs(fw.y[-1] - bw.y[0]) < DEFAULT_CONTROLS.rtol_match


@pytest.mark.parametrize("c", [0.1, 0.5, 2.0])
def test_forward_maximal_solution_bound(c):
    # f >= 0 gives y <= y_m; f < 0 on (0, alpha) reverses it
    p = ModelParams(1, 2)
    comb = classify(combustion(0.3))
    sol = integrate_forward(comb, p, c, v_stop=0.9)
    assert np.all(sol.y >= 0)
    assert np.all(sol.y <= y_max_closed_form(p, c, sol.v) * (1 + 1e-9) + 1e-14)
    bist = classify(cubic_bistable(0.4))
    sol = integrate_forward(bist, p, c)
    assert np.all(sol.y >= y_max_closed_form(p, c, sol.v) * (1 - 1e-9))


def test_slope_bound():
    calc = classify(nagylaki())
    p = ModelParams(2, 3)
    c = 0.8
    sol = integrate_backward(calc, p, c)
    yprime = sol.dE * sol.E / (p.a + p.b**2 * sol.y)  # dy/dE = E / (a + b^2 y)
    assert np.all(yprime <= c * p.a / p.b - calc.f(sol.v) + 1e-9)


def test_backward_matches_scipy_in_y():
    # independent solver on y' = c a R(y) - f away from the singular seed
    calc = classify(nagylaki())
    p = ModelParams(2.0, 1.0)
    c = 1.5
    sol = integrate_backward(calc, p, c, v_stop=0.2)
    v0 = 0.95
    y0 = sol.y_at(v0)
    ref = solve_ivp(lambda v, y: c * p.a * R(p, max(y[0], 0.0)) - calc.f(v), (v0, 0.2), [y0],
                    method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True)
    for v in (0.8, 0.5, 0.2):
        assert sol.y_at(v) == pytest.approx(float(ref.sol(v)[0]), rel=1e-7)


def test_join_orders_and_covers():
    calc = classify(cubic_bistable(0.4))
    p = ModelParams(1, 1)
    fw = integrate_forward(calc, p, 0.2)
    bw = integrate_backward(calc, p, 0.2, v_stop=0.4)
    j = join(fw, bw)
    assert np.all(np.diff(j.v) > 0)
    assert j.v[0] < 1e-5 and j.v[-1] > 1 - 1e-5


def test_to_csv_header():
    sol = integrate_backward(classify(fisher()), ModelParams(1, 1), 2.0)
    lines = sol.to_csv().splitlines()
    assert lines[0] == "v,y"
    assert len(lines) == len(sol.v) + 1


def test_negative_speed_rejected():
    with pytest.raises(DomainError):
        integrate_backward(classify(fisher()), ModelParams(1, 1), -0.1)
