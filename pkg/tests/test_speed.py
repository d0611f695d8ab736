import json
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from bornfront.errors import NoPrediction
from bornfront.reaction import classify, combustion, cubic_bistable, fisher, huxley, nagylaki
from bornfront.reduction import DEFAULT_CONTROLS, ModelParams, R, E_inverse, y_max_closed_form
from bornfront.speed import (compute_bounds, compute_speed, limit_speed_prediction,
                             matching_gap)


def test_fisher_bounds():
    b = compute_bounds(classify(fisher()), ModelParams(1, 1))
    assert b.lower_kpp == pytest.approx(2.0, abs=1e-12)
    assert b.lower_universal == pytest.approx(0.1875, abs=1e-10)
    assert b.upper_m_control == pytest.approx(2.0, abs=1e-6)
    assert b.upper_kpp == pytest.approx(2 + 0.25, abs=1e-9)
    assert b.lower <= b.upper


def test_huxley_upper_finite():
    b = compute_bounds(classify(huxley()), ModelParams(1, 1))
    assert math.isfinite(b.upper_monostable)
    assert b.upper_monostable >= b.lower_monostable
    assert b.lower_kpp == 0.0


def test_threshold_upper_linear_in_b():
    calc = classify(cubic_bistable(0.4))
    ups = np.array([compute_bounds(calc, ModelParams(1, g)).upper_threshold
                    for g in (100.0, 200.0, 400.0)])
    gs = np.array([100.0, 200.0, 400.0])
    D = 1 / 60 - float(calc.F(0.4))
    assert np.allclose(ups / gs, np.sqrt(D * D + 2 * D / gs**2) / 0.4, rtol=1e-12)
    assert ups[-1] / gs[-1] == pytest.approx(D / 0.4, rel=1e-3)


def test_balanced_bounds_degenerate():
    calc = classify(cubic_bistable(0.5))
    b = compute_bounds(calc, ModelParams(1, 1))
    assert b.lower_threshold == 0.0
    assert b.upper_threshold > 0
    res = compute_speed(calc, ModelParams(1, 1))
    assert res.c_star == 0.0
    assert res.method == "balanced"


def test_bistable_speed():
    res = compute_speed(classify(cubic_bistable(0.4)), ModelParams(1, 10))
    assert res.c_star == pytest.approx(0.227, abs=0.01)
    assert res.matching_residual < DEFAULT_CONTROLS.rtol_match


def test_fisher_small_gamma():
    g = 1e-2
    res = compute_speed(classify(fisher()), ModelParams(1 / g, 1))
    assert res.c_star == pytest.approx(0.201, abs=0.005)
    assert res.c_star == pytest.approx(2 * math.sqrt(g), abs=1e-5)


def test_fisher_pulled_front_sits_on_kpp_bound():
    # a KPP front with M-bound equal to f'(0) is pulled: c* = 2 sqrt(f'(0)/a) exactly
    for a, b in ((1.0, 1.0), (10.0, 10.0), (1.0, 0.1)):
        res = compute_speed(classify(fisher()), ModelParams(a, b))
        assert res.c_star == pytest.approx(2 * math.sqrt(1 / a), abs=2e-6)
        assert res.method == "linear-determinacy"


def test_fisher_eps2_1e2_not_below_rigorous_bound():
    # the reference 0.569 sits below the proven lower bound 2 sqrt(eps) = 0.632
    res = compute_speed(classify(fisher()), ModelParams(10, 10))
    assert res.c_star >= res.bounds.lower_kpp - 1e-9
    assert res.c_star == pytest.approx(0.6324555, abs=1e-6)


def _shoot_combustion(a, b, alpha=0.3):
    """Independent c* for the combustion term using scipy in the y variable."""
    calc = classify(combustion(alpha))
    p = ModelParams(a, b)
    k1 = -calc.fprime1

    def gap(c):
        d = 1e-7
        x = (-c * a + math.sqrt(c * c * a * a + 4 * a * k1)) / 2
        y0 = float(E_inverse(p, x * d))
        sol = solve_ivp(lambda v, y: [c * a * R(p, max(y[0], 0.0)) - float(calc.f(v))],
                        (1 - d, alpha), [y0], method="LSODA", rtol=1e-11, atol=1e-15)
        return float(y_max_closed_form(p, c, alpha)) - sol.y[0, -1]

    return brentq(gap, 1e-3, 5.0, xtol=1e-10)


@pytest.mark.parametrize("ab", [(1.0, 1.0), (0.5, 2.0)])
def test_combustion_matches_independent_shooting(ab):
    res = compute_speed(classify(combustion(0.3)), ModelParams(*ab))
    assert res.c_star == pytest.approx(_shoot_combustion(*ab), abs=1e-5)


def test_matching_gap_increasing():
    calc = classify(cubic_bistable(0.4))
    p = ModelParams(1, 1)
    cs = np.linspace(0.05, 1.0, 12)
    gaps = [matching_gap(calc, p, c) for c in cs]
    assert np.all(np.diff(gaps) > 0)


@pytest.mark.parametrize("alpha", [0.1, 0.25, 0.4])
def test_linear_bistable_exact(alpha):
    res = compute_speed(classify(cubic_bistable(alpha)), None, linear=True)
    assert res.c_star == pytest.approx(math.sqrt(2) * (0.5 - alpha), abs=1e-5)


def test_linear_pushed_exact_speeds():
    res = compute_speed(classify(nagylaki(sigma=5)), None, linear=True)
    assert res.c_star == pytest.approx(7 / math.sqrt(10), abs=1e-5)
    res = compute_speed(classify(huxley(40)), None, linear=True)
    assert res.c_star == pytest.approx(math.sqrt(20), abs=1e-5)
    res = compute_speed(classify(fisher()), None, linear=True)
    assert res.c_star == pytest.approx(2.0, abs=1e-6)


def test_monotone_in_a_and_b():
    calc = classify(nagylaki())
    cs_a = [compute_speed(calc, ModelParams(a, 1.0)).c_star for a in (0.5, 1.0, 2.0, 4.0)]
    cs_b = [compute_speed(calc, ModelParams(1.0, b)).c_star for b in (0.5, 1.0, 2.0, 4.0)]
    assert np.all(np.diff(cs_a) <= 1e-6)
    assert np.all(np.diff(cs_b) >= -1e-6)


def test_bracket_history_nested():
    res = compute_speed(classify(nagylaki()), ModelParams(1, 1))
    hist = res.bracket_history[1:]
    for (l0, h0), (l1, h1) in zip(hist, hist[1:]):
        assert l0 <= l1 <= h1 <= h0
    assert hist[-1][1] - hist[-1][0] <= DEFAULT_CONTROLS.ctol


def test_record_json():
    res = compute_speed(classify(combustion(0.3)), ModelParams(1, 1))
    rec = json.loads(res.to_json())
    assert rec["c_star"] == pytest.approx(res.c_star)
    assert rec["lower_threshold"] <= rec["c_star"] <= rec["upper_threshold"]


def test_limit_predictions():
    fis, nag = classify(fisher()), classify(nagylaki())
    assert limit_speed_prediction(fis, "singular-perturbation").value == pytest.approx(0.1875)
    assert limit_speed_prediction(nag, "singular-perturbation").value == \
        pytest.approx(float(nag.f(0.865)), abs=1e-3)
    assert limit_speed_prediction(nag, "singular-perturbation").value == pytest.approx(0.622,
                                                                                      abs=1e-3)
    assert limit_speed_prediction(fis, "linear-limit").value == 2.0
    assert limit_speed_prediction(fis, "heaviside").trend == "zero"
    assert limit_speed_prediction(fis, "ratio-diverges").trend == "infinity"
    assert limit_speed_prediction(classify(cubic_bistable(0.5)),
                                  "singular-perturbation").value == 0.0
    with pytest.raises(NoPrediction):
        limit_speed_prediction(classify(cubic_bistable(0.4)), "singular-perturbation")


def test_singular_limit_scales_with_ratio():
    fis = classify(fisher())
    assert limit_speed_prediction(fis, "singular-perturbation", ratio=2.0).value == \
        pytest.approx(0.375)
    # numerical check: a = eps^-1, b = 2 eps^-1 approaches 2 f(v_plus)
    c = compute_speed(fis, ModelParams(1e4, 2e4)).c_star
    assert c == pytest.approx(0.375, abs=0.01)
