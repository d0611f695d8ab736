import json

import numpy as np
import pytest

from bornfront.errors import InsufficientData
from bornfront.reaction import cubic_bistable, fisher
from bornfront.sweep import SweepPlan, SweepReport, SweepRow, coupled_params, fit_order, run_sweep


def test_coupling_rules():
    assert coupled_params("gamma", 0.01) == coupled_params("a", 100.0)
    p = coupled_params("epsilon2", 1e-4)
    assert p.a == pytest.approx(100.0) and p.b == pytest.approx(100.0)
    p = coupled_params("epsilon", 0.1)
    assert p.a == pytest.approx(10.0) and p.b == pytest.approx(10.0)
    assert coupled_params("b", 5.0, fixed_a=2.0).a == 2.0


def test_plan_validation():
    with pytest.raises(ValueError):
        SweepPlan(fisher(), "zeta", [1.0])
    with pytest.raises(ValueError):
        SweepPlan(fisher(), "b", [1.0, 3.0, 2.0])
    with pytest.raises(ValueError):
        SweepPlan(fisher(), "b", [-1.0])
    with pytest.raises(ValueError):
        SweepPlan(fisher(), "b", [1.0], outputs={"distances"})
    with pytest.raises(ValueError):
        SweepPlan(fisher(), "custom")


def test_gamma_row():
    vals = [1e-4, 1e-2, 1, 10, 100]
    ref = [0.020, 0.201, 1.893, 5.919, 22.901]
    rep = run_sweep(SweepPlan(fisher(), "gamma", vals, outputs={"speeds"}))
    c = rep.c_stars()
    # the cells at gamma = 1 and 10 lie below the proven bound 2 sqrt(gamma); those are
    # exercised in the acceptance table, here only the consistent ones
    for i in (0, 1, 4):
        assert c[i] == pytest.approx(ref[i], rel=0.02)
    assert np.all(c >= 2 * np.sqrt(vals) - 1e-9)


def test_bistable_b_row():
    vals = [1, 5, 10, 50, 100]
    ref = [0.142, 0.167, 0.227, 0.874, 1.710]
    rep = run_sweep(SweepPlan(cubic_bistable(0.4), "b", vals, outputs={"speeds"}), jobs=2)
    assert np.allclose(rep.c_stars(), ref, rtol=0.02)
    assert [r.value for r in rep.rows] == [float(v) for v in vals]


def test_bounds_only():
    rep = run_sweep(SweepPlan(fisher(), "b", [1.0, 2.0], outputs=()))
    for r in rep.rows:
        assert r.c_star is None
        assert r.bounds["lower_kpp"] == pytest.approx(2.0)
    assert rep.fitted_order is None


def test_fit_orders():
    rep = run_sweep(SweepPlan(fisher(), "gamma", [1e-5, 1e-4, 1e-3], outputs={"speeds"}),
                    expected_order=0.5)
    assert rep.fitted_order.slope == pytest.approx(0.5, abs=0.05)
    assert rep.fitted_order.deviation < 0.05
    rep = run_sweep(SweepPlan(cubic_bistable(0.4), "b", [50, 100, 200], outputs={"speeds"}))
    assert rep.fitted_order.slope == pytest.approx(1.0, abs=0.1)


def test_fit_exact_power_law():
    rows = [SweepRow(x, 1, 1, c_star=3 * x**0.7) for x in (1.0, 2.0, 4.0, 8.0)]
    fit = fit_order(SweepReport(None, rows))
    assert fit.slope == pytest.approx(0.7, abs=1e-12)
    assert fit.intercept == pytest.approx(np.log(3), abs=1e-12)


def test_fit_needs_three_points():
    rows = [SweepRow(x, 1, 1, c_star=x) for x in (1.0, 2.0)]
    with pytest.raises(InsufficientData):
        fit_order(SweepReport(None, rows))


def test_distances_decrease():
    plan = SweepPlan(fisher(), "epsilon2", [1e-2, 1e-4, 1e-6], outputs={"speeds", "distances"},
                     limit="singular-perturbation")
    rep = run_sweep(plan)
    d = [r.distance for r in rep.rows]
    assert d[0] > d[1] > d[2]
    assert d[2] < 0.05


def test_csv_and_json_deterministic():
    plan = SweepPlan(cubic_bistable(0.4), "b", [1.0, 5.0, 10.0], outputs={"speeds", "bounds"})
    a = run_sweep(plan)
    b = run_sweep(plan, jobs=2)
    assert a.to_csv() == b.to_csv()
    assert a.to_json() == b.to_json()
    header = a.to_csv().splitlines()[0].split(",")
    assert header[:4] == ["value", "a", "b", "c_star"]
    body = json.loads(a.to_json(3))
    assert body["rows"][2]["c_star"] == 0.227


def test_failed_row_reported():
    plan = SweepPlan(fisher(), "custom", pairs=[(1.0, 1.0), (1.0, 2.0)], outputs={"speeds"})
    rep = run_sweep(plan)
    assert all(r.ok for r in rep.rows)
    assert rep.fitted_order is None
