"""Acceptance criteria; each test prints one PASS/FAIL line.

Run standalone with ``python3 tests/test_acceptance.py`` or through pytest.
"""

import math
import sys

import numpy as np
from scipy.integrate import solve_ivp

from bornfront.golden import run_golden
from bornfront.profile import front_profile, glue_slope_mismatch, glued, make_limit_profile
from bornfront.reaction import classify, cubic_bistable, fisher, nagylaki
from bornfront.reduction import ModelParams, R, E_inverse, integrate_backward
from bornfront.speed import compute_speed
from bornfront.sweep import SweepPlan, run_sweep
from bornfront.validate import run_validation

EPS2 = (1e-1, 1e-2, 1e-3, 1e-4, 1e-6)


def eps_params(e2):
    e = math.sqrt(e2)
    return ModelParams(1 / e, 1 / e)


RESULTS = {}


def report(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}"
    RESULTS[n] = line
    if __name__ == "__main__":
        print(line)


def test_criterion_1_golden_table():
    outcomes = run_golden(jobs=2)
    bad = [o for o in outcomes if not o.passed]
    detail = f"{len(outcomes) - len(bad)}/{len(outcomes)} cells within max(0.01, 2%)"
    if bad:
        detail += "; off: " + ", ".join(
            f"{o.cell.row} {o.cell.axis}={o.cell.value:g} exp {o.cell.expected} got "
            f"{o.c_star:.4f}" for o in bad)
    report(1, not bad, detail)
    assert len(outcomes) == 30
    assert not bad, detail


def test_criterion_2_linear_limit():
    c_f = compute_speed(classify(fisher()), ModelParams(1, 1e-3)).c_star
    c_b = compute_speed(classify(cubic_bistable(0.4)), ModelParams(1, 1e-3)).c_star
    ok = abs(c_f - 2) <= 5e-3 and abs(c_b - 0.1414) <= 5e-3
    report(2, ok, f"fisher b=1e-3 c*={c_f:.6f} (2 +- 5e-3); bistable-0.4 c*={c_b:.6f} "
                  f"(0.1414 +- 5e-3)")
    assert ok


def test_criterion_3_singular_limit_speed():
    fis, nag = classify(fisher()), classify(nagylaki())
    cf = [compute_speed(fis, eps_params(e)).c_star for e in EPS2]
    cn = [compute_speed(nag, eps_params(e)).c_star for e in EPS2]
    fvp_f = float(fis.f(fis.v_plus))
    fvp_n = float(nag.f(nag.v_plus))
    ok_f = (all(np.diff(cf) < 0) and min(cf) >= fvp_f and 0.185 <= cf[-1] <= 0.20
            and abs(fvp_f - 0.1875) < 1e-12)
    ok_n = min(cn) >= fvp_n and 0.62 <= cn[-1] <= 0.64 and abs(fvp_n - 0.622) < 1e-3
    report(3, ok_f and ok_n, f"fisher c*={['%.4f' % c for c in cf]} floor {fvp_f:.4f}; "
                             f"nagylaki c*={['%.4f' % c for c in cn]} floor {fvp_n:.4f}")
    assert ok_f and ok_n


def test_criterion_4_order_fits():
    g = run_sweep(SweepPlan(fisher(), "gamma", [1e-5, 1e-4, 1e-3], outputs={"speeds"}),
                  expected_order=0.5).fitted_order
    b = run_sweep(SweepPlan(cubic_bistable(0.4), "b", [50, 100, 200], outputs={"speeds"}),
                  expected_order=1.0).fitted_order
    ok = abs(g.slope - 0.5) <= 0.05 and abs(b.slope - 1.0) <= 0.1
    report(4, ok, f"gamma slope {g.slope:.4f} (0.5 +- 0.05); b slope {b.slope:.4f} (1 +- 0.1)")
    assert ok


def test_criterion_5_property_suite():
    rep = run_validation(jobs=2)
    failed = [c.name for c in rep.checks if not c.passed]
    report(5, rep.passed, f"{len(rep.checks) - len(failed)}/{len(rep.checks)} checks"
                          + (f"; failed {failed}" if failed else ""))
    assert rep.passed, rep.lines()


def test_criterion_6_glued_geometry():
    calc = classify(fisher())
    g = make_limit_profile(calc, "singular-perturbation")
    z_glue = g.parameters["z_glue"]
    mismatch = glue_slope_mismatch(calc)
    dists = []
    for e in (1e-2, 1e-4, 1e-6):
        _, prof = front_profile(calc, eps_params(e))
        z = np.linspace(-1, 4, 2001)
        dists.append(float(np.max(np.abs(prof(z) - glued(calc, 0.5)(z)))))
    ok = (g.kind == "GluedLI" and abs(z_glue - 0.25) < 1e-9 and mismatch < 1e-8
          and dists[0] > dists[1] > dists[2] and dists[2] < 0.05)
    report(6, ok, f"glue z={z_glue:.6f}, slope mismatch {mismatch:.1e}, distances "
                  f"{['%.4f' % d for d in dists]}")
    assert ok


def _y_oracle(calc, p, c, targets):
    """y at ``targets`` from scipy on y' = c a R(y) - f started next to v = 1."""
    d = 1e-6
    k1 = -calc.fprime1
    x = (-c * p.a + math.sqrt((c * p.a) ** 2 + 4 * p.a * k1)) / 2
    y0 = float(E_inverse(p, x * d))
    sol = solve_ivp(lambda v, y: [c * p.a * R(p, max(y[0], 0.0)) - float(calc.f(v))],
                    (1 - d, min(targets)), [y0], method="LSODA", rtol=1e-10, atol=1e-16,
                    dense_output=True)
    return [float(sol.sol(t)[0]) for t in targets]


def test_criterion_7_one_sided_sharpening():
    calc = classify(fisher())
    lines, ok = [], True
    for e2 in (1e-2, 1e-4, 1e-6):
        p = eps_params(e2)
        eps = math.sqrt(e2)
        c = compute_speed(calc, p).c_star
        sol = integrate_backward(calc, p, c, v_stop=0.2, use_floor=False)
        y3, y9 = float(sol.y_at(0.3)), float(sol.y_at(0.9))
        o3, o9 = _y_oracle(calc, p, c, (0.3, 0.9))
        agree = abs(y3 - o3) <= 1e-6 * max(o3, 1e-3) and abs(y9 - o9) <= 1e-6 * max(o9, 1e-6)
        cell_ok = y3 > 0.01 and y9 / eps <= 1.0 and agree
        ok &= cell_ok
        lines.append(f"eps2={e2:g}: y(0.3)={y3:.4f} y(0.9)/eps={y9 / eps:.4f}"
                     f"{'' if agree else ' (oracle mismatch)'}")
    report(7, ok, "; ".join(lines) + " [need y(0.3) > 0.01, y(0.9)/eps bounded by 1]")
    assert ok


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion"):
            try:
                fn()
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)
