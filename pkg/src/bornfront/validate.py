"""Invariant suite: bound sandwiches, monotonicity, profile checks and closed forms."""

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import integrate

from .errors import BornFrontError
from .profile import front_profile, profile_residual
from .reaction import classify, combustion, cubic_bistable, fisher, huxley, nagylaki
from .reduction import (DEFAULT_CONTROLS, Controls, ModelParams, E_inverse, E_transform, R,
                        integrate_forward, y_max_closed_form)
from .speed import compute_speed

A_GRID = (0.5, 1.0, 4.0)
B_GRID = (0.25, 1.0, 4.0)
RESIDUAL_TOL = 1e-4
CLOSED_FORM_TOL = 1e-8
ROUND_TRIP_TOL = 1e-12
STEADY_TOL = 1e-4


def suite_reactions():
    return [fisher(), nagylaki(), huxley(), cubic_bistable(0.4), combustion(0.3)]


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        val = "" if self.value is None else f" value={self.value:.3g}"
        thr = "" if self.threshold is None else f" threshold={self.threshold:.3g}"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{status} {self.name}{val}{thr}{extra}"


@dataclass
class ValidationReport:
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> List[str]:
        return [c.line() for c in self.checks]


def _solve_cell(args):
    spec, a, b, controls = args
    calc = classify(spec)
    p = ModelParams(a, b)
    try:
        res, prof = front_profile(calc, p, controls)
    except BornFrontError as exc:
        return spec.name, a, b, None, None, None, f"{type(exc).__name__}: {exc}"
    resid = float(np.max(np.abs(profile_residual(prof, calc))))
    return spec.name, a, b, res, prof.max_slope, resid, None


def grid_solutions(controls: Controls = DEFAULT_CONTROLS, jobs: int = 1):
    tasks = [(s, a, b, controls) for s in suite_reactions() for a in A_GRID for b in B_GRID]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_solve_cell, tasks))
    return [_solve_cell(t) for t in tasks]


def check_sandwich(cells, ctol: float) -> CheckResult:
    worst, where, failures = 0.0, "", []
    for name, a, b, res, _, _, err in cells:
        if err:
            failures.append(f"{name} a={a} b={b}: {err}")
            continue
        for k, lo in res.bounds.lowers().items():
            gap = lo - res.c_star
            if gap > worst:
                worst, where = gap, f"{name} a={a} b={b} {k}"
        for k, hi in res.bounds.uppers().items():
            gap = res.c_star - hi
            if gap > worst:
                worst, where = gap, f"{name} a={a} b={b} {k}"
    ok = not failures and worst <= ctol
    return CheckResult("bound-sandwich", ok, worst, ctol,
                       "; ".join(failures) or (f"worst at {where}" if where else ""))


def check_monotonicity(cells, ctol: float) -> CheckResult:
    table = {}
    for name, a, b, res, *_ , err in cells:
        if res is not None:
            table[(name, a, b)] = res.c_star
    worst, where = 0.0, ""
    names = sorted({k[0] for k in table})
    for name in names:
        for b in B_GRID:
            row = [table.get((name, a, b)) for a in A_GRID]
            for c0, c1 in zip(row, row[1:]):
                if c0 is not None and c1 is not None and c1 - c0 > worst:
                    worst, where = c1 - c0, f"{name} increasing in a at b={b}"
        for a in A_GRID:
            col = [table.get((name, a, b)) for b in B_GRID]
            for c0, c1 in zip(col, col[1:]):
                if c0 is not None and c1 is not None and c0 - c1 > worst:
                    worst, where = c0 - c1, f"{name} decreasing in b at a={a}"
    return CheckResult("monotone-in-a-and-b", worst <= ctol, worst, ctol, where)


def check_gradient(cells) -> CheckResult:
    worst, where = 0.0, ""
    for name, a, b, res, slope, *_ in cells:
        if slope is None:
            continue
        r = slope / (a / b)
        if r > worst:
            worst, where = r, f"{name} a={a} b={b}"
    return CheckResult("gradient-below-a/b", worst < 1.0, worst, 1.0, f"max v'/(a/b) at {where}")


def check_residual(cells) -> CheckResult:
    worst, where = 0.0, ""
    for name, a, b, _, _, resid, _ in cells:
        if resid is not None and resid > worst:
            worst, where = resid, f"{name} a={a} b={b}"
    return CheckResult("profile-residual", worst < RESIDUAL_TOL, worst, RESIDUAL_TOL, where)


def check_closed_form(controls: Controls = DEFAULT_CONTROLS) -> CheckResult:
    """Numerical forward solution on the zero-reaction stretch against the explicit one."""
    calc = classify(combustion(0.3))
    worst = 0.0
    for a, b in ((1.0, 1.0), (0.5, 4.0), (10.0, 10.0)):
        p = ModelParams(a, b)
        for c in (0.05, 0.3, 2.0):
            sol = integrate_forward(calc, p, c, controls, use_closed_form=False)
            exact = y_max_closed_form(p, c, sol.v)
            worst = max(worst, float(np.max(np.abs(sol.y - exact))))
    return CheckResult("zero-reaction-closed-form", worst < CLOSED_FORM_TOL, worst, CLOSED_FORM_TOL)


def check_round_trip() -> CheckResult:
    y = np.concatenate([[0.0], np.geomspace(1e-14, 1e6, 400)])
    worst = 0.0
    for a, b in ((1.0, 1.0), (1e-3, 10.0), (1e3, 1e-2), (100.0, 100.0)):
        p = ModelParams(a, b)
        back = E_inverse(p, E_transform(p, y))
        rel = np.abs(back - y) / np.maximum(y, 1e-300)
        worst = max(worst, float(np.max(rel[1:])), float(abs(back[0])))
    return CheckResult("E-round-trip", worst < ROUND_TRIP_TOL, worst, ROUND_TRIP_TOL, "relative")


def steady_position(calc, params, v):
    """z(v) = int_{1/2}^{v} ds / (a R(-F(s))) for a balanced reaction."""
    def integrand(s):
        return 1.0 / (params.a * R(params, max(-float(calc.F(s)), 0.0)))

    return integrate.quad(integrand, calc.V0, v, epsabs=1e-12, epsrel=1e-12, limit=200)[0]


def check_balanced(controls: Controls = DEFAULT_CONTROLS) -> List[CheckResult]:
    calc = classify(cubic_bistable(0.5))
    worst_c, worst_z = 0.0, 0.0
    for a, b in ((1.0, 1.0), (0.5, 4.0), (4.0, 0.25)):
        p = ModelParams(a, b)
        res, prof = front_profile(calc, p, controls)
        worst_c = max(worst_c, abs(res.c_star))
        idx = np.linspace(0, len(prof.z) - 1, 60).round().astype(int)
        z_ref = np.array([steady_position(calc, p, prof.v[i]) for i in idx])
        worst_z = max(worst_z, float(np.max(np.abs(z_ref - prof.z[idx]))))
    return [CheckResult("balanced-speed-zero", worst_c == 0.0, worst_c, 0.0),
            CheckResult("balanced-steady-profile", worst_z < STEADY_TOL, worst_z, STEADY_TOL,
                        "sup |z - quadrature|")]


def run_validation(controls: Controls = DEFAULT_CONTROLS, jobs: int = 1) -> ValidationReport:
    cells = grid_solutions(controls, jobs)
    checks = [check_sandwich(cells, controls.ctol),
              check_monotonicity(cells, controls.ctol),
              check_gradient(cells),
              check_residual(cells),
              check_closed_form(controls),
              check_round_trip()]
    checks.extend(check_balanced(controls))
    return ValidationReport(checks)


__all__ = ["CheckResult", "ValidationReport", "run_validation", "suite_reactions",
           "steady_position"]
