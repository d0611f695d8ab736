"""Parameter sweeps over (a, b) paths, convergence-order fits and distance tables."""

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import BornFrontError, InsufficientData
from .profile import distance_to_limit, front_profile, make_limit_profile
from .reaction import ReactionSpec, classify
from .reduction import DEFAULT_CONTROLS, Controls, ModelParams
from .speed import compute_bounds, compute_speed

AXES = ("a", "b", "epsilon", "epsilon2", "gamma", "custom")
OUTPUTS = ("speeds", "bounds", "profiles", "distances")


def coupled_params(axis: str, value: float, fixed_a: float = 1.0, fixed_b: float = 1.0):
    """(a, b) for one point of a sweep axis."""
    if axis == "a":
        return ModelParams(value, fixed_b)
    if axis == "b":
        return ModelParams(fixed_a, value)
    if axis == "epsilon":
        return ModelParams(1.0 / value, 1.0 / value)
    if axis == "epsilon2":
        e = math.sqrt(value)
        return ModelParams(1.0 / e, 1.0 / e)
    if axis == "gamma":
        return ModelParams(1.0 / value, 1.0)
    raise ValueError(f"axis {axis!r} has no coupling rule")


@dataclass
class SweepPlan:
    reaction: ReactionSpec
    axis: str
    values: Sequence = ()
    outputs: frozenset = frozenset({"speeds", "bounds"})
    fixed_a: float = 1.0
    fixed_b: float = 1.0
    pairs: Sequence = ()
    limit: Optional[str] = None
    window: tuple = (-1.0, 4.0)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}")
        self.outputs = frozenset(self.outputs)
        unknown = self.outputs - set(OUTPUTS)
        if unknown:
            raise ValueError(f"unknown outputs {sorted(unknown)}")
        if self.axis == "custom":
            self.pairs = [tuple(map(float, p)) for p in self.pairs]
            if not self.pairs:
                raise ValueError("custom axis needs (a, b) pairs")
            self.values = list(range(len(self.pairs)))
        else:
            vals = [float(v) for v in self.values]
            if not vals or any(v <= 0 for v in vals):
                raise ValueError("sweep values must be positive")
            d = np.diff(vals)
            if len(vals) > 1 and not (np.all(d > 0) or np.all(d < 0)):
                raise ValueError("sweep values must be strictly monotone")
            self.values = vals
        if "distances" in self.outputs and self.limit is None:
            raise ValueError("distances need a limit regime key")

    def params(self, i: int) -> ModelParams:
        if self.axis == "custom":
            return ModelParams(*self.pairs[i])
        return coupled_params(self.axis, self.values[i], self.fixed_a, self.fixed_b)


@dataclass
class SweepRow:
    value: float
    a: float
    b: float
    c_star: Optional[float] = None
    residual: Optional[float] = None
    iterations: Optional[int] = None
    bounds: dict = field(default_factory=dict)
    max_slope: Optional[float] = None
    distance: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.c_star is not None


@dataclass
class FitResult:
    slope: float
    intercept: float
    stderr: float
    residual: float
    n: int
    deviation: Optional[float] = None

    def band(self, z: float = 1.96):
        return self.slope - z * self.stderr, self.slope + z * self.stderr


@dataclass
class SweepReport:
    plan: SweepPlan
    rows: List[SweepRow]
    fitted_order: Optional[FitResult] = None

    COLUMNS = ("value", "a", "b", "c_star", "residual", "iterations", "max_slope", "distance",
               "error")

    def c_stars(self) -> np.ndarray:
        return np.array([r.c_star if r.ok else np.nan for r in self.rows])

    def to_records(self) -> list:
        out = []
        for r in self.rows:
            rec = {k: getattr(r, k) for k in self.COLUMNS}
            rec.update(r.bounds)
            out.append(rec)
        return out

    def to_csv(self, digits: int = 9) -> str:
        bound_keys = sorted({k for r in self.rows for k in r.bounds})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(self.COLUMNS) + bound_keys)
        for rec in self.to_records():
            w.writerow([format_value(rec.get(k), digits) for k in list(self.COLUMNS) + bound_keys])
        return buf.getvalue()

    def to_json(self, digits: int = 9) -> str:
        body = {"axis": self.plan.axis, "reaction": self.plan.reaction.name,
                "rows": [{k: round_value(v, digits) for k, v in rec.items()}
                         for rec in self.to_records()]}
        if self.fitted_order is not None:
            f = self.fitted_order
            body["fitted_order"] = {"slope": round_value(f.slope, digits),
                                    "stderr": round_value(f.stderr, digits),
                                    "residual": round_value(f.residual, digits),
                                    "n": f.n, "deviation": round_value(f.deviation, digits)}
        return json.dumps(body, sort_keys=True, indent=1)


def round_value(x, digits):
    if isinstance(x, float) and math.isfinite(x) and x != 0:
        return float(f"{x:.{digits}g}")
    return x


def format_value(x, digits: int = 9) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.{digits}g}"
    return str(x)


def _run_row(plan: SweepPlan, i: int, controls: Controls) -> SweepRow:
    p = plan.params(i)
    row = SweepRow(plan.values[i], p.a, p.b)
    try:
        calc = classify(plan.reaction)
        if plan.outputs & {"speeds", "profiles", "distances"}:
            res = compute_speed(calc, p, controls)
            row.c_star, row.residual, row.iterations = res.c_star, res.matching_residual, res.iterations
            bounds = res.bounds
        else:
            bounds = compute_bounds(calc, p)
        if "bounds" in plan.outputs or not (plan.outputs & {"speeds"}):
            row.bounds = {k: v for k, v in bounds.to_record().items() if v is not None}
        if plan.outputs & {"profiles", "distances"}:
            _, prof = front_profile(calc, p, controls, speed=res)
            row.max_slope = prof.max_slope
            if "distances" in plan.outputs:
                limit = make_limit_profile(calc, plan.limit, ratio=p.ratio, controls=controls)
                row.distance = distance_to_limit(prof, limit, plan.window)
    except BornFrontError as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def _run_row_star(args):
    return _run_row(*args)


def run_sweep(plan: SweepPlan, controls: Controls = DEFAULT_CONTROLS, jobs: int = 1,
              expected_order: Optional[float] = None) -> SweepReport:
    """Solve every row; rows are independent and keep plan order."""
    tasks = [(plan, i, controls) for i in range(len(plan.values))]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_run_row_star, tasks))
    else:
        rows = [_run_row(*t) for t in tasks]
    report = SweepReport(plan, rows)
    if plan.axis != "custom" and "speeds" in plan.outputs:
        try:
            report.fitted_order = fit_order(report, expected_order)
        except InsufficientData:
            pass
    return report


def fit_order(report: SweepReport, expected: Optional[float] = None) -> FitResult:
    """Unweighted least-squares slope of log c* against log of the sweep value."""
    pts = [(r.value, r.c_star) for r in report.rows if r.ok and r.c_star > 0]
    if len(pts) < 3:
        raise InsufficientData(f"need at least 3 successful rows, got {len(pts)}")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    fit = stats.linregress(x, y)
    resid = float(np.sqrt(np.mean((y - (fit.intercept + fit.slope * x)) ** 2)))
    dev = None if expected is None else abs(fit.slope - expected)
    return FitResult(float(fit.slope), float(fit.intercept), float(fit.stderr), resid, len(pts), dev)


__all__ = ["SweepPlan", "SweepReport", "SweepRow", "FitResult", "run_sweep", "fit_order",
           "distance_to_limit", "coupled_params"]
