"""Reference three-digit critical speeds used as regression targets."""

import math
from dataclasses import dataclass
from typing import List, Optional

from .errors import BornFrontError
from .reaction import ReactionSpec, combustion, cubic_bistable, fisher, nagylaki, piecewise
from .reduction import DEFAULT_CONTROLS, Controls, ModelParams
from .reaction import classify
from .speed import compute_speed
from .sweep import coupled_params


def weak_bistable_combustion(alpha: float = 0.3, scale: float = 1e-4) -> ReactionSpec:
    """scale * s(1-s)(s-alpha) below alpha, (s-alpha)(1-s) above."""
    below = [0.0, -scale * alpha, scale * (1 + alpha), -scale]
    above = [-alpha, 1 + alpha, -1.0]
    return piecewise([0.0, alpha, 1.0], [below, above], name="weak-bistable-combustion")


@dataclass(frozen=True)
class GoldenCell:
    row: str
    reaction: ReactionSpec
    axis: str
    value: float
    expected: float
    fixed_a: float = 1.0
    in_table: bool = True

    @property
    def params(self) -> ModelParams:
        return coupled_params(self.axis, self.value, fixed_a=self.fixed_a)

    @property
    def tolerance(self) -> float:
        return max(0.01, 0.02 * abs(self.expected))


_EPS2 = (1e-1, 1e-2, 1e-3, 1e-4, 1e-6)


def appendix_cells(include_extra: bool = False) -> List[GoldenCell]:
    cells = []
    for b, c in zip((1, 5, 10, 50, 100), (0.142, 0.167, 0.227, 0.874, 1.710)):
        cells.append(GoldenCell("bistable-0.4 a=1 b", cubic_bistable(0.4), "b", b, c))
    for g, c in zip((1e-4, 1e-2, 1, 10, 100), (0.020, 0.201, 1.893, 5.919, 22.901)):
        cells.append(GoldenCell("fisher a=1/gamma b=1", fisher(), "gamma", g, c))
    rows = (
        ("fisher a=b=1/eps", fisher(), (1.011, 0.569, 0.332, 0.229, 0.193)),
        ("nagylaki a=b=1/eps", nagylaki(), (1.318, 0.875, 0.707, 0.652, 0.626)),
        ("combustion-0.3 a=b=1/eps", combustion(0.3), (0.284, 0.167, 0.106, 0.078, 0.063)),
        ("bistable-0.45 a=b=1/eps", cubic_bistable(0.45), (0.040, 0.024, 0.015, 0.011, 0.009)),
    )
    for label, spec, vals in rows:
        for e2, c in zip(_EPS2, vals):
            cells.append(GoldenCell(label, spec, "epsilon2", e2, c))
    if include_extra:
        # the combustion row values also serve a weakly bistable variant
        for e2, c in zip(_EPS2, rows[2][2]):
            cells.append(GoldenCell("weak-bistable-0.3 a=b=1/eps", weak_bistable_combustion(),
                                    "epsilon2", e2, c, in_table=False))
    return cells


@dataclass
class GoldenOutcome:
    cell: GoldenCell
    c_star: Optional[float]
    error: Optional[str] = None
    rigorous_lower: Optional[float] = None

    @property
    def deviation(self) -> float:
        return math.inf if self.c_star is None else self.c_star - self.cell.expected

    @property
    def passed(self) -> bool:
        return self.c_star is not None and abs(self.deviation) <= self.cell.tolerance

    @property
    def expected_below_bound(self) -> bool:
        """True when the reference value lies below a proven lower bound by more than its tolerance."""
        return (self.rigorous_lower is not None
                and self.cell.expected + self.cell.tolerance < self.rigorous_lower)

    def to_record(self) -> dict:
        return {"row": self.cell.row, "axis": self.cell.axis, "value": self.cell.value,
                "a": self.cell.params.a, "b": self.cell.params.b,
                "expected": self.cell.expected, "c_star": self.c_star,
                "c_star_rounded": None if self.c_star is None else round(self.c_star, 3),
                "deviation": None if self.c_star is None else self.deviation,
                "tolerance": self.cell.tolerance, "passed": self.passed,
                "lower_bound": self.rigorous_lower,
                "expected_below_bound": self.expected_below_bound, "error": self.error}


def _solve(args):
    cell, controls = args
    try:
        res = compute_speed(classify(cell.reaction), cell.params, controls)
        return GoldenOutcome(cell, res.c_star, rigorous_lower=res.bounds.lower)
    except BornFrontError as exc:
        return GoldenOutcome(cell, None, f"{type(exc).__name__}: {exc}")


def run_golden(controls: Controls = DEFAULT_CONTROLS, include_extra: bool = False,
               jobs: int = 1) -> List[GoldenOutcome]:
    tasks = [(c, controls) for c in appendix_cells(include_extra)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_solve, tasks))
    return [_solve(t) for t in tasks]
