"""Analytic speed bounds and the critical speed c* by bracketed bisection."""

import json
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import BracketFailure, NoPrediction, StiffnessFailure
from .reaction import ReactionCalculus, sup_ratio
from .reduction import (DEFAULT_CONTROLS, Controls, ModelParams, R, integrate_backward,
                        integrate_fast_manifold, integrate_forward, y_max_closed_form)


@dataclass
class SpeedBounds:
    """Every applicable bound on c*; ``None`` when a bound does not apply.

    ``estimate_unit_coeffs`` is a heuristic for a = b = 1 that is not a valid
    upper bound in general; it is reported but never used for bracketing.
    """

    lower_monostable: Optional[float] = None
    upper_monostable: Optional[float] = None
    lower_threshold: Optional[float] = None
    upper_threshold: Optional[float] = None
    lower_universal: Optional[float] = None
    lower_kpp: Optional[float] = None
    upper_kpp: Optional[float] = None
    upper_m_control: Optional[float] = None
    m_control: Optional[float] = None
    estimate_unit_coeffs: Optional[float] = None

    LOWER = ("lower_monostable", "lower_threshold", "lower_universal", "lower_kpp")
    UPPER = ("upper_monostable", "upper_threshold", "upper_kpp", "upper_m_control")

    def lowers(self) -> dict:
        return {k: getattr(self, k) for k in self.LOWER if getattr(self, k) is not None}

    def uppers(self) -> dict:
        return {k: getattr(self, k) for k in self.UPPER if getattr(self, k) is not None}

    @property
    def lower(self) -> float:
        return max(self.lowers().values(), default=0.0)

    @property
    def upper(self) -> float:
        return min(self.uppers().values(), default=math.inf)

    def to_record(self) -> dict:
        return {k: v for k, v in asdict(self).items()}


@dataclass
class SpeedResult:
    c_star: float
    bounds: SpeedBounds
    bracket_history: List[Tuple[float, float]] = field(default_factory=list)
    matching_residual: float = 0.0
    iterations: int = 0
    method: str = "bisection"
    slope_residual: Optional[float] = None

    def to_record(self) -> dict:
        rec = {"c_star": self.c_star, "residual": self.matching_residual,
               "iterations": self.iterations, "method": self.method}
        rec.update(self.bounds.to_record())
        rec["slope_residual"] = self.slope_residual
        return rec

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)


def _minimal_m(calc: ReactionCalculus, params: ModelParams, grid_size: int = 10_000,
               rel_tol: float = 1e-8) -> float:
    """Least M with f(s) <= M s / sqrt(1 + (M/a) b^2 s^2) on the grid."""
    a, b = params.a, params.b
    s = np.linspace(0.0, 1.0, grid_size + 1)[1:]
    fs = calc.f(s)

    def ok(M):
        return bool(np.all(fs <= M * s / np.sqrt(1.0 + (M / a) * b * b * s * s) * (1 + 1e-14)))

    # M >= f'(0) is forced by s -> 0
    lo = max(calc.fprime0, 0.0)
    hi = max(float(np.max(fs / s)), lo, 1e-12)
    if ok(lo) and lo > 0:
        return lo
    n = 0
    while not ok(hi):
        lo, hi = hi, 2 * hi
        n += 1
        if n > 200:
            return math.inf
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def compute_bounds(calc: ReactionCalculus, params: ModelParams) -> SpeedBounds:
    a, b = params.a, params.b
    out = SpeedBounds()
    sup_Fv, _ = sup_ratio(calc, "F/v")
    out.lower_universal = (b / a) * max(sup_Fv, 0.0)
    if calc.type_label == "A":
        f0 = calc.fprime0

        def lower_arg(v):
            Fv = calc.F(v)
            return b * b * Fv * Fv / (a * a * v * v) + 2 * Fv / (a * v * v)

        def upper_arg(v):
            fv = np.maximum(calc.f(v), 0.0)
            return b * fv / a + 2 * np.sqrt(fv / (a * v))

        lo2, _ = sup_ratio(calc, lower_arg, limit0=f0 / a)
        out.lower_monostable = math.sqrt(lo2)
        out.upper_monostable, _ = sup_ratio(calc, upper_arg, limit0=2 * math.sqrt(f0 / a))
        out.lower_kpp = 2 * math.sqrt(f0 / a)
        if calc.kpp:
            out.upper_kpp = 2 * math.sqrt(f0 / a) + b * calc.f_max / a
        out.m_control = _minimal_m(calc, params)
        out.upper_m_control = 2 * math.sqrt(out.m_control / a)
        if a == 1.0 and b == 1.0:
            fM, v0 = calc.f_max, calc.v_max
            out.estimate_unit_coeffs = math.sqrt(2 * fM * (fM * v0 + math.sqrt(4 + fM**2 * v0**2)) / v0)
    else:
        D = float(calc.F1 - calc.F(calc.alpha))
        out.lower_threshold = (1.0 / float(R(params, D))) * max(sup_Fv, 0.0) / a if D > 0 else 0.0
        out.upper_threshold = math.sqrt((b / a) ** 2 * D * D + (2 / a) * D) / calc.alpha
    return out


# --- shooting predicates -------------------------------------------------------

def _kernel_a(params, linear):
    return 1.0 if linear else params.a


def _monostable_margin(calc, params, c, controls, linear):
    """E_fast(v_m) - E_back(v_m) at the matching point v_m; >= 0 means c is admissible.

    E_fast is the fast manifold leaving (0, 0), E_back the solution entering (1, 0).
    Solutions cannot cross, so the sign says whether the backward solution enters
    the origin (admissible) or passes above it with y(0) > 0.
    """
    v_m = calc.v_max
    fast = integrate_fast_manifold(calc, params, c, v_m, controls, linear)
    if fast is None:
        return -math.inf, None
    back = integrate_backward(calc, params, c, controls, v_stop=v_m, linear=linear,
                              use_floor=False)
    E_fast = 0.0 if fast.hit_zero_at is not None else float(fast.E[-1])
    return E_fast - float(back.E[0]), back


def _y_of(E, params, linear):
    if linear:
        return E * E
    return E * E / (params.a + math.sqrt(params.a**2 + params.b**2 * E * E))


def matching_gap(calc, params, c, controls=DEFAULT_CONTROLS, linear=False):
    """y+(alpha) - y-(alpha); increasing in c for types B and C."""
    alpha = calc.alpha
    if calc.type_label == "B":
        if linear:
            y_plus = (c * alpha) ** 2
        else:
            y_plus = float(y_max_closed_form(params, c, alpha))
    else:
        fw = integrate_forward(calc, params, c, controls, v_stop=alpha, linear=linear)
        y_plus = _y_of(float(fw.E[-1]), params, linear)
    bw = integrate_backward(calc, params, c, controls, v_stop=alpha, linear=linear)
    y_minus = 0.0 if bw.hit_zero_at is not None else _y_of(float(bw.E[0]), params, linear)
    return y_plus - y_minus


def _linear_bounds(calc):
    out = SpeedBounds()
    sup_fv, _ = sup_ratio(calc, "f/v")
    if calc.type_label == "A":
        out.lower_kpp = 2 * math.sqrt(calc.fprime0)
    else:
        out.lower_threshold = 0.0
    out.upper_m_control = 2 * math.sqrt(max(sup_fv, 0.0))
    return out


def _bisect(pred_hi, lo, hi, controls, history, done=None):
    """Shrink [lo, hi] with pred_hi(hi) True and pred_hi(lo) False."""
    it = 0
    while hi - lo > controls.ctol or (done is not None and not done(lo, hi)):
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if pred_hi(mid):
            hi = mid
        else:
            lo = mid
        history.append((lo, hi))
        it += 1
    return lo, hi, it


def _expand(pred, lo, hi, controls):
    n = 0
    while not pred(hi):
        lo, hi = hi, 2 * hi
        n += 1
        if n > controls.max_expansions:
            raise BracketFailure(f"no admissible speed found up to c={hi:.6g}")
    while lo > 0 and pred(lo):
        hi, lo = lo, 0.5 * lo
        n += 1
        if n > controls.max_expansions:
            raise BracketFailure(f"predicate holds down to c={lo:.6g}")
    return lo, hi


def compute_speed(calc: ReactionCalculus, params: Optional[ModelParams],
                  controls: Controls = DEFAULT_CONTROLS, linear: bool = False) -> SpeedResult:
    """Critical speed of the front; ``linear=True`` solves the linear-diffusion problem."""
    bounds = _linear_bounds(calc) if linear else compute_bounds(calc, params)
    if calc.type_label == "C" and calc.balanced:
        return SpeedResult(0.0, bounds, [(0.0, 0.0)], 0.0, 0, method="balanced")
    history = []
    lo, hi = bounds.lower, bounds.upper
    if not math.isfinite(hi) or hi <= lo:
        hi = max(2 * lo, 1.0)

    if calc.type_label == "A":
        def admissible(c):
            return _monostable_margin(calc, params, c, controls, linear)[0] >= 0.0

        probe = lo + controls.ctol
        if admissible(probe):
            margin, sol = _monostable_margin(calc, params, probe, controls, linear)
            history.append((lo, probe))
            return SpeedResult(lo, bounds, history, margin, 1, method="linear-determinacy",
                               slope_residual=_slope_residual(calc, params, lo, controls, linear))
        lo, hi = _expand(admissible, probe, hi, controls)
        history.append((lo, hi))
        lo, hi, it = _bisect(admissible, lo, hi, controls, history)
        margin, sol = _monostable_margin(calc, params, hi, controls, linear)
        c_star = 0.5 * (lo + hi)
        return SpeedResult(c_star, bounds, history, margin, it + 1,
                           slope_residual=_slope_residual(calc, params, c_star, controls, linear))

    tiny = 1e-12
    lo = max(lo, tiny)

    def positive(c):
        return matching_gap(calc, params, c, controls, linear) > 0.0

    lo, hi = _expand(positive, lo, hi, controls)
    history.append((lo, hi))

    def converged(lo_, hi_):
        if hi_ - lo_ > controls.ctol:
            return False
        gap = abs(matching_gap(calc, params, 0.5 * (lo_ + hi_), controls, linear))
        return gap < controls.rtol_match

    lo, hi, it = _bisect(positive, lo, hi, controls, history, done=converged)
    c_star = 0.5 * (lo + hi)
    residual = abs(matching_gap(calc, params, c_star, controls, linear))
    return SpeedResult(c_star, bounds, history, residual, it + 1)


def _slope_residual(calc, params, c, controls, linear):
    """Relative |x^2 - c a x + a f'(0)| for x = E/v of the backward solution at v_floor.

    Diagnostic only; None when the integration toward v = 0 is too stiff.
    """
    a = _kernel_a(params, linear)
    try:
        sol = integrate_backward(calc, params, c, controls, v_stop=controls.v_floor,
                                 linear=linear, use_floor=False)
    except StiffnessFailure:
        return None
    x = float(sol.E[0] / sol.v[0])
    scale = x * x + c * a * x + a * abs(calc.fprime0)
    return abs(x * x - c * a * x + a * calc.fprime0) / scale if scale > 0 else 0.0


# --- limit predictions ---------------------------------------------------------

@dataclass(frozen=True)
class LimitSpeed:
    """Predicted behaviour of c* along a parameter path.

    ``trend`` is one of "finite", "zero", "infinity", "fixed"; ``order`` is the
    exponent of the rate in the path parameter when one is known.
    """

    trend: str
    value: Optional[float] = None
    order: Optional[float] = None
    note: str = ""


def limit_speed_prediction(calc: ReactionCalculus, regime, ratio: float = 1.0,
                           controls: Controls = DEFAULT_CONTROLS) -> LimitSpeed:
    """Limit of c* in a parameter-plane corner.

    ``regime`` is a :class:`bornfront.profile.Regime` or its key. ``ratio`` is the
    limiting b/a in the singular-perturbation corner.
    """
    key = getattr(regime, "key", regime)
    if calc.type_label == "C" and calc.balanced and key != "fixed":
        return LimitSpeed("finite", 0.0, note="balanced reaction: stationary front")
    if key in ("diffusion-vanishes", "ratio-diverges"):
        return LimitSpeed("infinity", math.inf, order=1.0)
    if key == "linear-limit":
        if calc.kpp:
            return LimitSpeed("finite", 2 * math.sqrt(calc.fprime0), note="KPP")
        res = compute_speed(calc, None, controls, linear=True)
        return LimitSpeed("finite", res.c_star, note="linear-diffusion critical speed")
    if key == "heaviside":
        return LimitSpeed("zero", 0.0, order=0.5)
    if key == "singular-perturbation":
        if calc.type_label == "C":
            raise NoPrediction("non-balanced bistable reaction: the limit speed is not established")
        if calc.v_plus is None:
            raise NoPrediction("no root of F(v) = v f(v) in (0, 1)")
        if calc.v_plus >= 1.0:
            return LimitSpeed("finite", ratio * calc.F1, note="fully piecewise linear limit")
        return LimitSpeed("finite", ratio * float(calc.f(calc.v_plus)))
    if key == "open":
        return LimitSpeed("zero", 0.0, note="limit profile unresolved")
    if key == "fixed":
        return LimitSpeed("fixed", note="no limit: parameters stay in a compact set")
    raise NoPrediction(f"no prediction for regime {key!r}")
