"""Front profiles v(z), closed-form limit profiles and the (a, b) regime table."""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, DomainMismatch, NoPrediction, NotAdmissible, QuadratureFailure
from .reaction import ReactionCalculus
from .reduction import (DEFAULT_CONTROLS, Controls, ModelParams, ReductionSolution,
                        integrate_backward, integrate_forward, join)
from .speed import compute_speed

N_POINTS = 512
TRUNCATION = (1e-4, 1e-4)


def _newton_invert(spline, dspline, v_knots, z_knots, targets, iters=30):
    """Solve spline(v) = target for v on a monotone spline."""
    v = np.interp(targets, z_knots, v_knots)
    idx = np.clip(np.searchsorted(z_knots, targets) - 1, 0, len(z_knots) - 2)
    lo, hi = v_knots[idx], v_knots[idx + 1]
    for _ in range(iters):
        g = spline(v) - targets
        lo = np.where(g < 0, v, lo)
        hi = np.where(g > 0, v, hi)
        step = g / dspline(v)
        v_new = v - step
        # fall back to bisection when Newton leaves the bracket
        bad = ~((v_new > lo) & (v_new < hi)) | ~np.isfinite(v_new)
        v_new = np.where(bad, 0.5 * (lo + hi), v_new)
        if np.max(np.abs(v_new - v)) < 1e-15:
            v = v_new
            break
        v = v_new
    return v


@dataclass
class FrontProfile:
    """Sampled monotone profile on a uniform z grid with exponential tails beyond it."""

    c: float
    params: Optional[ModelParams]
    V0: float
    z: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    truncation: Tuple[float, float] = TRUNCATION
    tail_left: Optional[float] = None
    tail_right: Optional[float] = None
    linear: bool = False
    _spline: Optional[CubicHermiteSpline] = field(default=None, repr=False)
    _source: Optional[tuple] = field(default=None, repr=False)

    @property
    def z_range(self):
        return float(self.z[0]), float(self.z[-1])

    @property
    def max_slope(self) -> float:
        return float(np.max(self.dv))

    def __call__(self, z):
        if self._spline is None:
            self._spline = CubicHermiteSpline(self.z, self.v, self.dv, extrapolate=False)
        z = np.asarray(z, dtype=float)
        out = self._spline(np.clip(z, self.z[0], self.z[-1]))
        lam, mu = self.tail_left, self.tail_right
        left, right = z < self.z[0], z > self.z[-1]
        if np.any(left):
            arg = np.minimum((lam or 0.0) * (z - self.z[0]), 0.0)
            out = np.where(left, self.v[0] * np.exp(arg), out)
        if np.any(right):
            arg = np.minimum(-(mu or 0.0) * (z - self.z[-1]), 0.0)
            out = np.where(right, 1.0 - (1.0 - self.v[-1]) * np.exp(arg), out)
        return out if out.ndim else float(out)

    def exact(self, z):
        """(v, v') at arbitrary z inside the sampled range, straight from the reduction."""
        if self._source is None:
            raise ValueError("profile was not built from a reduction")
        reduction, shift = self._source
        zs = reduction._spline("z")
        z = np.asarray(z, dtype=float)
        v = _newton_invert(lambda x: zs(x) - shift, zs.derivative(), reduction.v,
                           reduction.z - shift, z)
        return v, np.asarray(reduction.slope_at(v), dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z", "v", "dv"])
        for row in zip(self.z, self.v, self.dv):
            w.writerow([f"{x:.9g}" for x in row])
        return buf.getvalue()


def reconstruct_profile(reduction: ReductionSolution, V0: float,
                        controls: Controls = DEFAULT_CONTROLS, n_points: int = N_POINTS,
                        truncation: Tuple[float, float] = TRUNCATION) -> FrontProfile:
    """Invert z(v) = int_{V0}^{v} ds / v'(s) onto a uniform z grid."""
    if reduction.hit_zero_at is not None:
        raise NotAdmissible(f"reduction vanishes at interior v={reduction.hit_zero_at:.6g}")
    d0, d1 = truncation
    lo_v, hi_v = d0, 1.0 - d1
    v_min, v_max = reduction.v_range
    if v_min > lo_v * (1 + 1e-12) or v_max < hi_v:
        raise DomainError(f"reduction covers [{v_min:.3g}, {v_max:.3g}], need [{lo_v}, {hi_v}]")
    zs = reduction._spline("z")
    dzs = zs.derivative()
    z_knots = reduction.z - float(zs(V0))
    if not (np.all(np.isfinite(z_knots)) and np.all(np.diff(z_knots) > 0)):
        raise QuadratureFailure("z(v) is not strictly increasing")
    z_shift = float(zs(V0))
    z_lo = float(zs(lo_v)) - z_shift
    z_hi = float(zs(hi_v)) - z_shift
    grid = np.linspace(z_lo, z_hi, n_points)
    v = _newton_invert(lambda x: zs(x) - z_shift, dzs, reduction.v, z_knots, grid)
    v[0], v[-1] = lo_v, hi_v
    dv = np.asarray(reduction.slope_at(v), dtype=float)
    if not np.all(np.isfinite(v)) or not np.all(np.isfinite(dv)):
        raise QuadratureFailure("profile inversion produced non-finite values")
    return FrontProfile(reduction.c, reduction.params, V0, grid, v, dv, truncation,
                        tail_left=float(dv[0] / v[0]), tail_right=float(dv[-1] / (1 - v[-1])),
                        linear=reduction.linear, _source=(reduction, z_shift))


def normalization(calc: ReactionCalculus) -> float:
    return calc.V0


def critical_reduction(calc: ReactionCalculus, params: Optional[ModelParams], c: float,
                       controls: Controls = DEFAULT_CONTROLS, linear: bool = False,
                       truncation: Tuple[float, float] = TRUNCATION) -> ReductionSolution:
    """Reduction at speed c covering [truncation[0], 1 - truncation[1]]."""
    if calc.type_label == "A":
        return integrate_backward(calc, params, c, controls, v_stop=truncation[0],
                                  linear=linear, use_floor=False)
    fw = integrate_forward(calc, params, c, controls, v_stop=calc.alpha, linear=linear)
    bw = integrate_backward(calc, params, c, controls, v_stop=calc.alpha, linear=linear)
    return join(fw, bw)


def front_profile(calc: ReactionCalculus, params: Optional[ModelParams],
                  controls: Controls = DEFAULT_CONTROLS, linear: bool = False,
                  n_points: int = N_POINTS, speed=None):
    """Critical speed and its reconstructed profile as ``(SpeedResult, FrontProfile)``."""
    if speed is None:
        speed = compute_speed(calc, params, controls, linear=linear)
    red = critical_reduction(calc, params, speed.c_star, controls, linear)
    return speed, reconstruct_profile(red, calc.V0, controls, n_points)


def linear_critical(calc: ReactionCalculus, controls: Controls = DEFAULT_CONTROLS,
                    n_points: int = N_POINTS):
    """Critical speed and profile of the linear-diffusion equation v'' - c v' + f(v) = 0."""
    speed, prof = front_profile(calc, None, controls, linear=True, n_points=n_points)
    if calc.kpp and abs(speed.c_star - 2 * math.sqrt(calc.fprime0)) >= 1e-3:
        raise AssertionError("KPP reaction: linear critical speed differs from 2 sqrt(f'(0))")
    return speed.c_star, prof


def _phi(profile, dv):
    if profile.linear:
        return dv
    a, b = profile.params.a, profile.params.b
    return dv / np.sqrt(a * a - b * b * dv * dv)


def profile_residual(profile: FrontProfile, calc: ReactionCalculus, n: int = 200,
                     rel_step: float = 1e-3) -> np.ndarray:
    """Residual of (phi(v'))' - c v' + f(v) at ``n`` interior sample points.

    The derivative is a 5-point finite difference in z with step ``rel_step`` times
    the local length scale v'/|v''| (capped by the sample spacing).
    """
    idx = np.linspace(2, len(profile.z) - 3, n).round().astype(int)
    zc = profile.z[idx]
    v, dv = profile.exact(zc)
    dz = profile.z[1] - profile.z[0]
    # local length: how far z moves while v changes by a few percent of v' scale
    h = np.minimum(rel_step * np.maximum(np.minimum(v, 1 - v), 1e-12) / np.maximum(dv, 1e-300),
                   0.25 * dz)
    h = np.maximum(h, 1e-7 * max(1.0, abs(zc).max()))
    phis = [_phi(profile, profile.exact(zc + k * h)[1]) for k in (-2, -1, 1, 2)]
    dphi = (phis[0] - 8 * phis[1] + 8 * phis[2] - phis[3]) / (12 * h)
    return dphi - profile.c * dv + calc.f(v)


# --- limit profiles --------------------------------------------------------------

def _inviscid_samples(calc: ReactionCalculus, c_bar: float, z_ref: float, v_ref: float,
                      v_lo: float = 1e-6, v_hi: float = 1.0 - 1e-6, n: int = 600):
    """Samples (z, v) of c_bar v' = f(v) through (z_ref, v_ref) on the range where f > 0.

    z(v) = z_ref + c_bar * int_{v_ref}^{v} ds / f(s) by 10-point Gauss-Legendre panels,
    clustered toward both ends where 1/f blows up.
    """
    lo = (calc.alpha if calc.type_label != "A" else 0.0) + v_lo
    t = 0.5 - 0.5 * np.cos(np.pi * np.linspace(0.0, 1.0, n))
    vs = np.concatenate([lo + (v_hi - lo) * t,
                         lo - v_lo + np.geomspace(v_lo, 1e-2, 60),
                         1.0 - np.geomspace(1.0 - v_hi, 1e-2, 60), [v_ref]])
    vs = np.unique(vs[(vs >= lo) & (vs <= v_hi)])
    x, w = np.polynomial.legendre.leggauss(10)
    mid, half = 0.5 * (vs[:-1] + vs[1:]), 0.5 * (vs[1:] - vs[:-1])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    inc = (half[:, None] * w[None, :] * c_bar / calc.f(nodes)).sum(axis=1)
    z = np.concatenate([[0.0], np.cumsum(inc)])
    j = int(np.argmin(np.abs(vs - v_ref)))
    return z - z[j] + z_ref, vs


@dataclass
class LimitProfile:
    """Closed-form limit object with an evaluator ``v(z)``."""

    kind: str
    parameters: dict
    evaluator: Callable = field(repr=False)
    domain: Tuple[float, float] = (-math.inf, math.inf)

    def __call__(self, z):
        out = self.evaluator(np.asarray(z, dtype=float))
        return out if np.ndim(out) else float(out)

    def to_record(self) -> dict:
        return {"kind": self.kind, **self.parameters}

    def to_csv(self, z) -> str:
        z = np.asarray(z, dtype=float)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z", "v"])
        for zi, vi in zip(z, self(z)):
            w.writerow([f"{zi:.9g}", f"{vi:.9g}"])
        return buf.getvalue()


def constant(V0: float) -> LimitProfile:
    return LimitProfile("Constant", {"V0": V0}, lambda z: np.full_like(z, V0, dtype=float))


def heaviside(V0: float = 0.5) -> LimitProfile:
    return LimitProfile("Heaviside", {"V0": V0},
                        lambda z: np.where(z > 0, 1.0, np.where(z < 0, 0.0, V0)))


def piecewise_linear(z_bar: float, v_bar: float, slope: float = 1.0,
                     kind: str = "PiecewiseLinear") -> LimitProfile:
    """clip(v_bar + slope (z - z_bar), 0, 1)."""
    return LimitProfile(kind, {"z_bar": z_bar, "v_bar": v_bar, "slope": slope},
                        lambda z: np.clip(v_bar + slope * (z - z_bar), 0.0, 1.0))


def _sampled_evaluator(z, v, dv, left_rate, right_rate):
    spl = CubicHermiteSpline(z, v, dv)

    def ev(q):
        out = spl(np.clip(q, z[0], z[-1]))
        out = np.where(q < z[0], v[0] * np.exp(left_rate * (q - z[0])), out)
        return np.where(q > z[-1], 1.0 - (1.0 - v[-1]) * np.exp(-right_rate * (q - z[-1])), out)
    return ev


def inviscid(calc: ReactionCalculus, c_bar: float, z_ref: float, v_ref: float) -> LimitProfile:
    """Solution of c_bar v' = f(v) with v(z_ref) = v_ref, sampled on [1e-6, 1 - 1e-6]."""
    z, v = _inviscid_samples(calc, c_bar, z_ref, v_ref)
    dv = calc.f(v) / c_bar
    left = max(calc.fprime0, 0.0) / c_bar if calc.type_label == "A" else 0.0
    ev = _sampled_evaluator(z, v, dv, left, -calc.fprime1 / c_bar)
    if calc.type_label != "A":
        # below alpha the inviscid equation has no increasing solution
        ev0 = ev
        z_a = float(z[0])
        ev = lambda q: np.where(q < z_a, calc.alpha, ev0(q))  # noqa: E731
    return LimitProfile("Inviscid", {"c_bar": c_bar, "z_ref": z_ref, "v_ref": v_ref}, ev)


def glued(calc: ReactionCalculus, V0: float, ratio: float = 1.0) -> LimitProfile:
    """Linear piece of slope 1/ratio up to v_plus, then the inviscid front, glued C^1."""
    vp = calc.v_plus
    if vp is None:
        raise NoPrediction("F(v) = v f(v) has no root in (0, 1)")
    slope = 1.0 / ratio
    c_bar = ratio * float(calc.f(vp))
    if vp >= V0:
        z_glue = (vp - V0) / slope
        lin = piecewise_linear(0.0, V0, slope)
        inv = inviscid(calc, c_bar, z_glue, vp)
    else:
        inv = inviscid(calc, c_bar, 0.0, V0)
        zs, vs = _inviscid_samples(calc, c_bar, 0.0, V0)
        z_glue = float(np.interp(vp, vs, zs))
        lin = piecewise_linear(z_glue, vp, slope)

    def ev(z):
        return np.where(z <= z_glue, lin(z), inv(z))

    return LimitProfile("GluedLI", {"v_plus": vp, "c_bar": c_bar, "z_glue": z_glue,
                                    "V0": V0, "slope": slope}, ev)


def glue_slope_mismatch(calc: ReactionCalculus) -> float:
    """|inviscid slope at the glue - 1| = |f(v_plus) v_plus / F(v_plus) - 1| for a = b."""
    vp = calc.v_plus
    return abs(float(calc.f(vp)) * vp / float(calc.F(vp)) - 1.0)


def steady_balanced(alpha: float, slope: float = 1.0) -> LimitProfile:
    lp = piecewise_linear(0.0, alpha, slope, kind="SteadyBalanced")
    return lp


def linear_critical_limit(calc: ReactionCalculus, controls: Controls = DEFAULT_CONTROLS):
    c_L, prof = linear_critical(calc, controls)
    return LimitProfile("LinearCritical", {"c_L": c_L}, prof)


def from_samples(z, v, kind: str = "Sampled") -> LimitProfile:
    z = np.asarray(z, dtype=float)
    v = np.asarray(v, dtype=float)
    return LimitProfile(kind, {}, lambda q: np.interp(q, z, v), (float(z[0]), float(z[-1])))


# --- regime table ----------------------------------------------------------------

TRENDS = ("zero", "bounded", "infinity")


@dataclass(frozen=True)
class Regime:
    """One cell of the (a, b) parameter-plane table."""

    key: str
    speed_trend: str
    profile_kinds: tuple
    open: bool = False
    description: str = ""


def classify_regime(trend_a: str, trend_b: str, ratio_trend: Optional[str] = None,
                    b2_over_a_trend: Optional[str] = None) -> Regime:
    """Map the trends of a, b (and of b/a, b^2/a when both diverge) to a regime cell."""
    for name, t in (("trend_a", trend_a), ("trend_b", trend_b)):
        if t not in TRENDS:
            raise DomainError(f"{name} must be one of {TRENDS}, got {t!r}")
    if trend_a == "zero":
        return Regime("diffusion-vanishes", "infinity", ("Constant",),
                      description="a -> 0: speed diverges, profile flattens to V0")
    if trend_a == "bounded":
        if trend_b == "zero":
            return Regime("linear-limit", "c_L", ("LinearCritical",),
                          description="b -> 0: linear-diffusion critical front")
        if trend_b == "bounded":
            return Regime("fixed", "fixed", (), description="parameters stay in a compact set")
        return Regime("ratio-diverges", "infinity", ("Constant",),
                      description="b/a -> infinity: speed diverges, profile flattens to V0")
    # a -> infinity
    if trend_b in ("zero", "bounded"):
        return Regime("heaviside", "zero", ("Heaviside",),
                      description="b^2/a -> 0: speed vanishes, step profile")
    if ratio_trend is None:
        raise DomainError("a, b -> infinity needs the trend of b/a")
    if ratio_trend == "infinity":
        return Regime("ratio-diverges", "infinity", ("Constant",),
                      description="b/a -> infinity: speed diverges, profile flattens to V0")
    if ratio_trend == "bounded":
        return Regime("singular-perturbation", "finite", ("GluedLI", "PiecewiseLinear"),
                      description="b/a bounded: finite positive limit speed, sharpened profile")
    if b2_over_a_trend is None:
        raise DomainError("b/a -> 0 with a, b -> infinity needs the trend of b^2/a")
    if b2_over_a_trend == "zero":
        return Regime("heaviside", "zero", ("Heaviside",),
                      description="b^2/a -> 0: speed vanishes, step profile")
    return Regime("open", "zero", (), open=True,
                  description="b/a -> 0 with b^2/a not vanishing: limit profile unresolved")


def make_limit_profile(calc: ReactionCalculus, regime, V0: Optional[float] = None,
                       ratio: float = 1.0, controls: Controls = DEFAULT_CONTROLS) -> LimitProfile:
    key = getattr(regime, "key", regime)
    V0 = calc.V0 if V0 is None else V0
    if key in ("diffusion-vanishes", "ratio-diverges"):
        return constant(V0)
    if key == "heaviside":
        return heaviside(V0)
    if key == "linear-limit":
        return linear_critical_limit(calc, controls)
    if key == "singular-perturbation":
        if calc.type_label == "C":
            if calc.balanced:
                return steady_balanced(calc.alpha, 1.0 / ratio)
            raise NoPrediction("non-balanced bistable reaction: limit profile beyond v_star is "
                               "not established; see limit_candidates")
        if not calc.assumption_F:
            raise NoPrediction("f has more than one local maximum on its positive range")
        return glued(calc, V0, ratio)
    raise NoPrediction(f"no limit profile for regime {key!r}")


def limit_candidates(calc: ReactionCalculus, V0: Optional[float] = None, ratio: float = 1.0):
    """Both candidate limits for a non-balanced bistable reaction (fully linear or glued)."""
    V0 = calc.V0 if V0 is None else V0
    out = [piecewise_linear(0.0, V0, 1.0 / ratio)]
    if calc.v_plus is not None and calc.v_plus < 1.0:
        out.append(glued(calc, V0, ratio))
    return out


def distance_to_limit(profile, limit, window: Tuple[float, float], n: int = 2001) -> float:
    """Sup-norm distance between a profile and a limit object on a z window."""
    z0, z1 = window
    if not z1 > z0:
        raise DomainMismatch("empty window")
    for obj in (profile, limit):
        dom = getattr(obj, "domain", (-math.inf, math.inf))
        if z0 < dom[0] - 1e-12 or z1 > dom[1] + 1e-12:
            raise DomainMismatch(f"window [{z0}, {z1}] leaves domain {dom}")
    z = np.linspace(z0, z1, n)
    return float(np.max(np.abs(np.asarray(profile(z)) - np.asarray(limit(z)))))
