"""First-order reduction y' = c*a*R(y) - f(v) with y(0) = y(1) = 0.

Integration runs in the variable E = sqrt(y(2a + b^2 y)), which removes the
square-root singularity of R at y = 0. The linear-diffusion reduction
y' = 2c*sqrt(y) - 2f(v) is the same kernel with a = 1, b = 0 (then E = sqrt(y)).
"""

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import _stepper
from .errors import DomainError, StiffnessFailure
from .reaction import ReactionCalculus


@dataclass(frozen=True)
class ModelParams:
    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a > 0):
            raise DomainError(f"a must be positive, got {self.a}")
        if not (np.isfinite(self.b) and self.b > 0):
            raise DomainError(f"b must be positive, got {self.b}")

    @property
    def max_slope(self) -> float:
        return self.a / self.b

    @property
    def ratio(self) -> float:
        return self.b / self.a

    @property
    def y_scale(self) -> float:
        return max(1.0, self.a / self.b**2)


@dataclass(frozen=True)
class Controls:
    """Numerical tolerances shared by the integrators and the speed search."""

    rtol: float = 1e-9
    atol: float = 1e-12
    h_min: float = 1e-13
    h0: float = 1e-4
    h_max: float = 0.01
    h_rel: float = 0.05
    delta_start: float = 1e-6
    y_floor: float = 1e-11
    v_floor: float = 1e-4
    ctol: float = 1e-6
    rtol_match: float = 1e-7
    max_steps: int = 200_000
    max_expansions: int = 60

    def refined(self, factor: float = 10.0) -> "Controls":
        return replace(self, rtol=self.rtol / factor, atol=self.atol / factor)


DEFAULT_CONTROLS = Controls()


def R(params: ModelParams, y):
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("R is defined for y >= 0 only")
    a, b = params.a, params.b
    out = np.sqrt(y * (2 * a + b * b * y)) / (a + b * b * y)
    return out if out.ndim else float(out)


def E_transform(params: ModelParams, y):
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("E is defined for y >= 0 only")
    out = np.sqrt(y * (2 * params.a + params.b**2 * y))
    return out if out.ndim else float(out)


def E_inverse(params: ModelParams, E):
    """Cancellation-free form of (-a + sqrt(a^2 + b^2 E^2)) / b^2."""
    E = np.asarray(E, dtype=float)
    if np.any(E < 0):
        raise DomainError("E must be nonnegative")
    a, b = params.a, params.b
    out = E * E / (a + np.sqrt(a * a + b * b * E * E))
    return out if out.ndim else float(out)


def y_max_closed_form(params: ModelParams, c: float, v):
    """Maximal forward solution when f vanishes: (a/b^2)(sqrt(1 + c^2 b^2 v^2) - 1)."""
    v = np.asarray(v, dtype=float)
    a, b = params.a, params.b
    k2v2 = (c * b * v) ** 2
    out = (a / b**2) * k2v2 / (np.sqrt(1.0 + k2v2) + 1.0)
    return out if out.ndim else float(out)


def _closed_form_z(params: ModelParams, c: float, v):
    """Position along the front on the zero-reaction stretch, up to a constant."""
    a, b = params.a, params.b
    k2v2 = (c * b * v) ** 2
    S = np.sqrt(1.0 + k2v2)
    return (S + 0.5 * np.log(k2v2 / (S + 1.0) ** 2)) / (a * c)


@dataclass
class ReductionSolution:
    """Sampled solution in (v, E, z) with exact slopes at every knot.

    ``z`` is the front coordinate up to an additive constant (dz/dv = 1/v').
    """

    c: float
    params: Optional[ModelParams]
    branch: str
    v: np.ndarray
    E: np.ndarray
    z: np.ndarray
    dE: np.ndarray
    dz: np.ndarray
    hit_zero_at: Optional[float] = None
    linear: bool = False
    status: int = 0
    _splines: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        order = np.argsort(self.v, kind="stable")
        for name in ("v", "E", "z", "dE", "dz"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float)[order])
        keep = np.concatenate([[True], np.diff(self.v) > 0])
        for name in ("v", "E", "z", "dE", "dz"):
            setattr(self, name, getattr(self, name)[keep])

    @property
    def y(self) -> np.ndarray:
        return self._E_to_y(self.E)

    @property
    def v_range(self):
        return float(self.v[0]), float(self.v[-1])

    def _E_to_y(self, E):
        E = np.maximum(np.asarray(E, dtype=float), 0.0)
        if self.linear:
            return E * E
        return E_inverse(self.params, E)

    def _spline(self, name):
        if name not in self._splines:
            vals, slopes = (self.E, self.dE) if name == "E" else (self.z, self.dz)
            self._splines[name] = CubicHermiteSpline(self.v, vals, slopes, extrapolate=False)
        return self._splines[name]

    def E_at(self, v):
        return self._spline("E")(np.asarray(v, dtype=float))

    def y_at(self, v):
        """Interpolated y; NaN outside the integrated range."""
        E = self.E_at(v)
        out = np.where(np.isnan(E), np.nan, self._E_to_y(np.nan_to_num(E)))
        return out if np.ndim(out) else float(out)

    def z_at(self, v):
        return self._spline("z")(np.asarray(v, dtype=float))

    def slope_at(self, v):
        """Profile slope v' at value v."""
        E = self.E_at(v)
        if self.linear:
            return E
        y = self._E_to_y(np.nan_to_num(E))
        a, b = self.params.a, self.params.b
        return a * E / (a + b * b * y)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["v", "y"])
        for vi, yi in zip(self.v, self.y):
            w.writerow([f"{vi:.9g}", f"{yi:.9g}"])
        return buf.getvalue()


def _kernel_ab(params, linear):
    return (1.0, 0.0) if linear else (params.a, params.b)


def _E_floor(params, controls, linear):
    y_floor = controls.y_floor * (1.0 if linear else params.y_scale)
    if linear:
        return float(np.sqrt(y_floor))
    return float(E_transform(params, y_floor))


def _run(calc, params, c, v0, E0, v_end, controls, linear, use_z=True, use_floor=True):
    a, b = _kernel_ab(params, linear)
    breaks, coefs = calc.kernel_arrays()
    knots, n, status = _stepper.integrate(
        float(v0), float(E0), float(v_end), float(c), a, b, breaks, coefs,
        controls.rtol, controls.atol, min(controls.h0, abs(v_end - v0)), controls.h_min,
        controls.h_max, controls.h_rel,
        _E_floor(params, controls, linear) if use_floor else 0.0, use_z, controls.max_steps)
    if status in (_stepper.STEP_UNDERFLOW, _stepper.MAX_STEPS):
        last_v = float(knots[0, n - 1])
        reason = "step underflow" if status == _stepper.STEP_UNDERFLOW else "step budget exhausted"
        raise StiffnessFailure(f"{reason} at v={last_v:.6g} (c={c:.9g})", last_v=last_v)
    return knots, status


def _positive_root(p, q):
    """Positive root of x^2 + p x + q = 0 with q < 0, computed without cancellation."""
    disc = np.sqrt(p * p - 4 * q)
    return (-p + disc) / 2 if p < 0 else -2 * q / (p + disc)


def _slope_near_one(calc, delta):
    k1 = -calc.fprime1
    if k1 <= 0:
        k1 = float(calc.f(1.0 - delta)) / delta
    return k1


def integrate_backward(calc: ReactionCalculus, params: ModelParams, c: float,
                       controls: Controls = DEFAULT_CONTROLS, v_stop: float = 0.0,
                       linear: bool = False, use_floor: bool = True) -> ReductionSolution:
    """Integrate from v = 1 down to ``v_stop`` along the stable direction of (1, 0).

    With f(1 - w) ~ k1 w the seed is E = x w, x the positive root of
    x^2 + c a x - a k1 = 0. ``use_floor=False`` disables the positivity-floor event.
    """
    if c < 0:
        raise DomainError("c must be nonnegative")
    a, _ = _kernel_ab(params, linear)
    d = controls.delta_start
    k1 = _slope_near_one(calc, d)
    x = _positive_root(c * a, -a * k1)
    knots, status = _run(calc, params, c, 1.0 - d, x * d, v_stop, controls, linear,
                         use_floor=use_floor)
    hit = None
    if status == _stepper.HIT_FLOOR:
        v_hit = float(knots[0, -1])
        if v_hit > controls.v_floor:
            hit = v_hit
    sol = ReductionSolution(c, params, "backward-from-1", knots[0], knots[1], knots[2],
                            knots[3], knots[4], hit, linear)
    sol.status = int(status)
    return sol


def integrate_forward(calc: ReactionCalculus, params: ModelParams, c: float,
                      controls: Controls = DEFAULT_CONTROLS, v_stop: Optional[float] = None,
                      use_closed_form: bool = True, linear: bool = False) -> ReductionSolution:
    """Integrate from v = 0 upward to ``v_stop`` (default: alpha) for types B and C."""
    if calc.type_label == "A":
        raise DomainError("forward integration is only defined for types B and C")
    if c < 0:
        raise DomainError("c must be nonnegative")
    if calc.type_label == "B" and c <= 0:
        raise DomainError("type B forward integration needs c > 0")
    alpha = calc.alpha
    v_stop = alpha if v_stop is None else float(v_stop)
    a, b = _kernel_ab(params, linear)
    d = controls.delta_start

    if calc.type_label == "B":
        if use_closed_form:
            vs = np.geomspace(d, alpha, 400)
            vs[-1] = alpha
            E = a * c * vs
            if linear:
                z = np.log(vs) / c
                dz = 1.0 / (c * vs)
            else:
                z = _closed_form_z(params, c, vs)
                dz = np.sqrt(1.0 + (c * b * vs) ** 2) / (a * c * vs)
            head = np.vstack([vs, E, z, np.full_like(vs, a * c), dz])
            if v_stop <= alpha:
                keep = vs <= v_stop
                head = head[:, keep]
                if head[0, -1] < v_stop:
                    tail_v = np.array([v_stop])
                    tail = np.vstack([tail_v, a * c * tail_v,
                                      (np.log(tail_v) / c) if linear
                                      else _closed_form_z(params, c, tail_v),
                                      [a * c],
                                      (1.0 / (c * tail_v)) if linear else
                                      np.sqrt(1.0 + (c * b * tail_v) ** 2) / (a * c * tail_v)])
                    head = np.hstack([head, tail])
                knots = head
            else:
                rest, _ = _run(calc, params, c, alpha, a * c * alpha, v_stop, controls, linear)
                rest[2] += head[2, -1]
                knots = np.hstack([head, rest[:, 1:]])
        else:
            knots, _ = _run(calc, params, c, d, a * c * d, v_stop, controls, linear)
    else:
        k0 = -calc.fprime0
        if k0 <= 0:
            k0 = -float(calc.f(d)) / d
        x = _positive_root(-c * a, -a * k0)
        knots, _ = _run(calc, params, c, d, x * d, v_stop, controls, linear)
    return ReductionSolution(c, params, "forward-from-0", knots[0], knots[1], knots[2],
                             knots[3], knots[4], None, linear)


def fast_manifold_seed(calc: ReactionCalculus, a: float, c: float):
    """Coefficients (x, e) of E = x v + e v^2 + ... on the fast manifold entering (0, 0).

    ``x`` is the larger root of x^2 - c a x + a f'(0) = 0; ``None`` when the roots
    are complex (no front enters the origin monotonically).
    """
    f0 = calc.fprime0
    disc = (c * a) ** 2 - 4 * a * f0
    if disc < 0:
        return None
    x = 0.5 * (c * a + np.sqrt(disc))
    f2 = 0.5 * float(calc._polys[0].deriv(2)(0.0))
    denom = 2 * x * x - a * f0
    e = -a * f2 * x / denom if denom > 0 else 0.0
    return float(x), float(e)


def integrate_fast_manifold(calc: ReactionCalculus, params: Optional[ModelParams], c: float,
                            v_stop: float, controls: Controls = DEFAULT_CONTROLS,
                            linear: bool = False) -> Optional[ReductionSolution]:
    """Forward solution leaving (0, 0) along the fast direction (monostable reactions).

    Returns None when the linearization at 0 has complex roots. Integration in this
    direction is stable: nearby solutions are attracted to the fast manifold.
    """
    a, _ = _kernel_ab(params, linear)
    seed = fast_manifold_seed(calc, a, c)
    if seed is None:
        return None
    x, e = seed
    d = controls.delta_start
    E0 = x * d + e * d * d
    if E0 <= 0:
        E0 = x * d
    try:
        knots, status = _run(calc, params, c, d, E0, v_stop, controls, linear)
    except StiffnessFailure as exc:
        # the manifold collapses onto E = 0 right after the seed
        v = np.array([d, exc.last_v if exc.last_v else d])
        return ReductionSolution(c, params, "forward-from-0", v[:1], [E0], [0.0], [0.0],
                                 [0.0], float(v[-1]), linear)
    hit = float(knots[0, -1]) if status == _stepper.HIT_FLOOR else None
    sol = ReductionSolution(c, params, "forward-from-0", knots[0], knots[1], knots[2],
                            knots[3], knots[4], hit, linear)
    sol.status = int(status)
    return sol


def join(forward: ReductionSolution, backward: ReductionSolution) -> ReductionSolution:
    """Glue a forward branch on [0, alpha] to a backward branch on [alpha, 1]."""
    v_m = forward.v[-1]
    fz = forward.z
    bmask = backward.v > v_m
    shift = fz[-1] - float(backward.z_at(v_m))
    return ReductionSolution(
        backward.c, backward.params, "joined",
        np.concatenate([forward.v, backward.v[bmask]]),
        np.concatenate([forward.E, backward.E[bmask]]),
        np.concatenate([fz, backward.z[bmask] + shift]),
        np.concatenate([forward.dE, backward.dE[bmask]]),
        np.concatenate([forward.dz, backward.dz[bmask]]),
        None, backward.linear)
