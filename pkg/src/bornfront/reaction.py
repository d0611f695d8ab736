"""Reaction terms on [0, 1]: definitions, A/B/C classification and derived scalars."""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import bisect, minimize_scalar

from .errors import DomainError, HypothesisHViolated, NotClassifiable

ZERO_TOL = 1e-13
ROOT_TOL = 1e-12


@dataclass(frozen=True)
class ReactionSpec:
    """A piecewise polynomial reaction ``f``.

    ``pieces[k]`` holds increasing-power coefficients in the absolute variable ``s``
    and is used on ``[breaks[k], breaks[k+1]]``.
    """

    name: str
    breaks: tuple
    pieces: tuple
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.breaks) != len(self.pieces) + 1:
            raise ValueError("need len(breaks) == len(pieces) + 1")
        if self.breaks[0] != 0.0 or self.breaks[-1] != 1.0:
            raise ValueError("breaks must start at 0 and end at 1")
        if any(b1 <= b0 for b0, b1 in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breaks must be strictly increasing")


def polynomial(coeffs: Sequence[float], name: str = "polynomial") -> ReactionSpec:
    """Single polynomial with increasing-power coefficients."""
    return ReactionSpec(name, (0.0, 1.0), (tuple(float(c) for c in coeffs),),
                        {"coeffs": list(coeffs)})


def piecewise(breaks: Sequence[float], pieces: Sequence[Sequence[float]],
              name: str = "piecewise") -> ReactionSpec:
    return ReactionSpec(name, tuple(float(b) for b in breaks),
                        tuple(tuple(float(c) for c in p) for p in pieces),
                        {"breaks": list(breaks), "pieces": [list(p) for p in pieces]})


def _coeffs(poly: Polynomial) -> tuple:
    return tuple(float(c) for c in poly.coef)


_S = Polynomial([0.0, 1.0])


def fisher(m: float = 1.0) -> ReactionSpec:
    return ReactionSpec("fisher", (0.0, 1.0), (_coeffs(m * _S * (1 - _S)),), {"m": m})


def huxley(m: float = 40.0) -> ReactionSpec:
    return ReactionSpec("huxley", (0.0, 1.0), (_coeffs(m * _S**2 * (1 - _S)),), {"m": m})


def nagylaki(sigma: float = 5.0, m: float = 1.0) -> ReactionSpec:
    return ReactionSpec("nagylaki", (0.0, 1.0),
                        (_coeffs(m * _S * (1 - _S) * (1 + sigma * _S)),),
                        {"sigma": sigma, "m": m})


def cubic_bistable(alpha: float = 0.5) -> ReactionSpec:
    return ReactionSpec("cubic-bistable", (0.0, 1.0),
                        (_coeffs(_S * (1 - _S) * (_S - alpha)),), {"alpha": alpha})


def combustion(alpha: float = 0.3) -> ReactionSpec:
    """Zero on [0, alpha], ``(s - alpha)(1 - s)`` above."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return ReactionSpec("combustion", (0.0, alpha, 1.0),
                        ((0.0,), _coeffs((_S - alpha) * (1 - _S))), {"alpha": alpha})


CATALOG: dict = {
    "fisher": fisher,
    "huxley": huxley,
    "nagylaki": nagylaki,
    "cubic-bistable": cubic_bistable,
    "combustion": combustion,
}


def from_catalog(name: str, **params) -> ReactionSpec:
    try:
        builder = CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown catalog reaction {name!r}; known: {sorted(CATALOG)}") from None
    return builder(**params)


@dataclass(frozen=True)
class ReactionCalculus:
    spec: ReactionSpec
    type_label: str
    alpha: Optional[float]
    k: float
    F1: float
    fprime0: Optional[float]
    fprime1: float
    f_max: float
    v_max: float
    v_plus: Optional[float]
    v_star: Optional[float]
    balanced: bool
    kpp: bool
    assumption_F: bool
    _polys: tuple = field(repr=False, compare=False)
    _antider: tuple = field(repr=False, compare=False)
    _offsets: tuple = field(repr=False, compare=False)

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def breaks(self) -> np.ndarray:
        return np.asarray(self.spec.breaks, dtype=float)

    def kernel_arrays(self):
        """``(breaks, coefs)`` arrays for the jitted stepper."""
        width = max(len(p.coef) for p in self._polys)
        coefs = np.zeros((len(self._polys), width))
        for i, p in enumerate(self._polys):
            coefs[i, :len(p.coef)] = p.coef
        return self.breaks, coefs

    def f(self, v):
        return eval_f(self, v)

    def F(self, v):
        return eval_F(self, v)

    def G(self, v):
        """``F(v) - v f(v)``; its largest root is ``v_plus``."""
        v = np.asarray(v, dtype=float)
        return _F_raw(self, v) - v * _f_raw(self, v)

    @property
    def V0(self) -> float:
        """Normalization value of the profile at z = 0."""
        return 0.5 if self.type_label == "A" else float(self.alpha)

    @property
    def f_sup(self) -> float:
        return self.f_max


def _piece_index(breaks, v):
    idx = np.searchsorted(breaks, v, side="left") - 1
    return np.clip(idx, 0, len(breaks) - 2)


def _f_raw(calc_or_polys, v):
    polys = calc_or_polys._polys
    breaks = np.asarray(calc_or_polys.spec.breaks)
    v = np.asarray(v, dtype=float)
    idx = _piece_index(breaks, v)
    out = np.empty_like(v)
    for k, p in enumerate(polys):
        mask = idx == k
        if np.any(mask):
            out[mask] = p(v[mask])
    return out if out.ndim else float(out)


def _F_raw(calc, v):
    breaks = np.asarray(calc.spec.breaks)
    v = np.asarray(v, dtype=float)
    idx = _piece_index(breaks, v)
    out = np.empty_like(v)
    for k, (P, off) in enumerate(zip(calc._antider, calc._offsets)):
        mask = idx == k
        if np.any(mask):
            out[mask] = P(v[mask]) - P(breaks[k]) + off
    return out if out.ndim else float(out)


def _check_domain(v):
    arr = np.asarray(v, dtype=float)
    if np.any(arr < -1e-15) or np.any(arr > 1 + 1e-15) or np.any(np.isnan(arr)):
        raise DomainError("reaction evaluated outside [0, 1]")
    return np.clip(arr, 0.0, 1.0)


def eval_f(calc: ReactionCalculus, v):
    return _f_raw(calc, _check_domain(v))


def eval_F(calc: ReactionCalculus, v):
    """Closed-form antiderivative with ``F(0) = 0``."""
    return _F_raw(calc, _check_domain(v))


def _sign(x, tol):
    return np.where(x > tol, 1, np.where(x < -tol, -1, 0))


def _count_local_maxima(vals) -> int:
    d = np.sign(np.diff(vals))
    # collapse flat runs
    d = d[d != 0]
    return int(np.sum((d[:-1] > 0) & (d[1:] < 0)))


def classify(spec: ReactionSpec, grid_size: int = 10_000) -> ReactionCalculus:
    polys = tuple(Polynomial(p) for p in spec.pieces)
    antider = tuple(p.integ() for p in polys)
    breaks = np.asarray(spec.breaks)
    offsets = [0.0]
    for k in range(len(polys) - 1):
        offsets.append(offsets[-1] + antider[k](breaks[k + 1]) - antider[k](breaks[k]))

    stub = _Stub(spec, polys, antider, tuple(offsets))
    scale = max(1.0, max(float(np.max(np.abs(p.coef))) for p in polys))
    tol = ZERO_TOL * scale

    f0 = float(polys[0](0.0))
    f1 = float(polys[-1](1.0))
    if abs(f0) > tol or abs(f1) > tol:
        raise HypothesisHViolated(f"f(0)={f0:.3g}, f(1)={f1:.3g}; both must vanish")
    for k in range(len(polys) - 1):
        left, right = polys[k](breaks[k + 1]), polys[k + 1](breaks[k + 1])
        if abs(left - right) > 1e-10 * scale:
            raise HypothesisHViolated(f"f is discontinuous at s={breaks[k + 1]}")

    s = np.linspace(0.0, 1.0, grid_size + 1)
    fs = _f_raw(stub, s)
    interior = s[1:-1]
    fi = fs[1:-1]
    fprime0 = float(polys[0].deriv()(0.0))
    fprime1 = float(polys[-1].deriv()(1.0))
    dist = np.minimum(interior, 1.0 - interior)
    k_ctl = max(float(np.max(np.abs(fi) / dist)), abs(fprime0), abs(fprime1))
    if not np.isfinite(k_ctl):
        raise HypothesisHViolated("no finite linear control constant on the grid")
    k_ctl *= 1.0 + 1e-9

    F1 = float(_F_raw(stub, 1.0))
    sg = _sign(fi, tol)
    nz = np.flatnonzero(sg != 0)
    alpha = None
    if np.all(sg > 0):
        type_label = "A"
    else:
        if nz.size == 0:
            raise NotClassifiable("f vanishes identically")
        changes = np.flatnonzero(np.diff(sg[nz]) != 0)
        first = sg[nz[0]]
        if changes.size == 0 and first > 0 and np.all(sg[:nz[0]] == 0) and nz[0] > 0:
            type_label = "B"
            lo, hi = interior[nz[0] - 1], interior[nz[0]]
            alpha = bisect(lambda x: 1.0 if _f_raw(stub, x) > tol else -1.0, lo, hi,
                           xtol=ROOT_TOL)
            for b in breaks[1:-1]:
                if abs(b - alpha) < 1e-9:
                    alpha = float(b)
        elif changes.size == 1 and first < 0:
            type_label = "C"
            i0, i1 = nz[changes[0]], nz[changes[0] + 1]
            if np.any(sg[nz[0]:i0] > 0) or np.any(sg[i1:] < 0) or i1 - i0 > 2:
                raise NotClassifiable("sign pattern of f is not of type A, B or C")
            lo, hi = interior[i0], interior[i1]
            alpha = bisect(lambda x: float(_f_raw(stub, x)), lo, hi, xtol=ROOT_TOL)
            if F1 < -tol:
                raise NotClassifiable(f"type C reaction with negative integral F(1)={F1:.3g}")
        else:
            raise NotClassifiable("sign pattern of f is not of type A, B or C")

    balanced = type_label == "C" and abs(F1) <= tol
    if balanced:
        F1 = 0.0

    i_max = int(np.argmax(fs))
    lo, hi = s[max(i_max - 1, 0)], s[min(i_max + 1, grid_size)]
    res = minimize_scalar(lambda x: -float(_f_raw(stub, x)), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-13})
    v_max, f_max = (float(res.x), float(-res.fun)) if -res.fun >= fs[i_max] else \
        (float(s[i_max]), float(fs[i_max]))

    Gs = _F_raw(stub, s) - s * fs
    v_plus = None
    if F1 > tol:
        nonpos = np.flatnonzero(Gs[1:] <= 0.0) + 1
        if nonpos.size:
            j = int(nonpos[-1])
            g = lambda x: float(_F_raw(stub, x) - x * _f_raw(stub, x))
            v_plus = float(bisect(g, s[j], s[j + 1], xtol=ROOT_TOL)) if Gs[j] < 0 else float(s[j])

    v_star = None
    if type_label == "C":
        if balanced:
            v_star = 1.0
        else:
            v_star = float(bisect(lambda x: float(_F_raw(stub, x)), alpha, 1.0, xtol=ROOT_TOL))

    kpp = type_label == "A" and float(np.max(fs - fprime0 * s)) <= 1e3 * tol
    if type_label == "A":
        assumption_F = _count_local_maxima(fs) == 1
    elif type_label == "B":
        assumption_F = _count_local_maxima(fs[s >= alpha]) == 1
    else:
        assumption_F = False

    return ReactionCalculus(
        spec=spec, type_label=type_label, alpha=None if alpha is None else float(alpha),
        k=k_ctl, F1=F1, fprime0=fprime0, fprime1=fprime1, f_max=f_max, v_max=v_max,
        v_plus=v_plus, v_star=v_star, balanced=balanced, kpp=bool(kpp),
        assumption_F=bool(assumption_F), _polys=polys, _antider=antider,
        _offsets=tuple(offsets),
    )


@dataclass(frozen=True)
class _Stub:
    spec: ReactionSpec
    _polys: tuple
    _antider: tuple
    _offsets: tuple


def sup_ratio(calc: ReactionCalculus, g, limit0: Optional[float] = None,
              grid_size: int = 10_000):
    """Supremum of ``g`` over ``v`` in (0, 1] as ``(value, argmax)``.

    ``g`` is ``"F/v"``, ``"F/v2"``, ``"f/v"`` or a vectorized callable; ``limit0`` is
    the limit of ``g`` at ``0+`` (argmax reported as 0.0 when the limit wins).
    """
    if isinstance(g, str):
        g, limit0 = _named_ratio(calc, g)
    v = np.linspace(0.0, 1.0, grid_size + 1)[1:]
    vals = np.asarray(g(v), dtype=float)
    i = int(np.nanargmax(vals))
    best, arg = float(vals[i]), float(v[i])
    lo = v[i - 1] if i > 0 else 0.5 * v[0]
    hi = v[min(i + 1, grid_size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda x: -float(g(np.array([x]))[0]), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-13})
        if -res.fun > best:
            best, arg = float(-res.fun), float(res.x)
    if limit0 is not None and limit0 >= best:
        return float(limit0), 0.0
    return best, arg


def _named_ratio(calc, name):
    f0 = calc.fprime0
    if name == "F/v":
        return (lambda v: _F_raw(calc, v) / v), 0.0
    if name == "F/v2":
        return (lambda v: _F_raw(calc, v) / v**2), (None if f0 is None else 0.5 * f0)
    if name == "f/v":
        return (lambda v: _f_raw(calc, v) / v), f0
    raise ValueError(f"unknown ratio {name!r}")


def reaction_from_config(block: dict) -> ReactionSpec:
    """Build a spec from a config mapping (catalog name, polynomial or piecewise)."""
    if "catalog" in block:
        return from_catalog(block["catalog"], **block.get("params", {}))
    if "coeffs" in block:
        return polynomial(block["coeffs"], name=block.get("name", "polynomial"))
    if "breaks" in block and "pieces" in block:
        return piecewise(block["breaks"], block["pieces"], name=block.get("name", "piecewise"))
    raise ValueError("reaction block needs 'catalog', 'coeffs' or 'breaks'+'pieces'")


def reaction_to_config(spec: ReactionSpec) -> dict:
    if spec.name in CATALOG and spec == from_catalog(spec.name, **spec.params):
        return {"catalog": spec.name, "params": dict(spec.params)}
    if len(spec.pieces) == 1:
        return {"name": spec.name, "coeffs": list(spec.pieces[0])}
    return {"name": spec.name, "breaks": list(spec.breaks),
            "pieces": [list(p) for p in spec.pieces]}


Ratio = Callable[[np.ndarray], np.ndarray]
