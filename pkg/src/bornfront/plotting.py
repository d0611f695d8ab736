"""PNG figures for profiles, reductions and sweeps (non-interactive Agg backend)."""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_profiles(profiles, path, labels=None, limit=None, window=None):
    """v(z) for one or more FrontProfile objects, optionally with a limit profile."""
    if not isinstance(profiles, (list, tuple)):
        profiles = [profiles]
    labels = labels or [f"c={p.c:.4g}" for p in profiles]
    fig, ax = plt.subplots(figsize=(6, 4))
    for p, lab in zip(profiles, labels):
        z = p.z if window is None else np.linspace(*window, 1001)
        ax.plot(z, p(z), label=lab)
    if limit is not None:
        lo, hi = window or (min(p.z[0] for p in profiles), max(p.z[-1] for p in profiles))
        z = np.linspace(lo, hi, 1001)
        ax.plot(z, limit(z), "k--", label=limit.kind)
    ax.set_xlabel("z")
    ax.set_ylabel("v")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_reduction(solutions, path, labels=None):
    """y(v) for one or more ReductionSolution objects."""
    if not isinstance(solutions, (list, tuple)):
        solutions = [solutions]
    labels = labels or [f"c={s.c:.4g}" for s in solutions]
    fig, ax = plt.subplots(figsize=(6, 4))
    for s, lab in zip(solutions, labels):
        ax.plot(s.v, s.y, label=lab)
    ax.set_xlabel("v")
    ax.set_ylabel("y")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_sweep(report, path):
    """c* against the sweep value on log-log axes with lower/upper bounds."""
    x = np.array([r.value for r in report.rows], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    c = report.c_stars()
    if np.any(np.isfinite(c)):
        ax.loglog(x, c, "o-", label="c*")
    for key, style in (("lower_universal", ":"), ("upper_m_control", "--"),
                       ("upper_threshold", "--")):
        vals = np.array([r.bounds.get(key, np.nan) for r in report.rows], dtype=float)
        if np.any(np.isfinite(vals) & (vals > 0)):
            ax.loglog(x, vals, style, label=key)
    ax.set_xlabel(report.plan.axis)
    ax.set_ylabel("speed")
    ax.legend(fontsize=8)
    return _save(fig, path)
