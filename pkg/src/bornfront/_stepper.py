"""Jitted Dormand-Prince 5(4) integrator for the regularized first-order reduction.

The state is ``(E, z)`` as a function of the profile value ``v``:

    dE/dv = c*a - f(v) * (a + b^2 y) / E,      y = E^2 / (a + sqrt(a^2 + b^2 E^2))
    dz/dv = (a + b^2 y) / (a * E)

``b = 0`` gives the linear-diffusion reduction (with ``E`` the profile slope).
Reactions are piecewise polynomials ``coefs[k, j] * v**j`` on ``[breaks[k], breaks[k+1]]``.
"""

import numpy as np
from numba import njit

OK = 0
HIT_FLOOR = 1
STEP_UNDERFLOW = 2
MAX_STEPS = 3

# Dormand-Prince tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# b - b_hat
D1 = 71 / 57600
D3 = -71 / 16695
D4 = 71 / 1920
D5 = -17253 / 339200
D6 = 22 / 525
D7 = -1 / 40


@njit(cache=True)
def poly_eval(v, breaks, coefs):
    n = breaks.shape[0] - 1
    k = 0
    while k < n - 1 and v > breaks[k + 1]:
        k += 1
    acc = 0.0
    for j in range(coefs.shape[1] - 1, -1, -1):
        acc = acc * v + coefs[k, j]
    return acc


@njit(cache=True)
def e_to_y(E, a, b):
    return E * E / (a + np.sqrt(a * a + b * b * E * E))


@njit(cache=True)
def _rhs(v, E, c, a, b, breaks, coefs):
    f = poly_eval(v, breaks, coefs)
    w = a + b * b * e_to_y(E, a, b)
    return c * a - f * w / E, w / (a * E)


@njit(cache=True)
def _cap(v, h_max, h_rel):
    # keep steps proportional to the distance from the endpoints, where z ~ log
    return min(h_max, max(h_rel * min(abs(v), abs(1.0 - v)), 1e-12))


@njit(cache=True)
def _grow(buf, n):
    out = np.empty((buf.shape[0], 2 * buf.shape[1]))
    out[:, :n] = buf[:, :n]
    return out


@njit(cache=True)
def integrate(v0, E0, v_end, c, a, b, breaks, coefs, rtol, atol, h0, h_min, h_max, h_rel,
              E_floor, use_z, max_steps):
    """Integrate from ``(v0, E0)`` towards ``v_end``.

    Steps are capped by ``h_max`` and by ``h_rel`` times the distance to the nearer
    endpoint of [0, 1]. Returns ``(knots, n, status)`` where ``knots[:, :n]`` rows are
    ``v, E, z, dE/dv, dz/dv``. ``z`` starts at 0 at ``v0``.
    Stops with HIT_FLOOR when ``E`` drops below ``E_floor`` (last knot is the crossing).
    """
    direction = 1.0 if v_end > v0 else -1.0
    buf = np.empty((5, 1024))
    v = v0
    E = E0
    z = 0.0
    k1E, k1z = _rhs(v, E, c, a, b, breaks, coefs)
    buf[0, 0] = v
    buf[1, 0] = E
    buf[2, 0] = z
    buf[3, 0] = k1E
    buf[4, 0] = k1z
    n = 1
    h = min(abs(h0), abs(v_end - v0), _cap(v0, h_max, h_rel))
    status = OK
    steps = 0
    # the floor only counts once E is falling (seeds may start below it)
    falling = False
    while direction * (v_end - v) > 0.0:
        if steps >= max_steps:
            status = MAX_STEPS
            break
        steps += 1
        if h < h_min:
            status = STEP_UNDERFLOW
            break
        last = False
        if h >= abs(v_end - v):
            h = abs(v_end - v)
            last = True
        hs = direction * h
        bad = False
        E2 = E + hs * A21 * k1E
        if not E2 > 0.0:
            bad = True
        if not bad:
            k2E, k2z = _rhs(v + C2 * hs, E2, c, a, b, breaks, coefs)
            E3 = E + hs * (A31 * k1E + A32 * k2E)
            if not E3 > 0.0:
                bad = True
        if not bad:
            k3E, k3z = _rhs(v + C3 * hs, E3, c, a, b, breaks, coefs)
            E4 = E + hs * (A41 * k1E + A42 * k2E + A43 * k3E)
            if not E4 > 0.0:
                bad = True
        if not bad:
            k4E, k4z = _rhs(v + C4 * hs, E4, c, a, b, breaks, coefs)
            E5 = E + hs * (A51 * k1E + A52 * k2E + A53 * k3E + A54 * k4E)
            if not E5 > 0.0:
                bad = True
        if not bad:
            k5E, k5z = _rhs(v + C5 * hs, E5, c, a, b, breaks, coefs)
            E6 = E + hs * (A61 * k1E + A62 * k2E + A63 * k3E + A64 * k4E + A65 * k5E)
            if not E6 > 0.0:
                bad = True
        if not bad:
            k6E, k6z = _rhs(v + hs, E6, c, a, b, breaks, coefs)
            En = E + hs * (B1 * k1E + B3 * k3E + B4 * k4E + B5 * k5E + B6 * k6E)
            zn = z + hs * (B1 * k1z + B3 * k3z + B4 * k4z + B5 * k5z + B6 * k6z)
            if not En > 0.0:
                bad = True
        if bad:
            # a stage crossed E = 0: the solution reaches zero inside this step
            near_zero = falling and E < E_floor * 1e3
            if near_zero or h * 0.25 < h_min:
                if near_zero:
                    status = HIT_FLOOR
                else:
                    status = STEP_UNDERFLOW
                break
            h *= 0.25
            continue
        k7E, k7z = _rhs(v + hs, En, c, a, b, breaks, coefs)
        errE = hs * (D1 * k1E + D3 * k3E + D4 * k4E + D5 * k5E + D6 * k6E + D7 * k7E)
        sc = atol + rtol * max(abs(E), abs(En))
        err = (errE / sc) ** 2
        if use_z:
            errz = hs * (D1 * k1z + D3 * k3z + D4 * k4z + D5 * k5z + D6 * k6z + D7 * k7z)
            scz = atol + rtol * max(abs(z), abs(zn))
            err = 0.5 * (err + (errz / scz) ** 2)
        err = np.sqrt(err)
        if not np.isfinite(err):
            h *= 0.25
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            continue
        if n >= buf.shape[1]:
            buf = _grow(buf, n)
        v_new = v_end if last else v + hs
        buf[0, n] = v_new
        buf[1, n] = En
        buf[2, n] = zn
        buf[3, n] = k7E
        buf[4, n] = k7z
        n += 1
        v = v_new
        falling = En < E
        E = En
        z = zn
        k1E = k7E
        k1z = k7z
        if falling and E < E_floor:
            status = HIT_FLOOR
            break
        if err == 0.0:
            fac = 5.0
        else:
            fac = min(5.0, max(0.2, 0.9 * err ** -0.2))
        h = min(h * fac, _cap(v, h_max, h_rel))
    return buf[:, :n].copy(), n, status
