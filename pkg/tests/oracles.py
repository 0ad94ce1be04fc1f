"""Independent numerical oracles for checking closed-form results.

Nothing here touches the closed forms under test: flows are integrated
with fixed-step RK4 (scalar or vectorized across many start states) and
threshold crossings are located by bisection on re-integrated sub-steps.
The switched-loop oracle rebuilds the controller composition (PD law,
inversion, clamp, thrust) directly in numpy instead of calling the
analysis module.
"""

from __future__ import annotations

import math

import numpy as np

SQRT3 = math.sqrt(3.0)


def _linear_deriv(e, ed, ky1, ky2):
    return ed, -ky1 * ed - ky2 * e


def rk4_linear_flow(e0, ed0, ky1, ky2, t_final, n_steps):
    """Fixed-step RK4 on the unsaturated error dynamics (array friendly)."""
    h = t_final / n_steps
    e, ed = np.asarray(e0, dtype=float), np.asarray(ed0, dtype=float)
    for _ in range(n_steps):
        k1e, k1d = _linear_deriv(e, ed, ky1, ky2)
        k2e, k2d = _linear_deriv(e + 0.5 * h * k1e, ed + 0.5 * h * k1d, ky1, ky2)
        k3e, k3d = _linear_deriv(e + 0.5 * h * k2e, ed + 0.5 * h * k2d, ky1, ky2)
        k4e, k4d = _linear_deriv(e + h * k3e, ed + h * k3d, ky1, ky2)
        e = e + h * (k1e + 2 * k2e + 2 * k3e + k4e) / 6.0
        ed = ed + h * (k1d + 2 * k2d + 2 * k3d + k4d) / 6.0
    return e, ed


def rk4_constant_accel_flow(e0, ed0, accel, t_final, n_steps):
    """Fixed-step RK4 on constant-acceleration error dynamics."""
    h = t_final / n_steps
    e, ed = np.asarray(e0, dtype=float), np.asarray(ed0, dtype=float)
    for _ in range(n_steps):
        k1e, k1d = ed, accel
        k2e = ed + 0.5 * h * k1d
        k3e = ed + 0.5 * h * k1d
        k4e = ed + h * k1d
        e = e + h * (k1e + 2 * k2e + 2 * k3e + k4e) / 6.0
        ed = ed + h * accel
    return e, ed


def switched_error_deriv(e, ed, lam, params):
    """Lateral error derivative through the full clamped controller.

    Assumes the x channel tracks exactly, so the desired x acceleration is
    1. Rebuilt in plain numpy: PD law, body-frame rotation, tilt scaling,
    zero clamp, thrust recombination.
    """
    axd = np.ones_like(np.asarray(e, dtype=float))
    ayd = params.ky1 * ed + params.ky2 * e
    c, s = math.cos(lam), math.sin(lam)
    bx = c * axd + s * ayd
    by = -s * axd + c * ayd
    u = bx / math.cos(params.theta)
    v = by / math.sin(params.theta)
    scale = 0.5 * params.m / params.k_thrust
    sq1 = scale * (u + v)
    sq2 = scale * (u - v)
    w1 = np.maximum(sq1, 0.0)
    w2 = np.maximum(sq2, 0.0)
    kc = params.k_thrust * math.cos(params.theta)
    ks = params.k_thrust * math.sin(params.theta)
    fx = kc * (w1 + w2)
    fy = ks * (w1 - w2)
    ay = (s * fx + c * fy) / params.m
    return ed, -ay


def rk4_switched_flow(e0, ed0, lam, params, t_final, n_steps):
    """RK4 of the switched closed loop in the error plane (array friendly)."""
    h = t_final / n_steps
    e, ed = np.asarray(e0, dtype=float), np.asarray(ed0, dtype=float)
    for _ in range(n_steps):
        k1e, k1d = switched_error_deriv(e, ed, lam, params)
        k2e, k2d = switched_error_deriv(e + 0.5 * h * k1e, ed + 0.5 * h * k1d, lam, params)
        k3e, k3d = switched_error_deriv(e + 0.5 * h * k2e, ed + 0.5 * h * k2d, lam, params)
        k4e, k4d = switched_error_deriv(e + h * k3e, ed + h * k3d, lam, params)
        e = e + h * (k1e + 2 * k2e + 2 * k3e + k4e) / 6.0
        ed = ed + h * (k1d + 2 * k2d + 2 * k3d + k4d) / 6.0
    return e, ed


def event_hitting_times(e0, ed0, lambda_sign, ky1, ky2, step=1e-4, t_max=1.5):
    """Event-detected threshold crossing times for many states at once.

    Integrates the unsaturated dynamics for all states simultaneously,
    brackets the first crossing of ky1*edot + ky2*e with the signed
    threshold, then refines each bracket by bisection on re-integrated
    sub-steps. Returns NaN where no crossing happened within ``t_max``.
    """
    e = np.array(e0, dtype=float)
    ed = np.array(ed0, dtype=float)
    n = e.size
    bound = lambda_sign / SQRT3
    sgn = float(lambda_sign)

    def gap(ev, edv):
        return sgn * (ky1 * edv + ky2 * ev - bound)

    times = np.full(n, np.nan)
    done = gap(e, ed) <= 0.0
    times[done] = 0.0
    bracket_t = np.full(n, np.nan)
    bracket_e = np.empty(n)
    bracket_ed = np.empty(n)

    t = 0.0
    n_sweep = int(round(t_max / step))
    for _ in range(n_sweep):
        e1, ed1 = rk4_linear_flow(e, ed, ky1, ky2, step, 1)
        crossed = ~done & (gap(e1, ed1) <= 0.0)
        bracket_t[crossed] = t
        bracket_e[crossed] = e[crossed]
        bracket_ed[crossed] = ed[crossed]
        done |= crossed
        e, ed, t = e1, ed1, t + step
        if done.all():
            break

    for i in np.nonzero(np.isfinite(bracket_t))[0]:
        lo, hi = 0.0, step
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            em, edm = rk4_linear_flow(bracket_e[i], bracket_ed[i], ky1, ky2, mid, 8)
            if gap(em, edm) <= 0.0:
                hi = mid
            else:
                lo = mid
        times[i] = bracket_t[i] + 0.5 * (lo + hi)
    return times


def sample_capture_region(rng, n, lambda_sign, ky1, ky2, box=2.0):
    """Uniform samples from the capture region in the matching quadrant."""
    es, eds = [], []
    bound = 1.0 / SQRT3
    while len(es) < n:
        e = rng.uniform(0.0, box)
        ed = rng.uniform(0.0, box)
        if ky1 * ed + ky2 * e >= bound:
            es.append(lambda_sign * e)
            eds.append(lambda_sign * ed)
    return np.array(es), np.array(eds)
