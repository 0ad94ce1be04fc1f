"""Phase-plane machinery for the saturated lateral error dynamics.

Everything here lives in the lateral error plane (e, edot) under the
exact-x-tracking regime of the large gait: the yaw alternates between
-pi/3 and +pi/3 every half period, the x channel tracks exactly, and the
lateral channel switches between an unsaturated linear decay and a
constant-acceleration push of magnitude 1/sqrt(3) whenever one rotor
command sits on its zero bound. The geometric constants (the 1/sqrt(3)
push and the +/- 1/sqrt(3) switching threshold) are specific to the
pi/6 tilt half-angle and pi/3 yaw amplitude; the PD gains are free
parameters.

For the default gain pair (ky1, ky2) = (9, 18) the unsaturated decay has
real rates -3 and -6 and the time to reach the switching threshold has a
closed form. For other gains the linear flow is still evaluated
analytically (2x2 linear ODE) but threshold crossings are found by
bracketed root search, and the half-period map falls back to an
event-driven segment loop that tolerates multiple regime changes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .plant import DEFAULT_PARAMS, ModelParams

__all__ = [
    "ErrorState",
    "INV_SQRT3",
    "DELTA_L_CAP",
    "lyapunov",
    "s11_flow",
    "saturated_flow",
    "in_admissible_region",
    "hitting_time_pos",
    "hitting_time_neg",
    "hitting_time_simulated",
    "half_period_map",
    "delta_l",
    "DeltaLGrid",
    "delta_l_grid",
    "CaptureReport",
    "verify_quadrant_capture",
    "CriticalLyapunov",
    "critical_lyapunov",
    "acceleration_angle",
    "feasible_cone",
    "angle_in_cone",
]

INV_SQRT3 = 1.0 / math.sqrt(3.0)
TWO_PI = 2.0 * math.pi

# Largest possible Lyapunov increase over one half period (default gains);
# attained on the switching threshold at edot = 0.
DELTA_L_CAP = 0.75

_MAX_SEGMENTS = 64


@dataclass(frozen=True)
class ErrorState:
    """Lateral position error and its rate."""

    e: float
    edot: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.e) and math.isfinite(self.edot)):
            raise ValueError(f"error state must be finite, got ({self.e}, {self.edot})")


def lyapunov(s: ErrorState, params: ModelParams = DEFAULT_PARAMS) -> float:
    """Quadratic energy of the lateral error: edot^2/2 + ky2*e^2/2."""
    return 0.5 * s.edot * s.edot + 0.5 * params.ky2 * s.e * s.e


def _has_default_rates(params: ModelParams) -> bool:
    return params.ky1 == 9.0 and params.ky2 == 18.0


def _linear_flow(e0, edot0, t, params: ModelParams):
    """Analytic flow of edotdot = -ky1*edot - ky2*e; array friendly."""
    k1, k2 = params.ky1, params.ky2
    disc = k1 * k1 - 4.0 * k2
    if disc > 0.0:
        rad = math.sqrt(disc)
        r1, r2 = (-k1 + rad) / 2.0, (-k1 - rad) / 2.0
        c1 = (edot0 - r2 * e0) / (r1 - r2)
        c2 = (r1 * e0 - edot0) / (r1 - r2)
        x1, x2 = np.exp(r1 * t), np.exp(r2 * t)
        return c1 * x1 + c2 * x2, c1 * r1 * x1 + c2 * r2 * x2
    if disc == 0.0:
        r = -k1 / 2.0
        b = edot0 - r * e0
        x = np.exp(r * t)
        return x * (e0 + b * t), x * (b + r * (e0 + b * t))
    alpha = -k1 / 2.0
    omega = math.sqrt(-disc) / 2.0
    b = (edot0 - alpha * e0) / omega
    x = np.exp(alpha * t)
    cw, sw = np.cos(omega * t), np.sin(omega * t)
    e = x * (e0 * cw + b * sw)
    edot = x * ((alpha * e0 + b * omega) * cw + (alpha * b - e0 * omega) * sw)
    return e, edot


def s11_flow(s0: ErrorState, t: float, params: ModelParams = DEFAULT_PARAMS) -> ErrorState:
    """Propagate the unsaturated (both rotors active) error dynamics by ``t``.

    With the default gains this is the two-exponential decay with rates -3
    and -6; other gain pairs use the matching analytic branch (distinct,
    repeated, or complex rates).
    """
    e, edot = _linear_flow(s0.e, s0.edot, t, params)
    return ErrorState(float(e), float(edot))


def _saturated_flow(e0, edot0, t, accel):
    e = e0 + edot0 * t + 0.5 * accel * t * t
    return e, edot0 + accel * t


def saturated_flow(s0: ErrorState, t: float, sign: int) -> ErrorState:
    """Propagate the one-rotor-clamped dynamics: constant push sign/sqrt(3)."""
    if sign not in (-1, 1):
        raise ValueError(f"sign must be -1 or +1, got {sign}")
    e, edot = _saturated_flow(s0.e, s0.edot, t, sign * INV_SQRT3)
    return ErrorState(float(e), float(edot))


def _pd_output(e, edot, params: ModelParams):
    return params.ky1 * edot + params.ky2 * e


def _region_mask(e, edot, lambda_sign: int, params: ModelParams, tol: float):
    g = _pd_output(e, edot, params)
    if lambda_sign > 0:
        return (g >= INV_SQRT3 - tol) & (e >= -tol) & (edot >= -tol)
    return (g <= -INV_SQRT3 + tol) & (e <= tol) & (edot <= tol)


def in_admissible_region(
    s: ErrorState,
    lambda_sign: int,
    params: ModelParams = DEFAULT_PARAMS,
    tol: float = 0.0,
) -> bool:
    """Membership in the half-period capture region for the given yaw sign.

    For yaw sign +1 this is the first-quadrant set where the PD output is
    at or above +1/sqrt(3); for -1 the point-mirrored third-quadrant set.
    """
    if lambda_sign not in (-1, 1):
        raise ValueError(f"lambda_sign must be -1 or +1, got {lambda_sign}")
    return bool(_region_mask(s.e, s.edot, lambda_sign, params, tol))


def _region_error(lambda_sign: int) -> str:
    if lambda_sign > 0:
        return (
            "state must satisfy ky1*edot + ky2*e >= 1/sqrt(3) with e >= 0 and "
            "edot >= 0 (first-quadrant capture region)"
        )
    return (
        "state must satisfy ky1*edot + ky2*e <= -1/sqrt(3) with e <= 0 and "
        "edot <= 0 (third-quadrant capture region)"
    )


def _hit_time_default_pos(e0, edot0):
    """Time for the default-gain decay to reach the +1/sqrt(3) threshold.

    Substituting the flow into the threshold equation gives a quadratic in
    exp(3t) with exactly one root >= 1; array friendly.
    """
    a = INV_SQRT3 / 9.0
    b = 2.0 * e0 + edot0 / 3.0
    c = -4.0 * e0 - 4.0 * edot0 / 3.0
    z = (-b + np.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
    return np.log(np.maximum(z, 1.0)) / 3.0


def hitting_time_pos(s0: ErrorState, params: ModelParams = DEFAULT_PARAMS) -> float:
    """Time for the unsaturated decay to reach ky1*edot + ky2*e = +1/sqrt(3).

    Requires the start state in the first-quadrant capture region; the
    result then lies in [0, 1), reaching 0 exactly on the threshold. Default
    gains use the closed form, other gains a bracketed root search on the
    analytic flow.
    """
    if not in_admissible_region(s0, +1, params):
        raise ValueError(_region_error(+1))
    if _has_default_rates(params):
        return float(_hit_time_default_pos(s0.e, s0.edot))
    return _hit_time_generic(s0.e, s0.edot, INV_SQRT3, params)


def hitting_time_neg(s0: ErrorState, params: ModelParams = DEFAULT_PARAMS) -> float:
    """Mirror of ``hitting_time_pos`` for the -1/sqrt(3) threshold."""
    if not in_admissible_region(s0, -1, params):
        raise ValueError(_region_error(-1))
    if _has_default_rates(params):
        a = INV_SQRT3 / 9.0
        b = 2.0 * s0.e + s0.edot / 3.0
        c = 4.0 * s0.e + 4.0 * s0.edot / 3.0
        z = (b + math.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
        return math.log(max(z, 1.0)) / 3.0
    return _hit_time_generic(-s0.e, -s0.edot, INV_SQRT3, params)


def _hit_time_generic(e0, edot0, bound, params: ModelParams, t_max: float = 8.0) -> float:
    """First crossing of the PD output with ``bound`` along the linear flow."""

    def gap(t):
        e, edot = _linear_flow(e0, edot0, t, params)
        return _pd_output(e, edot, params) - bound

    g0 = gap(0.0)
    if g0 <= 0.0:
        return 0.0
    n = 512
    prev_t, prev_g = 0.0, g0
    for i in range(1, n + 1):
        t = t_max * i / n
        g = gap(t)
        if g <= 0.0:
            if g == 0.0:
                return t
            return brentq(gap, prev_t, t, xtol=1e-14)
        prev_t, prev_g = t, g
    raise ValueError(
        f"unsaturated flow does not reach the threshold within {t_max} s for "
        f"gains ky1={params.ky1}, ky2={params.ky2}"
    )


def hitting_time_simulated(
    s0: ErrorState,
    lambda_sign: int,
    params: ModelParams = DEFAULT_PARAMS,
    step: float = 1e-4,
) -> float:
    """Event-detected threshold crossing, independent of the closed form.

    Integrates the unsaturated dynamics with fixed-step RK4 until the PD
    output crosses the threshold, then refines by bisection on re-integrated
    sub-steps. Used as the cross-check channel for the closed forms.
    """
    if not in_admissible_region(s0, lambda_sign, params):
        raise ValueError(_region_error(lambda_sign))
    bound = lambda_sign * INV_SQRT3
    k1g, k2g = params.ky1, params.ky2
    sgn = float(lambda_sign)

    def rk4_advance(e, edot, h, nsub=1):
        hh = h / nsub
        for _ in range(nsub):
            a1 = -k1g * edot - k2g * e
            e2, d2 = e + 0.5 * hh * edot, edot + 0.5 * hh * a1
            a2 = -k1g * d2 - k2g * e2
            e3, d3 = e + 0.5 * hh * d2, edot + 0.5 * hh * a2
            a3 = -k1g * d3 - k2g * e3
            e4, d4 = e + hh * d3, edot + hh * a3
            a4 = -k1g * d4 - k2g * e4
            e, edot = (
                e + hh * (edot + 2.0 * d2 + 2.0 * d3 + d4) / 6.0,
                edot + hh * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0,
            )
        return e, edot

    def gap(e, edot):
        return sgn * (_pd_output(e, edot, params) - bound)

    e, edot = s0.e, s0.edot
    if gap(e, edot) <= 0.0:
        return 0.0
    t = 0.0
    t_max = 8.0
    while t < t_max:
        e_next, edot_next = rk4_advance(e, edot, step)
        if gap(e_next, edot_next) <= 0.0:
            lo, hi = 0.0, step
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                em, dm = rk4_advance(e, edot, mid, nsub=8)
                if gap(em, dm) <= 0.0:
                    hi = mid
                else:
                    lo = mid
            return t + 0.5 * (lo + hi)
        e, edot, t = e_next, edot_next, t + step
    raise ValueError(f"no threshold crossing detected within {t_max} s")


def _map_default(e0, edot0, lambda_sign: int, params: ModelParams, half_period: float):
    """Default-gain half-period map: decay until the threshold, then push."""
    if lambda_sign > 0:
        t_hit = _hit_time_default_pos(e0, edot0)
    else:
        t_hit = _hit_time_default_pos(-np.asarray(e0), -np.asarray(edot0))
    t_hit = np.minimum(t_hit, half_period)
    e_m, edot_m = _linear_flow(e0, edot0, t_hit, params)
    accel = -lambda_sign * INV_SQRT3
    return _saturated_flow(e_m, edot_m, half_period - t_hit, accel)


def _saturated_exit_time(e, edot, bound, accel, params: ModelParams):
    """Earliest strictly positive time the PD output exits the clamp region.

    Along the constant-push flow the PD output is quadratic in time; an
    exit is a root where the output moves across the threshold away from
    the clamped side. Returns None when no such root exists.
    """
    k1g, k2g = params.ky1, params.ky2
    c2 = 0.5 * k2g * accel
    c1 = k1g * accel + k2g * edot
    c0 = _pd_output(e, edot, params) - bound
    # leaving the region means the output grows when accel < 0 pins g <= bound
    # (yaw sign +1) and shrinks in the mirrored case; accel and yaw sign are
    # locked together so the exit direction is sign(-accel).
    exit_dir = -1.0 if accel > 0.0 else 1.0
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc < 0.0:
        return None
    rad = math.sqrt(disc)
    roots = sorted(((-c1 - rad) / (2.0 * c2), (-c1 + rad) / (2.0 * c2)))
    for t in roots:
        if t > 1e-12 and exit_dir * (c1 + 2.0 * c2 * t) > 0.0:
            return t
    return None


def _linear_crossing_time(e, edot, bound, params: ModelParams, horizon: float):
    """First crossing of the PD output with ``bound`` within ``horizon``."""

    def gap(t):
        et, dt_ = _linear_flow(e, edot, t, params)
        return _pd_output(et, dt_, params) - bound

    n = 256
    t_prev = 1e-12
    g_prev = gap(t_prev)
    for i in range(1, n + 1):
        t = horizon * i / n
        g = gap(t)
        if g == 0.0:
            return t
        if (g_prev > 0.0) != (g > 0.0):
            return brentq(gap, t_prev, t, xtol=1e-14)
        t_prev, g_prev = t, g
    return None


def _map_generic(e, edot, lambda_sign: int, params: ModelParams, half_period: float):
    """Event-driven half-period map valid for arbitrary positive gains."""
    bound = lambda_sign * INV_SQRT3
    accel = -lambda_sign * INV_SQRT3
    remaining = half_period
    # the threshold itself is saturated (tie rule); the band absorbs the
    # rounding left behind by the root search that lands us on it
    eps = 1e-10
    for _ in range(_MAX_SEGMENTS):
        g = _pd_output(e, edot, params)
        saturated = g <= bound + eps if lambda_sign > 0 else g >= bound - eps
        if saturated:
            t_exit = _saturated_exit_time(e, edot, bound, accel, params)
        else:
            t_exit = _linear_crossing_time(e, edot, bound, params, remaining)
        if t_exit is None or t_exit >= remaining:
            adv, switch = remaining, False
        else:
            adv, switch = t_exit, True
        if saturated:
            e, edot = _saturated_flow(e, edot, adv, accel)
        else:
            e, edot = _linear_flow(e, edot, adv, params)
        remaining -= adv
        if not switch or remaining <= 1e-15:
            return float(e), float(edot)
    raise RuntimeError(
        "half-period map did not settle within "
        f"{_MAX_SEGMENTS} regime segments (gains ky1={params.ky1}, ky2={params.ky2})"
    )


def half_period_map(
    s0: ErrorState,
    lambda_sign: int,
    params: ModelParams = DEFAULT_PARAMS,
    half_period: float = 1.0,
) -> ErrorState:
    """Advance the lateral error by one half period of the large gait.

    The start state must lie in the capture region matching ``lambda_sign``.
    With default gains the trajectory is one unsaturated decay segment up to
    the threshold followed by the constant push for the rest of the half
    period; other gains go through the event-driven segment loop.
    """
    if not in_admissible_region(s0, lambda_sign, params):
        raise ValueError(_region_error(lambda_sign))
    if _has_default_rates(params):
        e, edot = _map_default(s0.e, s0.edot, lambda_sign, params, half_period)
        return ErrorState(float(e), float(edot))
    e, edot = _map_generic(s0.e, s0.edot, lambda_sign, params, half_period)
    return ErrorState(e, edot)


def delta_l(
    s0: ErrorState,
    lambda_sign: int,
    params: ModelParams = DEFAULT_PARAMS,
    half_period: float = 1.0,
) -> float:
    """Lyapunov change across one half period starting from ``s0``."""
    return lyapunov(half_period_map(s0, lambda_sign, params, half_period), params) - lyapunov(
        s0, params
    )


@dataclass
class DeltaLGrid:
    """Half-period Lyapunov change sampled on a rectangular error grid.

    ``values[i, j]`` is the change starting from (e_values[i],
    edot_values[j]); cells outside the capture region are masked and carry
    NaN. ``sign_map`` is -1/0/+1 on admissible cells and 0 elsewhere.
    """

    e_values: np.ndarray
    edot_values: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    lambda_sign: int

    @property
    def n_admissible(self) -> int:
        return int(self.mask.sum())

    @property
    def n_positive(self) -> int:
        return int(((self.values >= 0.0) & self.mask).sum())

    def max_delta_l(self) -> float | None:
        if not self.mask.any():
            return None
        return float(np.nanmax(np.where(self.mask, self.values, -np.inf)))

    def argmax_state(self) -> ErrorState | None:
        if not self.mask.any():
            return None
        flat = int(np.nanargmax(np.where(self.mask, self.values, -np.inf)))
        i, j = np.unravel_index(flat, self.values.shape)
        return ErrorState(float(self.e_values[i]), float(self.edot_values[j]))

    def sign_map(self) -> np.ndarray:
        return np.where(self.mask, np.sign(self.values), 0.0)

    def summary(self) -> dict:
        m = self.max_delta_l()
        arg = self.argmax_state()
        return {
            "lambda_sign": self.lambda_sign,
            "resolution": [len(self.e_values), len(self.edot_values)],
            "e_range": [float(self.e_values[0]), float(self.e_values[-1])],
            "edot_range": [float(self.edot_values[0]), float(self.edot_values[-1])],
            "n_admissible": self.n_admissible,
            "n_positive": self.n_positive,
            "max_delta_l": m,
            "argmax": None if arg is None else [arg.e, arg.edot],
        }

    def rows(self):
        """Flattened (e, edot, admissible, delta_L, sign) rows, row-major."""
        sign = self.sign_map()
        for i, e in enumerate(self.e_values):
            for j, ed in enumerate(self.edot_values):
                yield (
                    float(e),
                    float(ed),
                    int(self.mask[i, j]),
                    float(self.values[i, j]),
                    int(sign[i, j]),
                )


def delta_l_grid(
    e_range: tuple[float, float],
    edot_range: tuple[float, float],
    resolution: int,
    lambda_sign: int,
    params: ModelParams = DEFAULT_PARAMS,
    half_period: float = 1.0,
) -> DeltaLGrid:
    """Evaluate the half-period Lyapunov change on a grid of start states.

    ``resolution`` is the number of samples per axis. Cells outside the
    capture region for ``lambda_sign`` are masked rather than rejected.
    """
    if lambda_sign not in (-1, 1):
        raise ValueError(f"lambda_sign must be -1 or +1, got {lambda_sign}")
    if resolution < 1:
        raise ValueError(f"resolution must be at least 1, got {resolution}")
    e_vals = np.linspace(e_range[0], e_range[1], resolution)
    ed_vals = np.linspace(edot_range[0], edot_range[1], resolution)
    E, Ed = np.meshgrid(e_vals, ed_vals, indexing="ij")
    mask = _region_mask(E, Ed, lambda_sign, params, 0.0)
    values = np.full(E.shape, np.nan)
    if mask.any():
        e0, ed0 = E[mask], Ed[mask]
        l0 = 0.5 * ed0 * ed0 + 0.5 * params.ky2 * e0 * e0
        if _has_default_rates(params):
            e1, ed1 = _map_default(e0, ed0, lambda_sign, params, half_period)
        else:
            e1 = np.empty_like(e0)
            ed1 = np.empty_like(ed0)
            for k in range(e0.size):
                e1[k], ed1[k] = _map_generic(
                    float(e0[k]), float(ed0[k]), lambda_sign, params, half_period
                )
        l1 = 0.5 * ed1 * ed1 + 0.5 * params.ky2 * e1 * e1
        values[mask] = l1 - l0
    return DeltaLGrid(e_vals, ed_vals, values, mask, lambda_sign)


@dataclass
class CaptureReport:
    """Outcome of mapping every admissible grid cell across a half period."""

    lambda_sign: int
    n_admissible: int
    violations: list[tuple[float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "lambda_sign": self.lambda_sign,
            "n_admissible": self.n_admissible,
            "n_violations": len(self.violations),
            "violations_head": [list(v) for v in self.violations[:20]],
            "passed": self.passed,
        }


def verify_quadrant_capture(
    e_range: tuple[float, float],
    edot_range: tuple[float, float],
    resolution: int,
    lambda_sign: int,
    params: ModelParams = DEFAULT_PARAMS,
    half_period: float = 1.0,
) -> CaptureReport:
    """Check that the half-period map sends its capture region to the mirror.

    Every admissible start cell must land in the opposite-sign capture
    region; violations are collected, not raised.
    """
    if lambda_sign not in (-1, 1):
        raise ValueError(f"lambda_sign must be -1 or +1, got {lambda_sign}")
    e_vals = np.linspace(e_range[0], e_range[1], resolution)
    ed_vals = np.linspace(edot_range[0], edot_range[1], resolution)
    E, Ed = np.meshgrid(e_vals, ed_vals, indexing="ij")
    mask = _region_mask(E, Ed, lambda_sign, params, 0.0)
    report = CaptureReport(lambda_sign=lambda_sign, n_admissible=int(mask.sum()))
    if not mask.any():
        return report
    e0, ed0 = E[mask], Ed[mask]
    if _has_default_rates(params):
        e1, ed1 = _map_default(e0, ed0, lambda_sign, params, half_period)
    else:
        e1 = np.empty_like(e0)
        ed1 = np.empty_like(ed0)
        for k in range(e0.size):
            try:
                e1[k], ed1[k] = _map_generic(
                    float(e0[k]), float(ed0[k]), lambda_sign, params, half_period
                )
            except RuntimeError:
                e1[k], ed1[k] = np.nan, np.nan
    captured = _region_mask(e1, ed1, -lambda_sign, params, 0.0)
    captured &= np.isfinite(e1) & np.isfinite(ed1)
    for k in np.nonzero(~captured)[0]:
        report.violations.append((float(e0[k]), float(ed0[k])))
    return report


@dataclass(frozen=True)
class CriticalLyapunov:
    """Largest Lyapunov level whose ellipse still meets the nonneg-change set."""

    l_critical: float
    grid_max: float
    n_positive_cells: int
    resolution: int

    @property
    def sup_bound(self) -> float:
        """Steady-state Lyapunov supremum bound: level plus the 3/4 cap."""
        return self.l_critical + DELTA_L_CAP

    def to_dict(self) -> dict:
        return {
            "l_critical": self.l_critical,
            "grid_max": self.grid_max,
            "n_positive_cells": self.n_positive_cells,
            "resolution": self.resolution,
            "sup_bound": self.sup_bound,
        }


def _ellipse_points(level: float, phis: np.ndarray, params: ModelParams):
    # level sets of the Lyapunov function: ky2*e^2/2 + edot^2/2 = level
    e = math.sqrt(2.0 * level / params.ky2) * np.cos(phis)
    edot = math.sqrt(2.0 * level) * np.sin(phis)
    return e, edot


def critical_lyapunov(
    e_range: tuple[float, float] = (-2.0, 2.0),
    edot_range: tuple[float, float] = (-2.0, 2.0),
    resolution: int = 200,
    params: ModelParams = DEFAULT_PARAMS,
    refine_tol: float = 1e-4,
    n_angles: int = 4096,
    half_period: float = 1.0,
) -> CriticalLyapunov:
    """Compute the critical Lyapunov level by grid pass plus level bisection.

    A coarse grid over both capture regions locates cells whose half-period
    Lyapunov change is nonnegative; the largest level among them brackets
    the answer from below. The level is then refined by bisecting on "does
    the level ellipse still intersect the nonnegative-change set", sampling
    the ellipse densely in both capture regions. Returns a degenerate zero
    level (with a warning) when no cell has nonnegative change.
    """
    witness_phi = None
    grid_max = -math.inf
    n_pos = 0
    for sign in (+1, -1):
        grid = delta_l_grid(e_range, edot_range, resolution, sign, params, half_period)
        pos = grid.mask & (grid.values >= 0.0)
        n_pos += int(pos.sum())
        if not pos.any():
            continue
        E, Ed = np.meshgrid(grid.e_values, grid.edot_values, indexing="ij")
        levels = 0.5 * Ed[pos] ** 2 + 0.5 * params.ky2 * E[pos] ** 2
        k = int(np.argmax(levels))
        if levels[k] > grid_max:
            grid_max = float(levels[k])
            ew, edw = float(E[pos][k]), float(Ed[pos][k])
            witness_phi = math.atan2(
                edw / math.sqrt(2.0 * grid_max), ew / math.sqrt(2.0 * grid_max / params.ky2)
            )
    if n_pos == 0:
        warnings.warn("no grid cell has nonnegative half-period Lyapunov change")
        return CriticalLyapunov(0.0, 0.0, 0, resolution)

    phis = np.linspace(0.0, TWO_PI, n_angles, endpoint=False)
    if witness_phi is not None:
        phis = np.append(phis, witness_phi)

    def intersects(level: float) -> bool:
        e, edot = _ellipse_points(level, phis, params)
        for sign in (+1, -1):
            sel = _region_mask(e, edot, sign, params, 0.0)
            if not sel.any():
                continue
            l0 = np.full(int(sel.sum()), level)
            if _has_default_rates(params):
                e1, ed1 = _map_default(e[sel], edot[sel], sign, params, half_period)
                l1 = 0.5 * ed1 * ed1 + 0.5 * params.ky2 * e1 * e1
                if np.any(l1 - l0 >= 0.0):
                    return True
            else:
                for ek, edk in zip(e[sel], edot[sel]):
                    try:
                        e1, ed1 = _map_generic(float(ek), float(edk), sign, params, half_period)
                    except RuntimeError:
                        continue
                    if 0.5 * ed1 * ed1 + 0.5 * params.ky2 * e1 * e1 - level >= 0.0:
                        return True
        return False

    lo = grid_max
    hi = grid_max
    for _ in range(60):
        hi = hi * 1.25 + 1e-9
        if not intersects(hi):
            break
    else:
        warnings.warn("could not bracket the critical level from above")
        return CriticalLyapunov(float(hi), grid_max, n_pos, resolution)
    while hi - lo > refine_tol:
        mid = 0.5 * (lo + hi)
        if intersects(mid):
            lo = mid
        else:
            hi = mid
    return CriticalLyapunov(float(lo), grid_max, n_pos, resolution)


def acceleration_angle(ax: float, ay: float) -> float:
    """Direction of an acceleration vector, wrapped into [0, 2*pi)."""
    if ax == 0.0 and ay == 0.0:
        raise ValueError("acceleration angle is undefined for the zero vector")
    return math.atan2(ay, ax) % TWO_PI


def feasible_cone(lam: float, params: ModelParams = DEFAULT_PARAMS) -> tuple[float, float]:
    """Angular interval of accelerations reachable with nonnegative commands.

    The two rotor force directions sit at yaw -/+ tilt half-angle; any
    nonnegative command combination lands between them. A commanded
    acceleration avoids clamping exactly when its angle lies inside this
    cone (or its magnitude is zero).
    """
    return (lam - params.theta) % TWO_PI, (lam + params.theta) % TWO_PI


def angle_in_cone(angle: float, lo: float, hi: float) -> bool:
    """Inclusive membership of a wrapped angle in the wrapped cone [lo, hi]."""
    width = (hi - lo) % TWO_PI
    return (angle - lo) % TWO_PI <= width
