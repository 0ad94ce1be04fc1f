"""Fixed-step closed-loop simulation of the full vehicle plus controller.

One run integrates the four-state vehicle with classical RK4 at a fixed
step, re-evaluating the controller inside every integrator stage. The step
must divide half the gait period exactly so that every yaw switch lands on
a grid point; within a step the yaw is held at its value at the step start.
Every sample logs the raw and clamped commands, the saturation pattern, the
tracking errors, the lateral Lyapunov value, and the desired-acceleration
angle against the feasible cone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import (
    DELTA_L_CAP,
    ErrorState,
    acceleration_angle,
    critical_lyapunov,
    feasible_cone,
    in_admissible_region,
)
from .controller import clamp, desired_accel, raw_inversion
from .gait import GaitSchedule, PRESETS, reference_at, yaw_at
from .plant import DEFAULT_PARAMS, ModelParams, VehicleState, accelerate

__all__ = [
    "SimConfig",
    "Trajectory",
    "DivergenceError",
    "TRAJECTORY_COLUMNS",
    "step",
    "run",
    "VerificationReport",
    "verify_trajectory",
]

TRAJECTORY_COLUMNS = (
    "t",
    "x",
    "y",
    "vx",
    "vy",
    "ex",
    "ey",
    "exdot",
    "eydot",
    "w1sq_raw",
    "w2sq_raw",
    "w1sq",
    "w2sq",
    "p",
    "q",
    "lyap",
    "angle_des",
    "angle_lo",
    "angle_hi",
)

_GRID_TOL = 1e-9


def _grid_count(span: float, dt: float, what: str) -> int:
    n = round(span / dt)
    if n < 1 or abs(n * dt - span) > _GRID_TOL * max(1.0, span):
        raise ValueError(f"step {dt} must divide {what} ({span}) exactly")
    return n


@dataclass(frozen=True)
class SimConfig:
    """Everything one closed-loop run needs."""

    params: ModelParams = DEFAULT_PARAMS
    gait: GaitSchedule = PRESETS["small"]
    dt: float = 1e-3
    duration: float = 20.0
    initial_state: VehicleState = VehicleState(0.0, 0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (math.isfinite(self.duration) and self.duration >= self.dt):
            raise ValueError(f"duration must be at least one step, got {self.duration}")
        _grid_count(self.gait.half_period, self.dt, "half the gait period")
        _grid_count(self.duration, self.dt, "the duration")

    @property
    def steps_per_half(self) -> int:
        return _grid_count(self.gait.half_period, self.dt, "half the gait period")

    @property
    def n_steps(self) -> int:
        return _grid_count(self.duration, self.dt, "the duration")


class DivergenceError(RuntimeError):
    """The integration produced a non-finite state.

    Carries the time at which the step failed, the last finite state, and
    (from ``run``) the partial trajectory up to that sample.
    """

    def __init__(
        self,
        t: float,
        trajectory: "Trajectory | None" = None,
        state: VehicleState | None = None,
    ):
        super().__init__(f"state became non-finite during the step starting at t={t}")
        self.t = t
        self.trajectory = trajectory
        self.state = state


@dataclass
class Trajectory:
    """Uniformly sampled closed-loop log, one row per integrator grid point."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    ex: np.ndarray
    ey: np.ndarray
    exdot: np.ndarray
    eydot: np.ndarray
    w1sq_raw: np.ndarray
    w2sq_raw: np.ndarray
    w1sq: np.ndarray
    w2sq: np.ndarray
    p: np.ndarray
    q: np.ndarray
    lyap: np.ndarray
    angle_des: np.ndarray
    angle_lo: np.ndarray
    angle_hi: np.ndarray
    lam: np.ndarray
    ax_d: np.ndarray
    ay_d: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    @property
    def clamped(self) -> np.ndarray:
        """Per-sample flag: clamping actually altered the command."""
        return (self.w1sq_raw < 0.0) | (self.w2sq_raw < 0.0)

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def to_csv(self, path) -> None:
        from .output import write_trajectory_csv

        write_trajectory_csv(self, path)


def _controller_forces(t, x, y, vx, vy, lam, params):
    ref = reference_at(t)
    state = VehicleState(x, y, vx, vy)
    acc = desired_accel(state, ref, params)
    raw = raw_inversion(acc, lam, params)
    cmd = clamp(raw)
    ax, ay = accelerate(cmd, lam, params)
    return ax, ay


def _rk4_step(x, y, vx, vy, t, dt, lam, params):
    h2 = 0.5 * dt
    a1x, a1y = _controller_forces(t, x, y, vx, vy, lam, params)
    a2x, a2y = _controller_forces(
        t + h2, x + h2 * vx, y + h2 * vy, vx + h2 * a1x, vy + h2 * a1y, lam, params
    )
    v2x, v2y = vx + h2 * a1x, vy + h2 * a1y
    a3x, a3y = _controller_forces(
        t + h2, x + h2 * v2x, y + h2 * v2y, vx + h2 * a2x, vy + h2 * a2y, lam, params
    )
    v3x, v3y = vx + h2 * a2x, vy + h2 * a2y
    a4x, a4y = _controller_forces(
        t + dt, x + dt * v3x, y + dt * v3y, vx + dt * a3x, vy + dt * a3y, lam, params
    )
    v4x, v4y = vx + dt * a3x, vy + dt * a3y
    return (
        x + dt * (vx + 2.0 * v2x + 2.0 * v3x + v4x) / 6.0,
        y + dt * (vy + 2.0 * v2y + 2.0 * v3y + v4y) / 6.0,
        vx + dt * (a1x + 2.0 * a2x + 2.0 * a3x + a4x) / 6.0,
        vy + dt * (a1y + 2.0 * a2y + 2.0 * a3y + a4y) / 6.0,
    )


def step(state: VehicleState, t: float, config: SimConfig) -> VehicleState:
    """One RK4 step of the closed loop from ``t`` to ``t + dt``.

    The yaw is held at its value at ``t`` for the whole step; the reference
    and controller are re-evaluated at every stage.
    """
    lam = yaw_at(t, config.gait)
    try:
        nxt = _rk4_step(state.x, state.y, state.vx, state.vy, t, config.dt, lam, config.params)
        return VehicleState(*nxt)
    except (ValueError, OverflowError) as exc:
        raise DivergenceError(t, state=state) from exc


def run(config: SimConfig) -> Trajectory:
    """Integrate the closed loop over the configured horizon and log it.

    Deterministic for a fixed config. Yaw switching is decided by the step
    index, not by floating-point comparison of times, so switches always
    land exactly on grid points. On divergence the partial trajectory is
    attached to the raised error.
    """
    params, gait, dt = config.params, config.gait, config.dt
    n = config.n_steps
    m = config.steps_per_half
    size = n + 1
    cols = {
        name: np.empty(size, dtype=np.int64 if name in ("p", "q") else np.float64)
        for name in TRAJECTORY_COLUMNS
    }
    lam_col = np.empty(size)
    axd_col = np.empty(size)
    ayd_col = np.empty(size)

    x, y, vx, vy = (
        config.initial_state.x,
        config.initial_state.y,
        config.initial_state.vx,
        config.initial_state.vy,
    )

    def log_row(k, t, lam):
        ref = reference_at(t)
        state = VehicleState(x, y, vx, vy)
        acc = desired_accel(state, ref, params)
        raw = raw_inversion(acc, lam, params)
        cmd = clamp(raw)
        ey = ref.yr - y
        eydot = ref.vyr - vy
        lo, hi = feasible_cone(lam, params)
        cols["t"][k] = t
        cols["x"][k] = x
        cols["y"][k] = y
        cols["vx"][k] = vx
        cols["vy"][k] = vy
        cols["ex"][k] = ref.xr - x
        cols["ey"][k] = ey
        cols["exdot"][k] = ref.vxr - vx
        cols["eydot"][k] = eydot
        cols["w1sq_raw"][k] = raw.sq1
        cols["w2sq_raw"][k] = raw.sq2
        cols["w1sq"][k] = cmd.w1sq
        cols["w2sq"][k] = cmd.w2sq
        cols["p"][k] = 1 if raw.sq1 > 0.0 else 0
        cols["q"][k] = 1 if raw.sq2 > 0.0 else 0
        cols["lyap"][k] = 0.5 * eydot * eydot + 0.5 * params.ky2 * ey * ey
        if acc.ax_d == 0.0 and acc.ay_d == 0.0:
            cols["angle_des"][k] = math.nan
        else:
            cols["angle_des"][k] = acceleration_angle(acc.ax_d, acc.ay_d)
        cols["angle_lo"][k] = lo
        cols["angle_hi"][k] = hi
        lam_col[k] = lam
        axd_col[k] = acc.ax_d
        ayd_col[k] = acc.ay_d

    def partial(k_done):
        data = {name: cols[name][: k_done + 1] for name in TRAJECTORY_COLUMNS}
        return Trajectory(
            **data,
            lam=lam_col[: k_done + 1],
            ax_d=axd_col[: k_done + 1],
            ay_d=ayd_col[: k_done + 1],
        )

    for k in range(size):
        t = k * dt
        # yaw from the half-period index; immune to float boundary rounding
        half_index = k // m
        lam = gait.phase_sign * gait.amplitude * (1.0 if half_index % 2 == 0 else -1.0)
        log_row(k, t, lam)
        if k == n:
            break
        try:
            x, y, vx, vy = _rk4_step(x, y, vx, vy, t, dt, lam, params)
            if not (
                math.isfinite(x) and math.isfinite(y) and math.isfinite(vx) and math.isfinite(vy)
            ):
                raise ValueError("non-finite state")
        except (ValueError, OverflowError) as exc:
            raise DivergenceError(
                t, partial(k), state=VehicleState(x, y, vx, vy)
            ) from exc
    return partial(n)


@dataclass
class TrajectoryCheck:
    name: str
    applicable: bool
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "applicable": self.applicable,
            "passed": self.passed,
            "detail": self.detail,
        }


@dataclass
class VerificationReport:
    """Per-property pass/fail record for one completed run."""

    checks: list[TrajectoryCheck]
    summary: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.applicable)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "summary": self.summary,
        }


def verify_trajectory(
    traj: Trajectory,
    config: SimConfig,
    l_critical: float | None = None,
    grid_resolution: int = 200,
    lyap_tol: float = 1e-6,
) -> VerificationReport:
    """Check the logged run against the saturation-stability properties.

    (a) from the second half period on, the saturation pattern stays in the
        two-element set allowed by the yaw sign; (b) within each complete
        half period the Lyapunov log peaks at the endpoints; (c) past the
        first half-period boundary where the Lyapunov change turns
        nonnegative, the log stays below the critical level plus the 3/4
        cap; (d) the lateral error at half-period boundaries stays inside
        the union of the two capture regions. Checks (c) and (d) only apply
        to runs where clamping actually occurred; an unsaturated run
        degenerates (a) to the all-active pattern and skips them.
    """
    checks: list[TrajectoryCheck] = []
    params = config.params
    m = config.steps_per_half
    size = len(traj)
    n_half = (size - 1) // m
    saturated_run = bool(traj.clamped.any())
    empty = size <= 1 or n_half < 1

    # (a) allowed saturation patterns per yaw sign, half periods >= 1
    if empty:
        checks.append(TrajectoryCheck("switch_restriction", False, True, {"note": "empty"}))
    else:
        start = m
        neg = traj.lam[start:] < 0.0
        p, q = traj.p[start:], traj.q[start:]
        # negative yaw allows S11/S10 (first rotor active), positive S11/S01
        bad = np.where(neg, p != 1, q != 1)
        n_bad = int(bad.sum())
        checks.append(
            TrajectoryCheck(
                "switch_restriction",
                True,
                n_bad == 0,
                {"n_violations": n_bad, "n_checked": int(bad.size)},
            )
        )

    # (b) Lyapunov local maxima at half-period boundaries
    if empty:
        checks.append(TrajectoryCheck("lyapunov_local_max", False, True, {"note": "empty"}))
    else:
        worst = 0.0
        for h in range(1, n_half):
            lo, hi = h * m, (h + 1) * m
            window = traj.lyap[lo : hi + 1]
            endpoint = max(traj.lyap[lo], traj.lyap[hi])
            worst = max(worst, float(window.max() - endpoint))
        checks.append(
            TrajectoryCheck(
                "lyapunov_local_max",
                True,
                worst <= lyap_tol,
                {"max_overshoot": worst, "tolerance": lyap_tol},
            )
        )

    # boundary-state bookkeeping shared by (c) and (d)
    boundary_states = []
    for h in range(1, n_half + 1):
        k = h * m
        if k < size:
            boundary_states.append((h, float(traj.ey[k]), float(traj.eydot[k])))

    settle_h = None
    if saturated_run and not empty:
        for h in range(1, n_half):
            l_now = traj.lyap[h * m]
            l_next = traj.lyap[(h + 1) * m]
            if l_next - l_now >= 0.0:
                settle_h = h
                break

    # (c) supremum bound past the settling boundary
    if not saturated_run or empty:
        checks.append(
            TrajectoryCheck("lyapunov_sup_bound", False, True, {"note": "no clamping occurred"})
        )
    else:
        if l_critical is None:
            l_critical = critical_lyapunov(
                resolution=grid_resolution, params=params, half_period=config.gait.half_period
            ).l_critical
        bound = l_critical + DELTA_L_CAP
        tail_from = (settle_h if settle_h is not None else 1) * m
        sup_tail = float(traj.lyap[tail_from:].max())
        checks.append(
            TrajectoryCheck(
                "lyapunov_sup_bound",
                True,
                sup_tail <= bound,
                {
                    "sup_tail": sup_tail,
                    "l_critical": l_critical,
                    "bound": bound,
                    "settling_half_period": settle_h,
                },
            )
        )

    # (d) boundary states inside the union of capture regions
    if not saturated_run or empty:
        checks.append(
            TrajectoryCheck("boundary_state_capture", False, True, {"note": "no clamping occurred"})
        )
    else:
        bad_bounds = [
            h
            for h, e, ed in boundary_states
            if not (
                in_admissible_region(ErrorState(e, ed), +1, params)
                or in_admissible_region(ErrorState(e, ed), -1, params)
            )
        ]
        checks.append(
            TrajectoryCheck(
                "boundary_state_capture",
                True,
                not bad_bounds,
                {"n_boundaries": len(boundary_states), "violating_half_periods": bad_bounds[:20]},
            )
        )

    summary = {
        "saturated_run": saturated_run,
        "n_samples": size,
        "n_clamped_samples": int(traj.clamped.sum()),
        "max_abs_ex": float(np.abs(traj.ex).max()) if size else None,
        "max_abs_ey": float(np.abs(traj.ey).max()) if size else None,
        "settling_half_period": settle_h,
        "l_critical": l_critical if saturated_run else None,
    }
    return VerificationReport(checks=checks, summary=summary)
