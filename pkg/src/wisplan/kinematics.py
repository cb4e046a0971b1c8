"""Four-wheel independent steering (4WIS) geometry and wheel-level kinematics.

Wheels are indexed 1..4 = front-left, front-right, rear-left, rear-right and
stored in that order in every 4-tuple below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple


class MotionMode(IntEnum):
    ACKERMANN = 1
    LATERAL = 2
    PARALLEL = 3


ALL_MODES: tuple[MotionMode, ...] = (MotionMode.ACKERMANN, MotionMode.LATERAL, MotionMode.PARALLEL)


@dataclass(frozen=True)
class RobotParams:
    """Geometric and kinematic constants of the robot.

    Defaults are the values of the reference 4WIS platform (1.00 m x 0.62 m body,
    0.68 m wheelbase, 0.52 m track, 30 deg steering limit).
    """

    half_length: float = 0.50
    half_width: float = 0.31
    wheelbase: float = 0.68
    track_width: float = 0.52
    max_steer: float = math.radians(30.0)
    max_steer_rate: float = math.radians(180.0)
    wheel_radius: float = 0.13
    v_ref: float = 1.0
    dt: float = 0.4
    t_switch: float = 1.0

    def __post_init__(self) -> None:
        for name in ("half_length", "half_width", "wheelbase", "track_width", "wheel_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.wheelbase > 2 * self.half_length:
            raise ValueError("wheelbase exceeds body length")
        if self.track_width > 2 * self.half_width:
            raise ValueError("track width exceeds body width")
        if not 0 < self.max_steer < math.pi / 2:
            raise ValueError("max_steer must lie in (0, pi/2)")
        if not (self.max_steer_rate > 0 and self.v_ref > 0 and self.dt > 0):
            raise ValueError("max_steer_rate, v_ref and dt must be positive")
        if self.t_switch < 0:
            raise ValueError("t_switch must be non-negative")

    @property
    def step_length(self) -> float:
        """Primitive length ds = v_ref * dt."""
        return self.v_ref * self.dt

    @property
    def switch_cost(self) -> float:
        """Mode-switch penalty C_switch = v_ref * t_switch (metres)."""
        return self.v_ref * self.t_switch


class WheelCommand(NamedTuple):
    angles: tuple[float, float, float, float]
    speeds: tuple[float, float, float, float]


class BodyTwist(NamedTuple):
    xdot: float
    ydot: float
    thetadot: float


def wheel_positions(params: RobotParams) -> tuple[tuple[float, float], ...]:
    half_l, half_w = params.wheelbase / 2, params.track_width / 2
    return tuple(
        ((-1) ** ((i - 1) // 2) * half_l, (-1) ** (i - 1) * half_w) for i in range(1, 5)
    )


def forward_kinematics(params: RobotParams, cmd: WheelCommand, theta: float) -> BodyTwist:
    """World-frame body twist averaged over the four wheels.

    Each wheel contributes with its own speed, so commands with unequal wheel
    speeds (Ackermann, lateral) are handled directly.
    """
    xs, ys, ts = [], [], []
    for (xr, yr), eta, v in zip(wheel_positions(params), cmd.angles, cmd.speeds):
        xs.append(v * math.cos(eta + theta))
        ys.append(v * math.sin(eta + theta))
        ts.append(v * (-yr * math.cos(eta) + xr * math.sin(eta)) / (4 * (xr * xr + yr * yr)))
    # exact sums so that mirrored wheel terms cancel to zero
    return BodyTwist(math.fsum(xs) / 4, math.fsum(ys) / 4, math.fsum(ts))


def _ackermann_angles(base: float, track: float, v: float, eta: float) -> WheelCommand:
    if eta == 0.0:
        return WheelCommand((0.0, 0.0, 0.0, 0.0), (v, v, v, v))
    # cot(eta_1,2) = cot(eta) -/+ track/base and v_i = v tan(eta) / sin(eta_i),
    # multiplied through by t = tan(eta) so that small angles stay finite
    t = math.tan(eta)
    c1 = 1 - t * track / base
    c2 = 1 + t * track / base
    eta1, eta2 = math.atan2(t, c1), math.atan2(t, c2)
    v1, v2 = v * math.hypot(t, c1), v * math.hypot(t, c2)
    return WheelCommand((eta1, eta2, -eta1, -eta2), (v1, v2, v1, v2))


def ackermann_wheel_command(params: RobotParams, v: float, eta: float) -> WheelCommand:
    """Counter-steered Ackermann command for virtual steer ``eta``."""
    if abs(eta) > params.max_steer + 1e-12:
        raise ValueError(f"steer {eta} exceeds limit {params.max_steer}")
    return _ackermann_angles(params.wheelbase, params.track_width, v, eta)


def lateral_wheel_command(params: RobotParams, v: float, eta: float) -> WheelCommand:
    """Ackermann geometry about the body-lateral axis: wheelbase and track swap
    roles and every wheel is turned a further +pi/2."""
    if abs(eta) > params.max_steer + 1e-12:
        raise ValueError(f"steer {eta} exceeds limit {params.max_steer}")
    cmd = _ackermann_angles(params.track_width, params.wheelbase, v, eta)
    return WheelCommand(tuple(a + math.pi / 2 for a in cmd.angles), cmd.speeds)


def _sgn(x: float) -> float:
    return (x > 0) - (x < 0)


def parallel_wheel_command(params: RobotParams, v: float, eta: float) -> WheelCommand:
    """Parallel-movement command with the mirrored right-side angle convention
    (right wheels report sgn(eta) * (pi - |eta|))."""
    if abs(eta) > math.pi:
        raise ValueError("parallel direction must lie in [-pi, pi]")
    right = _sgn(eta) * (math.pi - abs(eta))
    return WheelCommand((eta, right, eta, right), (v, v, v, v))


def crab_wheel_command(params: RobotParams, v: float, eta: float) -> WheelCommand:
    """Physical crab command: every wheel at ``eta`` in the common body frame."""
    return WheelCommand((eta, eta, eta, eta), (v, v, v, v))


def max_curvature(params: RobotParams, mode: MotionMode) -> float:
    mode = MotionMode(mode)
    if mode is MotionMode.ACKERMANN:
        return 2 * math.tan(params.max_steer) / params.wheelbase
    if mode is MotionMode.LATERAL:
        return 2 * math.tan(params.max_steer) / params.track_width
    # translation curvature bounded by the steering rate at reference speed
    return params.max_steer_rate / params.v_ref


def steer_curvature(params: RobotParams, mode: MotionMode, steer: float) -> float:
    """Heading rate per metre travelled for virtual steer ``steer`` (modes 1, 2)."""
    base = params.wheelbase if mode == MotionMode.ACKERMANN else params.track_width
    return 2 * math.tan(steer) / base


def curvature_steer(params: RobotParams, mode: MotionMode, kappa: float) -> float:
    base = params.wheelbase if mode == MotionMode.ACKERMANN else params.track_width
    return math.atan(kappa * base / 2)
