"""Reeds-Shepp shortest paths and their per-mode variants.

The solver works on a unit-curvature, start-relative goal ``(x, y, phi)`` and
tries the closed-form solutions of every word family (CSC, CCC, CCCC, CCSC,
CCSCC) under time-flip, reflection and backwards symmetry. Segment parameters
are signed: the sign is the gear.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Iterator, NamedTuple, Optional, Sequence

from .kinematics import MotionMode, RobotParams, max_curvature
from .world import normalize_angle, wrap_angle

PI = math.pi
HALF_PI = 0.5 * math.pi
TWO_PI = 2 * math.pi
ZERO = 10 * 2.220446049250313e-16
# segments shorter than this (unit space) are dropped from returned paths
MIN_EXTENT = 1e-10
DEFAULT_EPS_PARALLEL = 0.1


class Steer(IntEnum):
    RIGHT = -1
    STRAIGHT = 0
    LEFT = 1


_L, _S, _R = Steer.LEFT, Steer.STRAIGHT, Steer.RIGHT

# word family table; the index doubles as the deterministic tie-break key
WORDS: tuple[tuple[Steer, ...], ...] = (
    (_L, _R, _L),
    (_R, _L, _R),
    (_L, _R, _L, _R),
    (_R, _L, _R, _L),
    (_L, _R, _S, _L),
    (_R, _L, _S, _R),
    (_L, _S, _R, _L),
    (_R, _S, _L, _R),
    (_L, _R, _S, _R),
    (_R, _L, _S, _L),
    (_R, _S, _R, _L),
    (_L, _S, _L, _R),
    (_L, _S, _R),
    (_R, _S, _L),
    (_L, _S, _L),
    (_R, _S, _R),
    (_L, _R, _S, _L, _R),
    (_R, _L, _S, _R, _L),
)


class RSSegment(NamedTuple):
    steer: Steer
    gear: int
    extent: float  # radians for turns, metres for straights


class PoseDelta(NamedTuple):
    x: float
    y: float
    theta: float

    @classmethod
    def between(cls, start: Sequence[float], goal: Sequence[float], offset: float = 0.0) -> "PoseDelta":
        """Goal expressed in the frame of ``start`` whose x axis points along
        ``start.theta + offset``."""
        psi = start[2] + offset
        dx, dy = goal[0] - start[0], goal[1] - start[1]
        c, s = math.cos(psi), math.sin(psi)
        return cls(c * dx + s * dy, -s * dx + c * dy, normalize_angle(goal[2] - start[2]))


@dataclass(frozen=True)
class RSPath:
    """A solved connection.

    ``offset`` is the angle of the driving axis relative to the body heading:
    0 for Ackermann, +pi/2 for lateral steering, the translation direction for
    parallel movement (whose single straight segment keeps the heading fixed).
    """

    mode: MotionMode
    curvature: float
    segments: tuple[RSSegment, ...]
    offset: float = 0.0
    family: int = -1

    @property
    def total_length(self) -> float:
        return sum(segment_length(s, self.curvature) for s in self.segments)

    @property
    def frame(self) -> str:
        return {MotionMode.ACKERMANN: "identity", MotionMode.LATERAL: "lateral"}.get(self.mode, "translation")


def segment_length(seg: RSSegment, curvature: float) -> float:
    return seg.extent if seg.steer == Steer.STRAIGHT else seg.extent / curvature


def _mod2pi(x: float) -> float:
    v = math.fmod(x, TWO_PI)
    if v < -PI:
        v += TWO_PI
    elif v > PI:
        v -= TWO_PI
    return v


def _polar(x: float, y: float) -> tuple[float, float]:
    return math.hypot(x, y), math.atan2(y, x)


def _tau_omega(u: float, v: float, xi: float, eta: float, phi: float) -> tuple[float, float]:
    delta = _mod2pi(u - v)
    a = math.sin(u) - math.sin(delta)
    b = math.cos(u) - math.cos(delta) - 1.0
    t1 = math.atan2(eta * a - xi * b, xi * a + eta * b)
    t2 = 2.0 * (math.cos(delta) - math.cos(v) - math.cos(u)) + 3.0
    tau = _mod2pi(t1 + PI) if t2 < 0 else _mod2pi(t1)
    return tau, _mod2pi(tau - u + v - phi)


def _lp_sp_lp(x, y, phi):
    u, t = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    if t >= -ZERO:
        v = _mod2pi(phi - t)
        if v >= -ZERO:
            return t, u, v
    return None


def _lp_sp_rp(x, y, phi):
    u1, t1 = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    u1 = u1 * u1
    if u1 >= 4.0:
        u = math.sqrt(u1 - 4.0)
        t = _mod2pi(t1 + math.atan2(2.0, u))
        v = _mod2pi(t - phi)
        if t >= -ZERO and v >= -ZERO:
            return t, u, v
    return None


def _lp_rm_l(x, y, phi):
    u1, theta = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    if u1 <= 4.0:
        u = -2.0 * math.asin(0.25 * u1)
        t = _mod2pi(theta + 0.5 * u + PI)
        v = _mod2pi(phi - t + u)
        if t >= -ZERO and u <= ZERO:
            return t, u, v
    return None


def _lp_rup_lum_rm(x, y, phi):
    xi, eta = x + math.sin(phi), y - 1.0 - math.cos(phi)
    rho = 0.25 * (2.0 + math.hypot(xi, eta))
    if rho <= 1.0:
        u = math.acos(rho)
        t, v = _tau_omega(u, -u, xi, eta, phi)
        if t >= -ZERO and v <= ZERO:
            return t, u, v
    return None


def _lp_rum_lum_rp(x, y, phi):
    xi, eta = x + math.sin(phi), y - 1.0 - math.cos(phi)
    rho = (20.0 - xi * xi - eta * eta) / 16.0
    if 0.0 <= rho <= 1.0:
        u = -math.acos(rho)
        if u >= -HALF_PI:
            t, v = _tau_omega(u, u, xi, eta, phi)
            if t >= -ZERO and v >= -ZERO:
                return t, u, v
    return None


def _lp_rm_sm_lm(x, y, phi):
    rho, theta = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    if rho >= 2.0:
        r = math.sqrt(rho * rho - 4.0)
        u = 2.0 - r
        t = _mod2pi(theta + math.atan2(r, -2.0))
        v = _mod2pi(phi - HALF_PI - t)
        if t >= -ZERO and u <= ZERO and v <= ZERO:
            return t, u, v
    return None


def _lp_rm_sm_rm(x, y, phi):
    xi, eta = x + math.sin(phi), y - 1.0 - math.cos(phi)
    rho, theta = _polar(-eta, xi)
    if rho >= 2.0:
        t = theta
        u = 2.0 - rho
        v = _mod2pi(t + HALF_PI - phi)
        if t >= -ZERO and u <= ZERO and v <= ZERO:
            return t, u, v
    return None


def _lp_rm_s_lm_rp(x, y, phi):
    xi, eta = x + math.sin(phi), y - 1.0 - math.cos(phi)
    rho, _ = _polar(xi, eta)
    if rho >= 2.0:
        u = 4.0 - math.sqrt(rho * rho - 4.0)
        if u <= ZERO:
            t = _mod2pi(math.atan2((4.0 - u) * xi - 2.0 * eta, -2.0 * xi + (u - 4.0) * eta))
            v = _mod2pi(t - phi)
            if t >= -ZERO and v >= -ZERO:
                return t, u, v
    return None


def _candidates(x: float, y: float, phi: float) -> Iterator[tuple[int, tuple[float, ...]]]:
    """Yield ``(word index, signed segment parameters)`` for every feasible word."""
    # the four symmetric query variants: identity, time-flip, reflect, both
    variants = ((x, y, phi, 1.0, False), (-x, y, -phi, -1.0, False), (x, -y, -phi, 1.0, True), (-x, -y, phi, -1.0, True))
    c, s = math.cos(phi), math.sin(phi)
    xb, yb = x * c + y * s, x * s - y * c
    back = ((xb, yb, phi, 1.0, False), (-xb, yb, -phi, -1.0, False), (xb, -yb, -phi, 1.0, True), (-xb, -yb, phi, -1.0, True))

    for qx, qy, qp, sg, refl in variants:
        r = _lp_sp_lp(qx, qy, qp)
        if r:
            yield 15 if refl else 14, (sg * r[0], sg * r[1], sg * r[2])
        r = _lp_sp_rp(qx, qy, qp)
        if r:
            yield 13 if refl else 12, (sg * r[0], sg * r[1], sg * r[2])
    for qx, qy, qp, sg, refl in variants:
        r = _lp_rm_l(qx, qy, qp)
        if r:
            yield 1 if refl else 0, (sg * r[0], sg * r[1], sg * r[2])
    for qx, qy, qp, sg, refl in back:
        r = _lp_rm_l(qx, qy, qp)
        if r:
            yield 1 if refl else 0, (sg * r[2], sg * r[1], sg * r[0])
    for qx, qy, qp, sg, refl in variants:
        r = _lp_rup_lum_rm(qx, qy, qp)
        if r:
            yield 3 if refl else 2, (sg * r[0], sg * r[1], -sg * r[1], sg * r[2])
        r = _lp_rum_lum_rp(qx, qy, qp)
        if r:
            yield 3 if refl else 2, (sg * r[0], sg * r[1], sg * r[1], sg * r[2])
    for qx, qy, qp, sg, refl in variants:
        r = _lp_rm_sm_lm(qx, qy, qp)
        if r:
            yield 5 if refl else 4, (sg * r[0], -sg * HALF_PI, sg * r[1], sg * r[2])
        r = _lp_rm_sm_rm(qx, qy, qp)
        if r:
            yield 9 if refl else 8, (sg * r[0], -sg * HALF_PI, sg * r[1], sg * r[2])
    for qx, qy, qp, sg, refl in back:
        r = _lp_rm_sm_lm(qx, qy, qp)
        if r:
            yield 7 if refl else 6, (sg * r[2], sg * r[1], -sg * HALF_PI, sg * r[0])
        r = _lp_rm_sm_rm(qx, qy, qp)
        if r:
            yield 11 if refl else 10, (sg * r[2], sg * r[1], -sg * HALF_PI, sg * r[0])
    for qx, qy, qp, sg, refl in variants:
        r = _lp_rm_s_lm_rp(qx, qy, qp)
        if r:
            yield 17 if refl else 16, (sg * r[0], -sg * HALF_PI, sg * r[1], -sg * HALF_PI, sg * r[2])


def _word_key(family: int, params: tuple[float, ...]) -> tuple[float, int, int]:
    length = sum(abs(p) for p in params)
    nseg = sum(1 for p in params if abs(p) > MIN_EXTENT)
    return length, nseg, family


def rs_unit_length(x: float, y: float, phi: float) -> float:
    """Shortest unit-curvature Reeds-Shepp length for a start-relative goal."""
    best = math.inf
    for _, params in _candidates(x, y, phi):
        length = sum(abs(p) for p in params)
        if length < best:
            best = length
    return best


def rs_length(delta: PoseDelta, curvature: float) -> float:
    k = curvature
    return rs_unit_length(delta.x * k, delta.y * k, delta.theta) / k


def rs_shortest(delta: PoseDelta, curvature: float, mode: MotionMode = MotionMode.ACKERMANN) -> RSPath:
    """Minimum-length Reeds-Shepp path for ``delta`` at the given curvature.

    Equal-length words are ranked by segment count, then word index.
    """
    if not curvature > 0:
        raise ValueError("curvature must be positive")
    k = curvature
    cands = [(_word_key(fam, p), fam, p) for fam, p in _candidates(delta.x * k, delta.y * k, delta.theta)]
    best_len = min(c[0][0] for c in cands)
    _, family, params = min(c for c in cands if c[0][0] <= best_len + 1e-10)
    segments = []
    for steer, p in zip(WORDS[family], params):
        if abs(p) <= MIN_EXTENT:
            continue
        extent = abs(p) / k if steer == Steer.STRAIGHT else abs(p)
        segments.append(RSSegment(steer, 1 if p > 0 else -1, extent))
    if len(segments) == 1 and segments[0].steer == Steer.STRAIGHT:
        # a lone straight is the displacement itself; skip the scaling round trip
        segments[0] = segments[0]._replace(extent=math.hypot(delta.x, delta.y))
    return RSPath(MotionMode(mode), k, tuple(segments), _mode_offset(mode), family)


def _mode_offset(mode: MotionMode) -> float:
    return HALF_PI if mode == MotionMode.LATERAL else 0.0


def integrate_segment(
    x: float, y: float, psi: float, seg: RSSegment, curvature: float, s: float
) -> tuple[float, float, float]:
    """Advance the driving-axis pose ``(x, y, psi)`` by arc length ``s`` (m) along ``seg``."""
    if seg.steer == Steer.STRAIGHT:
        d = seg.gear * s
        return x + d * math.cos(psi), y + d * math.sin(psi), psi
    sk = seg.steer * curvature
    dpsi = seg.gear * sk * s
    return (
        x + (math.sin(psi + dpsi) - math.sin(psi)) / sk,
        y + (math.cos(psi) - math.cos(psi + dpsi)) / sk,
        psi + dpsi,
    )


def path_endpoint(path: RSPath, start: Sequence[float]) -> tuple[float, float, float]:
    x, y, psi = start[0], start[1], start[2] + path.offset
    for seg in path.segments:
        x, y, psi = integrate_segment(x, y, psi, seg, path.curvature, segment_length(seg, path.curvature))
    return x, y, normalize_angle(psi - path.offset)


def mode_rs(
    start: Sequence[float],
    goal: Sequence[float],
    mode: MotionMode,
    params: RobotParams,
    eps_parallel: float = DEFAULT_EPS_PARALLEL,
) -> Optional[RSPath]:
    """Connection from ``start`` to ``goal`` under one motion mode's constraints.

    Parallel movement is only available when the two headings agree within
    ``eps_parallel``; it is a single straight translation at fixed heading.
    """
    mode = MotionMode(mode)
    if mode == MotionMode.PARALLEL:
        if abs(wrap_angle(start[2] - goal[2])) > eps_parallel:
            return None
        dx, dy = goal[0] - start[0], goal[1] - start[1]
        dist = math.hypot(dx, dy)
        kappa = max_curvature(params, mode)
        if dist <= MIN_EXTENT:
            return RSPath(mode, kappa, (), 0.0)
        phi = wrap_angle(math.atan2(dy, dx) - start[2])
        return RSPath(mode, kappa, (RSSegment(Steer.STRAIGHT, 1, dist),), phi)
    offset = _mode_offset(mode)
    delta = PoseDelta.between(start, goal, offset)
    path = rs_shortest(delta, max_curvature(params, mode), mode)
    if len(path.segments) == 1 and path.segments[0].steer == Steer.STRAIGHT:
        seg = path.segments[0]._replace(extent=math.hypot(goal[0] - start[0], goal[1] - start[1]))
        path = replace(path, segments=(seg,))
    return path


def mode_rs_length(
    start: Sequence[float],
    goal: Sequence[float],
    mode: MotionMode,
    params: RobotParams,
    eps_parallel: float = DEFAULT_EPS_PARALLEL,
) -> Optional[float]:
    """Length of :func:`mode_rs` without building the path."""
    if mode == MotionMode.PARALLEL:
        if abs(wrap_angle(start[2] - goal[2])) > eps_parallel:
            return None
        return math.hypot(goal[0] - start[0], goal[1] - start[1])
    delta = PoseDelta.between(start, goal, _mode_offset(mode))
    return rs_length(delta, max_curvature(params, mode))


class PathSample(NamedTuple):
    x: float
    y: float
    theta: float
    gear: int
    steer: int  # Steer sign of the segment the sample ends
    segment: int  # index into path.segments, -1 for the start sample
    s: float  # cumulative arc length (m)


def iter_path_samples(
    path: RSPath, start: Sequence[float], step: float, stride: int = 1
) -> Iterator[PathSample]:
    """Samples spaced evenly within each segment, at most ``step`` apart.

    With ``stride`` > 1 only every stride-th sample of each segment (and the
    segment end) is produced, a subset of the full sequence.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    x0, y0, psi0 = float(start[0]), float(start[1]), float(start[2]) + path.offset
    # parallel paths translate along ``offset`` but keep the body heading
    fixed_heading = path.mode == MotionMode.PARALLEL
    heading0 = float(start[2])
    yield PathSample(x0, y0, normalize_angle(heading0), 0, 0, -1, 0.0)
    total = 0.0
    for idx, seg in enumerate(path.segments):
        length = segment_length(seg, path.curvature)
        n = max(1, math.ceil(length / step - 1e-9))
        for i in range(1, n + 1):
            if i % stride and i != n:
                continue
            x, y, psi = integrate_segment(x0, y0, psi0, seg, path.curvature, length * i / n)
            theta = heading0 if fixed_heading else normalize_angle(psi - path.offset)
            yield PathSample(x, y, theta, seg.gear, int(seg.steer), idx, total + length * i / n)
        x0, y0, psi0 = integrate_segment(x0, y0, psi0, seg, path.curvature, length)
        total += length


def sample_path_detailed(path: RSPath, start: Sequence[float], step: float) -> list[PathSample]:
    return list(iter_path_samples(path, start, step))


def sample_path(path: RSPath, start: Sequence[float], step: float) -> list[tuple[float, float, float]]:
    return [(p.x, p.y, p.theta) for p in sample_path_detailed(path, start, step)]
