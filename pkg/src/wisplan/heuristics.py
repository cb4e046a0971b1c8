"""Cost-to-go estimates for the multi-modal search.

All costs are in metres: at the reference speed a switch time converts to an
equivalent distance, so switch penalties and path length add directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .kinematics import MotionMode, RobotParams, max_curvature
from .rs_curves import DEFAULT_EPS_PARALLEL, mode_rs_length
from .world import DistanceField, wrap_angle

# worst-case ratio of 8-connected (octile) length to straight-line length
OCTILE_FACTOR = math.sqrt(4 - 2 * math.sqrt(2))


@dataclass(frozen=True, eq=False)
class HeuristicContext:
    field: DistanceField
    params: RobotParams
    goal: tuple[float, float, float]
    modes: tuple[MotionMode, ...] = (MotionMode.ACKERMANN, MotionMode.LATERAL, MotionMode.PARALLEL)
    eps_parallel: float = DEFAULT_EPS_PARALLEL

    def __post_init__(self) -> None:
        if not self.modes:
            raise ValueError("mode set must not be empty")
        object.__setattr__(self, "modes", tuple(MotionMode(m) for m in self.modes))
        object.__setattr__(self, "goal", tuple(float(v) for v in self.goal[:3]))
        res = self.field.resolution
        ox, oy = self.field.origin
        gx, gy = self.goal[0], self.goal[1]
        cx = ox + (math.floor((gx - ox) / res) + 0.5) * res
        cy = oy + (math.floor((gy - oy) / res) + 0.5) * res
        object.__setattr__(self, "_goal_offset", math.hypot(gx - cx, gy - cy))
        # RS length never exceeds straight-line distance + (2 + 2 pi) R: take the
        # left turning circles at both poses, join them by their outer tangent
        # (centre distance <= d + 2R) and drive each arc in whichever gear
        # keeps it <= pi. Past that margin the 2D term dominates.
        object.__setattr__(
            self,
            "_rs_margin",
            {m: (2 + 2 * math.pi) / max_curvature(self.params, m) for m in MotionMode},
        )

    @property
    def c_switch(self) -> float:
        return self.params.switch_cost


def h_euc(ctx: HeuristicContext, state: Sequence[float]) -> float:
    """Obstacle-aware 2D lower bound on the remaining path length.

    The distance field is an 8-connected path length between cell centres, so
    it is scaled down by the worst octile/Euclidean ratio and corrected for
    the offsets of both poses from their cell centres; the straight-line
    distance is always a valid floor.
    """
    x, y = state[0], state[1]
    gx, gy = ctx.goal[0], ctx.goal[1]
    straight = math.hypot(gx - x, gy - y)
    f = ctx.field
    res = f.resolution
    ix = math.floor((x - f.origin[0]) / res)
    iy = math.floor((y - f.origin[1]) / res)
    d = f.at_cell(ix, iy)
    if math.isinf(d):
        return math.inf
    cx = f.origin[0] + (ix + 0.5) * res
    cy = f.origin[1] + (iy + 0.5) * res
    grid_bound = d / OCTILE_FACTOR - math.hypot(x - cx, y - cy) - ctx._goal_offset
    return max(straight, grid_bound)


def h_rs_mode(ctx: HeuristicContext, state: Sequence[float], mode: MotionMode) -> Optional[float]:
    return mode_rs_length(state, ctx.goal, mode, ctx.params, ctx.eps_parallel)


def _rs_cannot_dominate(ctx: HeuristicContext, state: Sequence[float], he: float, mode: MotionMode) -> bool:
    # the mode's RS length is at most straight-line distance + margin, so
    # when h_euc already exceeds that the max is h_euc
    straight = math.hypot(ctx.goal[0] - state[0], ctx.goal[1] - state[1])
    return he >= straight + ctx._rs_margin[mode]


def h_baseline(ctx: HeuristicContext, state: Sequence[float]) -> float:
    he = h_euc(ctx, state)
    if math.isinf(he) or _rs_cannot_dominate(ctx, state, he, MotionMode.ACKERMANN):
        return he
    return max(he, h_rs_mode(ctx, state, MotionMode.ACKERMANN))


def combine_multimodal(
    he: float, rs_terms: dict, mode: MotionMode, c_switch: float
) -> float:
    """Combine a 2D bound and per-mode RS lengths (None = mode unavailable)."""
    candidates = [rs + (c_switch if m != mode else 0.0) for m, rs in rs_terms.items() if rs is not None]
    return max(he, min(candidates)) if candidates else he


def multimodal_rs_term(ctx: HeuristicContext, state: Sequence[float], mode: MotionMode) -> Optional[float]:
    """min over available modes of RS length plus switch penalty; None when every
    mode is gated off."""
    terms = [
        rs + (ctx.c_switch if m != mode else 0.0)
        for m in ctx.modes
        if (rs := h_rs_mode(ctx, state, m)) is not None
    ]
    return min(terms) if terms else None


def h_multimodal(ctx: HeuristicContext, state: Sequence[float], mode: Optional[MotionMode] = None) -> float:
    """max(h_euc, min_m' [h_RS(m') + C_switch * (m != m')]).

    ``state`` is ``(x, y, theta, mode)``; ``mode`` overrides the fourth entry.
    """
    mode = MotionMode(state[3] if mode is None else mode)
    he = h_euc(ctx, state)
    if math.isinf(he):
        return he
    # exact shortcut: every available RS term is bounded above by
    # straight-line distance + margin, so past the smallest bound h_euc wins
    straight = math.hypot(ctx.goal[0] - state[0], ctx.goal[1] - state[1])
    bound = math.inf
    for m in ctx.modes:
        extra = 0.0 if m == mode else ctx.c_switch
        if m == MotionMode.PARALLEL:
            if abs(wrap_angle(state[2] - ctx.goal[2])) <= ctx.eps_parallel:
                bound = min(bound, straight + extra)
        else:
            bound = min(bound, straight + ctx._rs_margin[m] + extra)
    if he >= bound:
        return he
    # current mode first; a term can only matter while the running minimum
    # is above h_euc, and a mode whose lower bound (straight-line distance or
    # pure turning) cannot beat the minimum is skipped
    dtheta = abs(wrap_angle(ctx.goal[2] - state[2]))
    best = math.inf
    for m in sorted(ctx.modes, key=lambda m: m != mode):
        extra = 0.0 if m == mode else ctx.c_switch
        if m != MotionMode.PARALLEL:
            lower = max(straight, dtheta / max_curvature(ctx.params, m)) + extra
            if lower >= best:
                continue
        rs = h_rs_mode(ctx, state, m)
        if rs is None:
            continue
        best = min(best, rs + extra)
        if best <= he:
            return he
    return he if math.isinf(best) else max(he, best)
