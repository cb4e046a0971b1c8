"""Multi-modal Hybrid A* over the 4D state (x, y, heading, motion mode).

Search edges are fixed-length motion primitives (ds = v_ref * dt) inside the
current mode, plus zero-length mode switches. Near the goal every node tries a
collision-checked Reeds-Shepp connection in each available mode, cheapest
first.

Costs follow the extended Hybrid A* accumulation: path length, reverse,
steering, steering-change and direction-change penalties per primitive, and a
flat switch penalty at mode-switch nodes. The step after the root or after a
switch has no predecessor motion, so it pays no steering-change or
direction-change term. Partial primitives (terminal connections) pay the
per-primitive terms pro rata to their length.
"""
from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence


from .heuristics import HeuristicContext, h_baseline, h_euc, h_multimodal
from .kinematics import ALL_MODES, MotionMode, RobotParams, max_curvature, steer_curvature
from .rs_curves import RSPath, iter_path_samples, mode_rs, segment_length
from .world import (
    CollisionChecker,
    DistanceField,
    Footprint,
    OccupancyGrid,
    build_distance_field,
    collision_step,
    normalize_angle,
    wrap_angle,
)

log = logging.getLogger(__name__)

TWO_PI = 2 * math.pi
G_IMPROVEMENT = 1e-9
PROBE_STRIDE = 6
DYADIC = float(2**32)


@dataclass(frozen=True)
class PlanConfig:
    """Search and cost parameters.

    Penalty defaults are the reference planner weights (reverse 2, steer 1,
    steer change 1, direction change 1); the switch penalty comes from the
    robot's reference speed and switch time.
    """

    c_reverse: float = 2.0
    c_steer: float = 1.0
    c_steer_change: float = 1.0
    c_direction_change: float = 1.0
    n_steer: int = 5
    n_parallel: int = 8
    n_theta: int = 72
    r_connect: float = 5.0
    eps_parallel: float = 0.1
    modes: tuple[MotionMode, ...] = ALL_MODES
    max_iterations: int = 200_000
    analytic: bool = True
    # snap successors to their cell/bin centres (finite graph; used for audits)
    lattice: bool = False

    def __post_init__(self) -> None:
        for name in ("c_reverse", "c_steer", "c_steer_change", "c_direction_change"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.n_steer < 3 or self.n_steer % 2 == 0:
            raise ValueError("n_steer must be odd and at least 3")
        if self.n_parallel < 1:
            raise ValueError("n_parallel must be positive")
        if self.n_theta < 8:
            raise ValueError("n_theta must be at least 8")
        if not self.r_connect > 0:
            raise ValueError("r_connect must be positive")
        if self.eps_parallel < 0:
            raise ValueError("eps_parallel must be non-negative")
        modes = tuple(sorted({MotionMode(m) for m in self.modes}))
        if not modes:
            raise ValueError("mode set must not be empty")
        object.__setattr__(self, "modes", modes)

    def baseline(self) -> "PlanConfig":
        return replace(self, modes=(MotionMode.ACKERMANN,))


class State4D(NamedTuple):
    x: float
    y: float
    theta: float
    mode: MotionMode


class DiscreteKey(NamedTuple):
    ix: int
    iy: int
    itheta: int
    mode: int


class Waypoint(NamedTuple):
    """One path record; ``gear``/``steer`` describe the motion that reached it."""

    x: float
    y: float
    theta: float
    mode: int
    gear: int
    cum_length: float
    steer: float


@dataclass
class PlanResult:
    waypoints: list[Waypoint]
    total_length: float
    total_cost: float
    switch_count: int
    stats: dict = field(default_factory=dict)


class PlanningError(Exception):
    """Planning could not produce a path."""


class CollisionError(PlanningError):
    pass


class UnreachableError(PlanningError):
    pass


class SearchFailed(PlanningError):
    pass


class PrimitiveSet(NamedTuple):
    """All primitives of one mode; ``offsets[p][i]`` is the body-frame
    (dx, dy, dtheta) of sample i of primitive p, the endpoint last."""

    mode: MotionMode
    steer: tuple[float, ...]
    gear: tuple[int, ...]
    length: float
    offsets: tuple[tuple[tuple[float, float, float], ...], ...]


class Successor(NamedTuple):
    state: State4D
    gear: int
    steer: float
    length: float
    samples: tuple[tuple[float, float, float], ...]  # poses along the motion, endpoint last
    is_switch: bool


class SearchNode:
    __slots__ = ("state", "g", "f", "parent", "gear", "steer", "is_switch", "samples", "length", "key", "h_exact")

    def __init__(self, state, g, f, parent, gear, steer, is_switch, samples, length, key):
        self.state = state
        self.g = g
        self.f = f
        self.parent = parent
        self.gear = gear
        self.steer = steer
        self.is_switch = is_switch
        self.samples = samples
        self.length = length
        self.key = key
        # f uses the full heuristic (False while it holds only the h_euc bound)
        self.h_exact = True

    @property
    def resets_junction(self) -> bool:
        """True when the next motion has no predecessor motion to compare with."""
        return self.parent is None or self.is_switch


def steer_samples(params: RobotParams, n: int) -> list[float]:
    return [-params.max_steer + 2 * params.max_steer * k / (n - 1) for k in range(n)]


def parallel_directions(n: int) -> list[float]:
    return [wrap_angle(TWO_PI * k / n) for k in range(n)]


def motion_primitives(params: RobotParams, config: PlanConfig, step: float) -> dict[MotionMode, PrimitiveSet]:
    """Primitive table per mode, sampled at most ``step`` apart."""
    ds = params.step_length
    n = max(1, math.ceil(ds / step - 1e-9))
    fracs = [i / n for i in range(1, n + 1)]
    table: dict[MotionMode, PrimitiveSet] = {}
    for mode in (MotionMode.ACKERMANN, MotionMode.LATERAL):
        # lateral driving: the same arcs with the displacement turned +pi/2 in the body frame
        offset = 0.0 if mode == MotionMode.ACKERMANN else math.pi / 2
        c, s = math.cos(offset), math.sin(offset)
        steers, gears, offs = [], [], []
        for steer in steer_samples(params, config.n_steer):
            kappa = steer_curvature(params, mode, steer)
            for gear in (1, -1):
                samples = []
                for f in fracs:
                    arc = gear * ds * f
                    dpsi = kappa * arc
                    if abs(kappa) < 1e-12:
                        u, v = arc, 0.0
                    else:
                        u, v = math.sin(dpsi) / kappa, (1 - math.cos(dpsi)) / kappa
                    samples.append((c * u - s * v, s * u + c * v, dpsi))
                offs.append(tuple(samples))
                steers.append(steer)
                gears.append(gear)
        table[mode] = PrimitiveSet(mode, tuple(steers), tuple(gears), ds, tuple(offs))
    phis = parallel_directions(config.n_parallel)
    offs = tuple(tuple((ds * f * math.cos(p), ds * f * math.sin(p), 0.0) for f in fracs) for p in phis)
    table[MotionMode.PARALLEL] = PrimitiveSet(MotionMode.PARALLEL, tuple(phis), (1,) * len(phis), ds, offs)
    return table


def primitive_poses(state: Sequence[float], offsets) -> tuple[tuple[float, float, float], ...]:
    x, y, theta = state[0], state[1], state[2]
    c, s = math.cos(theta), math.sin(theta)
    return tuple(
        (x + c * dx - s * dy, y + s * dx + c * dy, normalize_angle(theta + dth)) for dx, dy, dth in offsets
    )


def discretize(state: Sequence[float], config: PlanConfig, grid: OccupancyGrid) -> DiscreteKey:
    ix, iy = grid.cell_of(state[0], state[1])
    if not grid.in_bounds(ix, iy):
        raise ValueError(f"state ({state[0]}, {state[1]}) is outside the map")
    it = min(int(math.floor(normalize_angle(state[2]) * config.n_theta / TWO_PI)), config.n_theta - 1)
    return DiscreteKey(ix, iy, it, int(state[3]))


def key_center(key: DiscreteKey, config: PlanConfig, grid: OccupancyGrid) -> State4D:
    x, y = grid.cell_center(key.ix, key.iy)
    return State4D(x, y, (key.itheta + 0.5) * TWO_PI / config.n_theta, MotionMode(key.mode))


def expand_intra(
    node: SearchNode, config: PlanConfig, params: RobotParams, primitives: Optional[dict] = None
) -> list[Successor]:
    if primitives is None:
        primitives = motion_primitives(params, config, params.step_length / 8)
    mode = node.state[3]
    prims = primitives[mode]
    out = []
    for p, offsets in enumerate(prims.offsets):
        samples = primitive_poses(node.state, offsets)
        end = samples[-1]
        out.append(Successor(State4D(end[0], end[1], end[2], mode), prims.gear[p], prims.steer[p], prims.length, samples, False))
    return out


def parallel_allowed(theta: float, goal_theta: float, config: PlanConfig) -> bool:
    return abs(wrap_angle(theta - goal_theta)) <= config.eps_parallel


def expand_inter(node: SearchNode, config: PlanConfig, goal_theta: float) -> list[Successor]:
    """Zero-length switches to every other available mode.

    Switch nodes do not switch again, and parallel movement is offered only
    when the heading already matches the goal heading.
    """
    if node.is_switch:
        return []
    x, y, theta, mode = node.state
    out = []
    for m in config.modes:
        if m == mode:
            continue
        if m == MotionMode.PARALLEL and not parallel_allowed(theta, goal_theta, config):
            continue
        out.append(Successor(State4D(x, y, theta, m), 1, 0.0, 0.0, (), True))
    return out


def motion_cost(
    length: float,
    steer: float,
    gear: int,
    prev_steer: float,
    prev_gear: int,
    reset: bool,
    config: PlanConfig,
    ds: float,
) -> float:
    """Cost of ``length`` metres of motion at constant steer and gear."""
    frac = length / ds
    cost = length + frac * (config.c_reverse * (gear < 0) + config.c_steer * abs(steer))
    if not reset:
        cost += config.c_steer_change * abs(steer - prev_steer) + config.c_direction_change * (gear != prev_gear)
    return cost


def step_cost(prev: SearchNode, succ: Successor, config: PlanConfig, params: RobotParams) -> float:
    if succ.is_switch:
        return params.switch_cost
    return motion_cost(
        succ.length, succ.steer, succ.gear, prev.steer, prev.gear, prev.resets_junction, config, params.step_length
    )


class Connection(NamedTuple):
    path: RSPath
    cost: float
    records: tuple[tuple[float, float, float, int, float], ...]  # x, y, theta, gear, steer
    switched: bool


def _tail_records(path: RSPath, start: Sequence[float], params: RobotParams, step: float):
    """Lazily yield ``(x, y, theta, gear, steer, s)`` for every sample after the start."""
    samples = iter_path_samples(path, start, step)
    next(samples)
    for smp in samples:
        if path.mode == MotionMode.PARALLEL:
            steer = path.offset
        else:
            steer = smp.steer * params.max_steer
        yield (smp.x, smp.y, smp.theta, smp.gear, steer, smp.s)


def _recorded(stream, sink: list):
    for item in stream:
        sink.append(item)
        yield item


def _segment_steer(path: RSPath, steer_sign: int, params: RobotParams) -> float:
    return path.offset if path.mode == MotionMode.PARALLEL else steer_sign * params.max_steer


def tail_cost(
    path: RSPath, prev_steer: float, prev_gear: int, reset: bool, config: PlanConfig, params: RobotParams
) -> float:
    """Accumulated cost of driving ``path`` after a motion with the given steer and gear."""
    cost = 0.0
    for seg in path.segments:
        steer = _segment_steer(path, int(seg.steer), params)
        length = segment_length(seg, path.curvature)
        cost += motion_cost(length, steer, seg.gear, prev_steer, prev_gear, reset, config, params.step_length)
        prev_steer, prev_gear, reset = steer, seg.gear, False
    return cost


def try_analytic_connect(
    node: SearchNode,
    goal: Sequence[float],
    ctx: HeuristicContext,
    config: PlanConfig,
    checker: CollisionChecker,
    params: Optional[RobotParams] = None,
) -> Optional[Connection]:
    """Cheapest collision-free Reeds-Shepp connection to the goal, or None.

    Candidates from every available mode are ranked by tail cost plus the
    switch penalty when the mode differs from the node's, then checked in
    that order.
    """
    params = params or ctx.params
    x, y, theta, mode = node.state
    step = collision_step(checker.grid)
    cands = []
    for m in config.modes:
        if m != mode and node.is_switch:
            continue
        path = mode_rs((x, y, theta), goal, m, params, config.eps_parallel)
        if path is None:
            continue
        switched = m != mode
        reset = switched or node.resets_junction
        cost = tail_cost(path, node.steer, node.gear, reset, config, params)
        if switched:
            cost += params.switch_cost
        cands.append((cost, int(m), path, switched))
    cands.sort(key=lambda c: (c[0], c[1]))
    for cost, _, path, switched in cands:
        # cheap probe on a subset of the samples rejects most blocked tails
        if not checker.all_free(iter_path_samples(path, (x, y, theta), step, PROBE_STRIDE)):
            continue
        # collect while checking so a blocked tail stops sampling at the hit
        records: list = []
        if checker.all_free(_recorded(_tail_records(path, (x, y, theta), params, step), records)):
            return Connection(path, cost, tuple(records), switched)
    return None


def quantize(v: float) -> float:
    return float(f"{v:.6f}") + 0.0


def _waypoint(x, y, theta, mode, gear, cum, steer) -> Waypoint:
    return Waypoint(quantize(x), quantize(y), quantize(normalize_angle(theta)), int(mode), int(gear), quantize(cum), quantize(steer))


def reconstruct_path(
    node: SearchNode, tail: Optional[Connection], config: PlanConfig, params: RobotParams
) -> PlanResult:
    chain = []
    seen = set()
    while node is not None:
        assert id(node) not in seen, "cyclic parent chain"
        seen.add(id(node))
        chain.append(node)
        node = node.parent
    chain.reverse()
    root = chain[0]
    x, y, theta, mode = root.state
    cum = 0.0
    wps = [_waypoint(x, y, theta, mode, 1, 0.0, 0.0)]
    for nd in chain[1:]:
        if nd.is_switch:
            wps.append(_waypoint(*nd.state[:3], nd.state[3], 1, cum, 0.0))
            continue
        n = len(nd.samples)
        for i, (sx, sy, sth) in enumerate(nd.samples, start=1):
            wps.append(_waypoint(sx, sy, sth, nd.state[3], nd.gear, cum + nd.length * i / n, nd.steer))
        cum += nd.length
    if tail is not None:
        if tail.switched:
            wps.append(_waypoint(*chain[-1].state[:3], tail.path.mode, 1, cum, 0.0))
        for rx, ry, rth, gear, steer, s in tail.records:
            wps.append(_waypoint(rx, ry, rth, tail.path.mode, gear, cum + s, steer))
    metrics = path_metrics(wps, config, params)
    return PlanResult(wps, metrics.length, metrics.cost, metrics.switches)


class PathCost(NamedTuple):
    length: float
    cost: float
    switches: int
    breakdown: dict
    non_switch: float = 0.0


def path_metrics(waypoints: Sequence[Waypoint], config: PlanConfig, params: RobotParams) -> PathCost:
    """Length and accumulated cost replayed from the waypoint records."""
    parts = dict(length=0.0, reverse=0.0, steer=0.0, steer_change=0.0, direction_change=0.0, switch=0.0)
    switches = 0
    if len(waypoints) < 2:
        return PathCost(0.0, 0.0, 0, parts)
    ds = params.step_length
    reset = True
    prev_steer, prev_gear = 0.0, 1
    for a, b in zip(waypoints, waypoints[1:]):
        if b.mode != a.mode:
            parts["switch"] += params.switch_cost
            switches += 1
            reset = True
            continue
        ell = b.cum_length - a.cum_length
        frac = ell / ds
        parts["length"] += ell
        parts["reverse"] += frac * config.c_reverse * (b.gear < 0)
        parts["steer"] += frac * config.c_steer * abs(b.steer)
        if not reset:
            parts["steer_change"] += config.c_steer_change * abs(b.steer - prev_steer)
            parts["direction_change"] += config.c_direction_change * (b.gear != prev_gear)
        prev_steer, prev_gear, reset = b.steer, b.gear, False
    # the non-switch subtotal sits on a 2**-32 grid so that adding and later
    # subtracting the switch total is exact in floating point
    non_switch = round(math.fsum(v for k, v in parts.items() if k != "switch") * DYADIC) / DYADIC
    cost = non_switch + parts["switch"]
    return PathCost(waypoints[-1].cum_length, cost, switches, parts, non_switch)


def plan(
    grid: OccupancyGrid,
    params: RobotParams,
    config: PlanConfig,
    start: Sequence[float],
    goal: Sequence[float],
    footprint: Optional[Footprint] = None,
) -> PlanResult:
    """Search for a path from ``start`` (x, y, theta, mode) to ``goal`` (x, y, theta).

    Raises :class:`CollisionError` when start or goal collide,
    :class:`UnreachableError` when the goal cell cannot be reached in the
    inflated grid and :class:`SearchFailed` when the open list empties or the
    iteration cap is hit.
    """
    t0 = time.perf_counter()
    start = State4D(float(start[0]), float(start[1]), normalize_angle(start[2]), MotionMode(start[3]))
    goal = (float(goal[0]), float(goal[1]), normalize_angle(goal[2]))
    if start.mode not in config.modes:
        raise ValueError(f"start mode {start.mode} is not in the mode set")
    fp = footprint or Footprint(params.half_length, params.half_width)
    checker = CollisionChecker(grid, fp)
    if not checker.is_pose_free(*start[:3]):
        raise CollisionError("start pose is in collision")
    if not checker.is_pose_free(*goal):
        raise CollisionError("goal pose is in collision")
    try:
        dfield = build_distance_field(grid, grid.cell_of(goal[0], goal[1]), inflate_radius=fp.half_width)
    except ValueError as exc:
        raise UnreachableError(f"goal cell blocked in the inflated grid: {exc}") from None
    ctx = HeuristicContext(dfield, params, goal, config.modes, config.eps_parallel)
    if config.modes == (MotionMode.ACKERMANN,):
        heuristic = lambda st: h_baseline(ctx, st)  # noqa: E731
    else:
        heuristic = lambda st: h_multimodal(ctx, st)  # noqa: E731
    h0 = heuristic(start)
    if math.isinf(h0):
        raise UnreachableError("goal unreachable from start in the inflated grid")

    step = collision_step(grid)
    prims = motion_primitives(params, config, step)
    goal_key = discretize((*goal, 0), config, grid)

    root_key = discretize(start, config, grid)
    root = SearchNode(start, 0.0, h0, None, 1, 0.0, False, (), 0.0, root_key)

    def identity(skey: DiscreteKey, steer: float, gear: int, is_switch: bool):
        # the lattice audit keeps one node per junction label as well, since
        # junction penalties depend on the motion that reached a cell
        return (skey, steer, gear, is_switch) if config.lattice else skey

    root_id = identity(root_key, 0.0, 1, True)
    best: dict = {root_id: root}
    counter = 0
    heap = [(h0, 0.0, root_id, counter, root)]
    stats = dict(expansions=0, open_peak=1, analytic_attempts=0, f_violations=0)
    last_f = -math.inf
    final, tail = None, None
    ds = params.step_length
    res = grid.resolution
    ox, oy = grid.origin
    width, height = grid.width, grid.height
    n_theta = config.n_theta

    def push(succ: Successor, skey: DiscreteKey, sid, g2: float, parent: SearchNode) -> None:
        nonlocal counter
        state = key_center(skey, config, grid) if config.lattice else succ.state
        # queue on the cheap h_euc bound; the full heuristic is evaluated on pop
        h2 = 0.0 if config.lattice and skey[:3] == goal_key[:3] else h_euc(ctx, state)
        if math.isinf(h2):
            return
        child = SearchNode(
            state, g2, g2 + h2, parent, succ.gear, succ.steer, succ.is_switch, succ.samples, succ.length, skey
        )
        child.h_exact = False
        best[sid] = child
        counter += 1
        heapq.heappush(heap, (child.f, g2, sid, counter, child))

    while heap:
        f, g, sid, _, node = heapq.heappop(heap)
        if best.get(sid) is not node:
            continue
        key = node.key
        if not node.h_exact:
            node.h_exact = True
            # a lattice goal cell is the goal itself, so its cost-to-go is zero
            node.f = g if config.lattice and key[:3] == goal_key[:3] else g + heuristic(node.state)
            if node.f > f:
                counter += 1
                heapq.heappush(heap, (node.f, g, sid, counter, node))
                continue
        stats["expansions"] += 1
        if stats["expansions"] > config.max_iterations:
            raise SearchFailed(f"iteration cap {config.max_iterations} reached")
        if f < last_f - 1e-9:
            stats["f_violations"] += 1
            log.debug("f decreased from %.6f to %.6f at %s", last_f, f, key)
        last_f = max(last_f, f)

        if config.lattice:
            if key[:3] == goal_key[:3]:
                final = node
                break
        elif config.analytic and h_euc(ctx, node.state) <= config.r_connect:
            stats["analytic_attempts"] += 1
            conn = try_analytic_connect(node, goal, ctx, config, checker, params)
            if conn is not None:
                final, tail = node, conn
                break

        mode = node.state[3]
        pset = prims[mode]
        reset = node.resets_junction
        x, y, theta = node.state[0], node.state[1], node.state[2]
        c, s = math.cos(theta), math.sin(theta)
        for p, offsets in enumerate(pset.offsets):
            dx, dy, dth = offsets[-1]
            ex, ey = x + c * dx - s * dy, y + s * dx + c * dy
            ix = math.floor((ex - ox) / res)
            iy = math.floor((ey - oy) / res)
            if not (0 <= ix < width and 0 <= iy < height):
                continue
            eth = normalize_angle(theta + dth)
            skey = DiscreteKey(ix, iy, min(int(eth * n_theta / TWO_PI), n_theta - 1), mode)
            steer, gear = pset.steer[p], pset.gear[p]
            g2 = g + motion_cost(pset.length, steer, gear, node.steer, node.gear, reset, config, ds)
            sid = identity(skey, steer, gear, False)
            prev = best.get(sid)
            if prev is not None and g2 >= prev.g - G_IMPROVEMENT:
                continue
            samples = primitive_poses(node.state, offsets)
            if not checker.all_free(samples):
                continue
            push(Successor(State4D(ex, ey, eth, mode), gear, steer, pset.length, samples, False), skey, sid, g2, node)
        for succ in expand_inter(node, config, goal[2]):
            skey = discretize(succ.state, config, grid)
            g2 = g + params.switch_cost
            sid = identity(skey, succ.steer, succ.gear, True)
            prev = best.get(sid)
            if prev is not None and g2 >= prev.g - G_IMPROVEMENT:
                continue
            push(succ, skey, sid, g2, node)
        stats["open_peak"] = max(stats["open_peak"], len(heap))

    if final is None:
        raise SearchFailed("open list exhausted without reaching the goal")
    result = reconstruct_path(final, tail, config, params)
    stats["search_cost"] = final.g + (tail.cost if tail else 0.0)
    stats["wall_time"] = time.perf_counter() - t0
    result.stats = stats
    return result
