"""Generators for the benchmark maps: a corridor maze and a parking lot."""
from __future__ import annotations

import random

import numpy as np

from .world import OccupancyGrid


def _fill(occ: np.ndarray, res: float, x0: float, y0: float, x1: float, y1: float) -> None:
    """Mark every cell whose centre lies in [x0, x1] x [y0, y1]."""
    i0 = int(round(x0 / res))
    i1 = int(round(x1 / res))
    j0 = int(round(y0 / res))
    j1 = int(round(y1 / res))
    occ[max(j0, 0) : max(j1, 0), max(i0, 0) : max(i1, 0)] = True


def maze_map(
    cells: int = 9,
    corridor: float = 2.0,
    wall: float = 0.2,
    resolution: float = 0.1,
    seed: int = 7,
    loops: int = 10,
) -> OccupancyGrid:
    """Square maze of ``cells`` x ``cells`` rooms joined by ``corridor``-wide openings.

    The layout is a depth-first spanning tree with ``loops`` extra openings so
    that alternative routes exist. The defaults give a 20 m x 20 m map.
    """
    rng = random.Random(seed)
    pitch = corridor + wall
    size = cells * pitch + wall
    n = int(round(size / resolution))
    occ = np.zeros((n, n), dtype=bool)
    # open[(a, b)] for adjacent rooms a, b
    opened: set[tuple[tuple[int, int], tuple[int, int]]] = set()
    seen = {(0, 0)}
    stack = [(0, 0)]
    while stack:
        cx, cy = stack[-1]
        nbrs = [
            (cx + dx, cy + dy)
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
            if 0 <= cx + dx < cells and 0 <= cy + dy < cells and (cx + dx, cy + dy) not in seen
        ]
        if not nbrs:
            stack.pop()
            continue
        nxt = rng.choice(nbrs)
        opened.add(tuple(sorted([(cx, cy), nxt])))
        seen.add(nxt)
        stack.append(nxt)
    walls = [
        ((x, y), (x + dx, y + dy))
        for x in range(cells)
        for y in range(cells)
        for dx, dy in ((1, 0), (0, 1))
        if x + dx < cells and y + dy < cells
    ]
    closed = [w for w in walls if w not in opened]
    for w in rng.sample(closed, min(loops, len(closed))):
        opened.add(w)

    # outer wall and the lattice of wall posts
    for k in range(cells + 1):
        p = k * pitch
        _fill(occ, resolution, p, 0, p + wall, size)
        _fill(occ, resolution, 0, p, size, p + wall)
    # knock out openings between connected rooms
    for (ax, ay), (bx, by) in opened:
        if bx != ax:
            p = bx * pitch
            occ_x0, occ_x1 = p, p + wall
            y0 = ay * pitch + wall
            _clear(occ, resolution, occ_x0, y0, occ_x1, y0 + corridor)
        else:
            p = by * pitch
            x0 = ax * pitch + wall
            _clear(occ, resolution, x0, p, x0 + corridor, p + wall)
    return OccupancyGrid(resolution, (0.0, 0.0), occ)


def _clear(occ: np.ndarray, res: float, x0: float, y0: float, x1: float, y1: float) -> None:
    occ[int(round(y0 / res)) : int(round(y1 / res)), int(round(x0 / res)) : int(round(x1 / res))] = False


def parking_map(resolution: float = 0.1) -> OccupancyGrid:
    """A 16 m x 10 m lot: perimeter wall, one lane, a row of perpendicular
    slots on each side and a kerb-side row of parallel spaces.

    Parked vehicles (1.0 m x 0.62 m, like the robot) fill most slots; the
    free ones are the planning targets.
    """
    w, h = 16.0, 10.0
    occ = np.zeros((int(round(h / resolution)), int(round(w / resolution))), dtype=bool)
    # perimeter
    _fill(occ, resolution, 0, 0, w, 0.2)
    _fill(occ, resolution, 0, h - 0.2, w, h)
    _fill(occ, resolution, 0, 0, 0.2, h)
    _fill(occ, resolution, w - 0.2, 0, w, h)
    # perpendicular slots along the bottom: 1.0 m wide, 1.5 m deep, posts between
    slot_w = 1.0
    for k in range(14):
        x = 1.0 + k * slot_w
        _fill(occ, resolution, x - 0.05, 0.2, x + 0.05, 1.6)
        if k not in (4, 11) and k < 13:
            # parked car nose-in, centred in the slot
            cx = x + slot_w / 2
            _fill(occ, resolution, cx - 0.3, 0.4, cx + 0.3, 1.4)
    # central island separating the two lanes
    _fill(occ, resolution, 2.0, 4.6, 14.0, 5.4)
    # kerb-side parallel spaces along the top wall: cars 1.0 long, 0.6 deep
    for x0 in (1.0, 2.6, 6.4, 8.0, 9.6, 13.2):
        _fill(occ, resolution, x0, h - 0.9, x0 + 1.0, h - 0.2)
    return OccupancyGrid(resolution, (0.0, 0.0), occ)
