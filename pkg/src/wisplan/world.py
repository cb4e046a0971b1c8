"""Occupancy grid, rectangular footprint collision checks and the 2D distance field."""
from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

TWO_PI = 2 * math.pi


def normalize_angle(theta: float) -> float:
    """Map an angle to [0, 2*pi)."""
    theta = math.fmod(theta, TWO_PI)
    if theta < 0:
        theta += TWO_PI
    # fmod of a tiny negative value can round up to exactly 2*pi
    return 0.0 if theta >= TWO_PI else theta


def normalize_angles(theta: np.ndarray) -> np.ndarray:
    """Array version of :func:`normalize_angle` (same rounding)."""
    t = np.fmod(theta, TWO_PI)
    t = np.where(t < 0, t + TWO_PI, t)
    return np.where(t >= TWO_PI, 0.0, t)


def wrap_angle(theta: float) -> float:
    """Map an angle to (-pi, pi]."""
    theta = normalize_angle(theta)
    return theta - TWO_PI if theta > math.pi else theta


class Pose(NamedTuple):
    x: float
    y: float
    theta: float

    @classmethod
    def of(cls, x: float, y: float, theta: float) -> "Pose":
        return cls(float(x), float(y), normalize_angle(theta))


@dataclass(frozen=True)
class Footprint:
    half_length: float
    half_width: float

    def __post_init__(self) -> None:
        if not (self.half_length > 0 and self.half_width > 0):
            raise ValueError("footprint half extents must be positive")

    def corners(self, x: float, y: float, theta: float) -> list[tuple[float, float]]:
        c, s = math.cos(theta), math.sin(theta)
        out = []
        for u, v in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
            bx, by = u * self.half_length, v * self.half_width
            out.append((x + c * bx - s * by, y + s * bx + c * by))
        return out


class MapParseError(ValueError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Static grid; ``occupied[iy, ix]`` with iy = 0 the lowest row in y."""

    resolution: float
    origin: tuple[float, float]
    occupied: np.ndarray

    def __post_init__(self) -> None:
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        occ = np.asarray(self.occupied, dtype=bool)
        if occ.ndim != 2 or occ.shape[0] < 1 or occ.shape[1] < 1:
            raise ValueError("occupancy must be a non-empty 2D array")
        occ = occ.copy()
        occ.setflags(write=False)
        object.__setattr__(self, "occupied", occ)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (
            self.resolution == other.resolution
            and self.origin == other.origin
            and np.array_equal(self.occupied, other.occupied)
        )

    @property
    def width(self) -> int:
        return self.occupied.shape[1]

    @property
    def height(self) -> int:
        return self.occupied.shape[0]

    @property
    def extent(self) -> tuple[float, float, float, float]:
        ox, oy = self.origin
        return ox, ox + self.width * self.resolution, oy, oy + self.height * self.resolution

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (
            math.floor((x - self.origin[0]) / self.resolution),
            math.floor((y - self.origin[1]) / self.resolution),
        )

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return (
            self.origin[0] + (ix + 0.5) * self.resolution,
            self.origin[1] + (iy + 0.5) * self.resolution,
        )

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def contains(self, x: float, y: float) -> bool:
        x0, x1, y0, y1 = self.extent
        return x0 <= x <= x1 and y0 <= y <= y1


def load_map(text: str) -> OccupancyGrid:
    """Parse the text map format.

    First line ``resolution <r> origin <ox> <oy>``, then one row of ``#``/``.``
    characters per grid row, top row = highest y.
    """
    lines = text.splitlines()
    if not lines:
        raise MapParseError(1, "empty map document")
    parts = lines[0].split()
    if len(parts) != 5 or parts[0] != "resolution" or parts[2] != "origin":
        raise MapParseError(1, "expected 'resolution <r> origin <ox> <oy>'")
    try:
        res, ox, oy = float(parts[1]), float(parts[3]), float(parts[4])
    except ValueError as exc:
        raise MapParseError(1, f"bad number in header: {exc}") from None
    if not (res > 0 and math.isfinite(res) and math.isfinite(ox) and math.isfinite(oy)):
        raise MapParseError(1, "resolution must be positive and origin finite")
    rows = []
    for lineno, row in enumerate(lines[1:], start=2):
        if not row:
            raise MapParseError(lineno, "empty row")
        bad = set(row) - {"#", "."}
        if bad:
            raise MapParseError(lineno, f"illegal characters {''.join(sorted(bad))!r}")
        if rows and len(row) != len(rows[0]):
            raise MapParseError(lineno, f"ragged row: {len(row)} cells, expected {len(rows[0])}")
        rows.append([c == "#" for c in row])
    if not rows:
        raise MapParseError(2, "map has no rows")
    occ = np.array(rows[::-1], dtype=bool)
    return OccupancyGrid(res, (ox, oy), occ)


def dump_map(grid: OccupancyGrid) -> str:
    ox, oy = grid.origin
    out = [f"resolution {grid.resolution!r} origin {ox!r} {oy!r}"]
    for row in grid.occupied[::-1]:
        out.append("".join("#" if c else "." for c in row))
    return "\n".join(out) + "\n"


def read_map(path) -> OccupancyGrid:
    with open(path, encoding="utf-8") as fh:
        return load_map(fh.read())


def write_map(grid: OccupancyGrid, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_map(grid))


def obstacle_clearance(grid: OccupancyGrid) -> np.ndarray:
    """Distance (m) from every cell centre to the nearest occupied cell centre."""
    if not grid.occupied.any():
        return np.full(grid.occupied.shape, np.inf)
    return ndimage.distance_transform_edt(~grid.occupied) * grid.resolution


class CollisionChecker:
    """Conservative footprint test.

    A pose collides when any occupied cell centre falls inside the footprint
    rectangle grown by half a cell diagonal on every side, or when the
    footprint leaves the map. Precomputed per-heading tables settle most
    queries; the rest are tested against the occupied cells directly.
    """

    def __init__(self, grid: OccupancyGrid, footprint: Footprint) -> None:
        self.grid = grid
        self.footprint = footprint
        self.pad = grid.resolution * math.sqrt(2) / 2
        self.a = footprint.half_length + self.pad
        self.b = footprint.half_width + self.pad
        self.r_outer = math.hypot(self.a, self.b)
        self.tables = lookup_tables(grid, self.a, self.b)
        # stencil of cell offsets that can hold a centre inside the grown box
        k = math.ceil(self.r_outer / grid.resolution + 1)
        self._k = k
        self._occ_pad = np.pad(grid.occupied, k)
        di, dj = np.meshgrid(np.arange(-k, k + 1), np.arange(-k, k + 1))
        self._di = di.ravel()
        self._dj = dj.ravel()
        # occupied columns per row, for the scalar path
        self._rows = [np.flatnonzero(r).tolist() for r in grid.occupied]

    def poses_free(self, x, y, theta) -> np.ndarray:
        """Vectorised test over arrays of poses; True where collision-free."""
        grid = self.grid
        res = grid.resolution
        ox, oy = grid.origin
        shape = np.shape(x)
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        theta = np.asarray(theta, dtype=float).ravel()
        c, s = np.cos(theta), np.sin(theta)
        ac, as_ = np.abs(c), np.abs(s)
        l, w = self.footprint.half_length, self.footprint.half_width
        x0, x1, y0, y1 = grid.extent
        ex = l * ac + w * as_
        ey = l * as_ + w * ac
        inside = (x - ex >= x0) & (x + ex <= x1) & (y - ey >= y0) & (y + ey <= y1)
        t = self.tables
        jx = np.clip(np.floor((x - ox) * t.scale).astype(np.int64), 0, t.verdict.shape[2] - 1)
        jy = np.clip(np.floor((y - oy) * t.scale).astype(np.int64), 0, t.verdict.shape[1] - 1)
        ib = np.minimum((normalize_angles(theta) * (t.bins / TWO_PI)).astype(np.int64), t.bins - 1)
        verdict = t.verdict[ib, jy, jx]
        free = inside & (verdict == SAFE)
        todo = np.flatnonzero(inside & (verdict == UNKNOWN))
        if todo.size:
            ix = np.clip(np.floor((x[todo] - ox) / res).astype(np.int64), 0, grid.width - 1)
            iy = np.clip(np.floor((y[todo] - oy) / res).astype(np.int64), 0, grid.height - 1)
            free[todo] = ~self._box_hits(x[todo], y[todo], c[todo], s[todo], ix, iy)
        return free.reshape(shape)

    def _box_hits(self, x, y, c, s, ix, iy) -> np.ndarray:
        res = self.grid.resolution
        ox, oy = self.grid.origin
        ci = ix[:, None] + self._di
        cj = iy[:, None] + self._dj
        occ = self._occ_pad[cj + self._k, ci + self._k]
        dx = ox + (ci + 0.5) * res - x[:, None]
        dy = oy + (cj + 0.5) * res - y[:, None]
        u = c[:, None] * dx + s[:, None] * dy
        v = -s[:, None] * dx + c[:, None] * dy
        return np.any(occ & (np.abs(u) <= self.a) & (np.abs(v) <= self.b), axis=1)

    def is_pose_free(self, x: float, y: float, theta: float) -> bool:
        return self.all_free(((x, y, theta),))

    def all_free(self, poses: Iterable[Sequence[float]]) -> bool:
        """Scalar path: True when every pose is collision-free (stops at the first hit)."""
        grid = self.grid
        res = grid.resolution
        ox, oy = grid.origin
        x0, x1, y0, y1 = grid.extent
        l, w = self.footprint.half_length, self.footprint.half_width
        t = self.tables
        buf, scale, nb = t.flat, t.scale, t.bins
        _, hq, wq = t.verdict.shape
        kb = nb / TWO_PI
        for p in poses:
            x, y, theta = float(p[0]), float(p[1]), float(p[2])
            c, s = math.cos(theta), math.sin(theta)
            ac, as_ = abs(c), abs(s)
            ex = l * ac + w * as_
            ey = l * as_ + w * ac
            if x - ex < x0 or x + ex > x1 or y - ey < y0 or y + ey > y1:
                return False
            jx = min(int((x - ox) * scale), wq - 1)
            jy = min(int((y - oy) * scale), hq - 1)
            ib = min(int(normalize_angle(theta) * kb), nb - 1)
            v = buf[(ib * hq + jy) * wq + jx]
            if v == SAFE:
                continue
            if v == BLOCKED or self._hits_scalar(x, y, c, s):
                return False
        return True

    def _hits_scalar(self, x: float, y: float, c: float, s: float) -> bool:
        grid = self.grid
        res = grid.resolution
        ox, oy = grid.origin
        a, b = self.a, self.b
        ex = a * abs(c) + b * abs(s)
        ey = a * abs(s) + b * abs(c)
        i0 = max(math.ceil((x - ex - ox) / res - 0.5), 0)
        i1 = min(math.floor((x + ex - ox) / res - 0.5), grid.width - 1)
        j0 = max(math.ceil((y - ey - oy) / res - 0.5), 0)
        j1 = min(math.floor((y + ey - oy) / res - 0.5), grid.height - 1)
        for j in range(j0, j1 + 1):
            row = self._rows[j]
            if not row:
                continue
            dy = oy + (j + 0.5) * res - y
            for i in row[bisect_left(row, i0) : bisect_right(row, i1)]:
                dx = ox + (i + 0.5) * res - x
                if abs(c * dx + s * dy) <= a and abs(-s * dx + c * dy) <= b:
                    return True
        return False

    def is_motion_free(self, poses: Iterable[Sequence[float]]) -> bool:
        return self.all_free(poses)


SAFE, BLOCKED, UNKNOWN = 0, 1, 2
TABLE_BINS = 72
SUBCELL = 0.1  # target sub-cell size (m) of the lookup tables


class LookupTables(NamedTuple):
    bins: int
    scale: float  # sub-cells per metre
    verdict: np.ndarray  # (bins, rows, cols) of SAFE / BLOCKED / UNKNOWN
    flat: bytes


def lookup_tables(grid: OccupancyGrid, a: float, b: float, bins: int = TABLE_BINS) -> LookupTables:
    """Conservative per-(heading bin, sub-cell) verdicts, cached on the grid.

    SAFE: every pose centred in the sub-cell with heading in the bin keeps all
    occupied cell centres out of the a x b half-extent box. BLOCKED: some
    occupied centre is inside that box for every such pose. Each centre's
    offset ``w`` is tested against the box at the sub-cell centre and bin mid
    heading, grown (or shrunk) by the largest position offset within the
    sub-cell plus the rotation of ``w`` within the bin.
    """
    key = (a, b, bins)
    cache = grid.__dict__.setdefault("_collision_tables", {})
    if key in cache:
        return cache[key]
    res = grid.resolution
    q = max(1, round(res / SUBCELL))
    half_bin = math.pi / bins
    k = math.ceil((math.hypot(a, b) + res) / res) + 1
    di, dj = np.meshgrid(np.arange(-k, k + 1), np.arange(-k, k + 1))
    h, w = grid.occupied.shape
    shape = (h + 2 * k, w + 2 * k)
    occ_f = np.fft.rfft2(grid.occupied.astype(float), s=shape)
    verdict = np.empty((bins, h * q, w * q), dtype=np.uint8)

    def hits(kernel: np.ndarray) -> np.ndarray:
        # correlation with the kernel = convolution with it flipped
        full = np.fft.irfft2(occ_f * np.fft.rfft2(kernel[::-1, ::-1].astype(float), s=shape), s=shape)
        return full[k : k + h, k : k + w] > 0.5

    for sy in range(q):
        for sx in range(q):
            # occupied-centre offsets from this sub-cell's centre
            wx = (di - ((sx + 0.5) / q - 0.5)) * res
            wy = (dj - ((sy + 0.5) / q - 0.5)) * res
            grow = res * math.sqrt(2) / (2 * q) + np.hypot(wx, wy) * half_bin + 1e-9
            for i in range(bins):
                th = (i + 0.5) * 2 * half_bin
                c, s = math.cos(th), math.sin(th)
                u = np.abs(c * wx + s * wy)
                v = np.abs(-s * wx + c * wy)
                out = np.full((h, w), UNKNOWN, dtype=np.uint8)
                out[~hits((u <= a + grow) & (v <= b + grow))] = SAFE
                out[hits((u <= a - grow) & (v <= b - grow))] = BLOCKED
                verdict[i, sy::q, sx::q] = out
    verdict.setflags(write=False)
    tables = LookupTables(bins, q / res, verdict, verdict.tobytes())
    cache[key] = tables
    return tables


def is_pose_free(grid: OccupancyGrid, fp: Footprint, pose: tuple[float, float, float]) -> bool:
    return CollisionChecker(grid, fp).is_pose_free(*pose[:3])


def is_motion_free(grid: OccupancyGrid, fp: Footprint, poses) -> bool:
    return CollisionChecker(grid, fp).is_motion_free(poses)


def collision_step(grid: OccupancyGrid) -> float:
    """Maximum spacing between collision samples along a motion."""
    return 0.5 * grid.resolution


_NEIGHBORS = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if dx or dy]


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Obstacle-aware 8-connected path distance (m) from each cell to the goal cell."""

    values: np.ndarray
    resolution: float
    origin: tuple[float, float]
    goal_cell: tuple[int, int]
    blocked: np.ndarray = field(repr=False)

    def at_cell(self, ix: int, iy: int) -> float:
        if 0 <= iy < self.values.shape[0] and 0 <= ix < self.values.shape[1]:
            return float(self.values[iy, ix])
        return math.inf

    def at(self, x: float, y: float) -> float:
        return self.at_cell(
            math.floor((x - self.origin[0]) / self.resolution),
            math.floor((y - self.origin[1]) / self.resolution),
        )


def inflate(grid: OccupancyGrid, radius: float) -> np.ndarray:
    """Cells that are occupied or whose centre lies within ``radius`` of an occupied centre."""
    return grid.occupied | (obstacle_clearance(grid) <= radius + 1e-12)


def build_distance_field(
    grid: OccupancyGrid, goal_cell: tuple[int, int], inflate_radius: float = 0.0
) -> DistanceField:
    gx, gy = goal_cell
    if not grid.in_bounds(gx, gy):
        raise ValueError(f"goal cell {goal_cell} outside the map")
    blocked = inflate(grid, inflate_radius) if inflate_radius > 0 else grid.occupied.copy()
    if blocked[gy, gx]:
        raise ValueError(f"goal cell {goal_cell} is occupied")
    h, w = blocked.shape
    index = np.arange(h * w).reshape(h, w)
    free = ~blocked
    rows, cols, weights = [], [], []
    for dx, dy in _NEIGHBORS:
        # pair (y, x) -> (y + dy, x + dx) restricted to the overlapping window
        ys = slice(max(0, -dy), h - max(0, dy))
        xs = slice(max(0, -dx), w - max(0, dx))
        yt = slice(max(0, dy), h - max(0, -dy))
        xt = slice(max(0, dx), w - max(0, -dx))
        ok = free[ys, xs] & free[yt, xt]
        rows.append(index[ys, xs][ok])
        cols.append(index[yt, xt][ok])
        weights.append(np.full(int(ok.sum()), grid.resolution * math.hypot(dx, dy)))
    graph = coo_matrix(
        (np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))), shape=(h * w, h * w)
    ).tocsr()
    dist = dijkstra(graph, directed=True, indices=int(index[gy, gx]))
    values = dist.reshape(h, w)
    values[blocked] = np.inf
    values.setflags(write=False)
    blocked.setflags(write=False)
    return DistanceField(values, grid.resolution, grid.origin, (gx, gy), blocked)
