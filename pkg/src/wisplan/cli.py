"""Command-line front end: plan, bench, render and validate.

Scenario files are flat ``key: value`` text::

    label: Env1-S1
    map: ../maps/maze.txt          # relative to the scenario file
    start: 16.6 16.6 1.570796 1    # x y theta mode
    goal: 12.2 7.8 1.570796        # x y theta
    modes: 1 2 3
    robot.t_switch: 1.0            # any RobotParams field
    config.n_theta: 72             # any PlanConfig field

Path files hold one waypoint per line, ``x y theta mode gear cum_length steer``
with six decimals, after ``#`` header lines carrying the reported metrics.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

from .kinematics import ALL_MODES, MotionMode, RobotParams, max_curvature
from .planner import (
    CollisionError,
    PlanConfig,
    PlanResult,
    SearchFailed,
    UnreachableError,
    Waypoint,
    path_metrics,
    plan,
)
from .world import (
    CollisionChecker,
    Footprint,
    MapParseError,
    OccupancyGrid,
    collision_step,
    read_map,
    wrap_angle,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_IO = 4
EXIT_COLLISION = 5
EXIT_UNREACHABLE = 6
EXIT_SEARCH = 7
EXIT_INVALID = 8

CSV_COLUMNS = ["scenario", "algorithm", "path_length_m", "path_cost", "switches", "expansions", "runtime_ms", "status"]
PATH_COLUMNS = "x y theta mode gear cum_length steer"
MODE_COLORS = {1: "#1f77b4", 2: "#d62728", 3: "#2ca02c"}
MODE_NAMES = {1: "Ackermann", 2: "lateral", 3: "parallel"}

CURVATURE_TOL = 1e-3
DRIFT_TOL = 1e-9
COST_TOL = 1e-9


class ScenarioError(ValueError):
    def __init__(self, source: str, line: int, message: str) -> None:
        super().__init__(f"{source}:{line}: {message}")
        self.line = line


class PathFileError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    label: str
    map_path: Path
    grid: OccupancyGrid
    robot: RobotParams
    config: PlanConfig
    start: tuple[float, float, float, int]
    goal: tuple[float, float, float]

    @property
    def modes(self) -> tuple[MotionMode, ...]:
        return self.config.modes


def _coerce(kind: type, text: str):
    if kind is bool:
        low = text.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"expected a boolean, got {text!r}")
        return low in ("true", "1", "yes")
    return kind(text)


def _overrides(cls, values: dict[str, tuple[int, str]], source: str) -> dict:
    known = {f.name: type(f.default) for f in fields(cls)}
    out = {}
    for name, (line, text) in values.items():
        if name not in known or name == "modes":
            raise ScenarioError(source, line, f"unknown field {name!r}")
        try:
            out[name] = _coerce(known[name], text)
        except ValueError as exc:
            raise ScenarioError(source, line, f"{name}: {exc}") from None
    return out


def _floats(text: str, n: int, source: str, line: int, key: str) -> list[float]:
    parts = text.split()
    if len(parts) != n:
        raise ScenarioError(source, line, f"{key} needs {n} numbers, got {len(parts)}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ScenarioError(source, line, f"{key}: not a number in {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise ScenarioError(source, line, f"{key}: values must be finite")
    return vals


def parse_scenario(text: str, base_dir: Path = Path("."), source: str = "<scenario>") -> Scenario:
    entries: dict[str, tuple[int, str]] = {}
    robot_kv: dict[str, tuple[int, str]] = {}
    config_kv: dict[str, tuple[int, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ScenarioError(source, lineno, "expected 'key: value'")
        key, value = (part.strip() for part in line.split(":", 1))
        if key.startswith("robot."):
            robot_kv[key[6:]] = (lineno, value)
        elif key.startswith("config."):
            config_kv[key[7:]] = (lineno, value)
        elif key in ("label", "map", "start", "goal", "modes"):
            if key in entries:
                raise ScenarioError(source, lineno, f"duplicate key {key!r}")
            entries[key] = (lineno, value)
        else:
            raise ScenarioError(source, lineno, f"unknown key {key!r}")
    for key in ("map", "start", "goal"):
        if key not in entries:
            raise ScenarioError(source, 0, f"missing key {key!r}")

    line, value = entries["start"]
    sx, sy, sth, sm = _floats(value, 4, source, line, "start")
    if sm not in (1, 2, 3):
        raise ScenarioError(source, line, f"start mode must be 1, 2 or 3, got {sm:g}")
    start = (sx, sy, sth, int(sm))
    line, value = entries["goal"]
    goal = tuple(_floats(value, 3, source, line, "goal"))

    modes = ALL_MODES
    if "modes" in entries:
        line, value = entries["modes"]
        try:
            modes = tuple(MotionMode(int(v)) for v in value.split())
        except ValueError:
            raise ScenarioError(source, line, f"modes must be drawn from 1 2 3, got {value!r}") from None
        if not modes:
            raise ScenarioError(source, line, "mode set must not be empty")
        if start[3] not in modes:
            raise ScenarioError(source, line, "start mode is not in the mode set")

    try:
        robot = RobotParams(**_overrides(RobotParams, robot_kv, source))
        config = PlanConfig(modes=modes, **_overrides(PlanConfig, config_kv, source))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(source, 0, str(exc)) from None

    line, value = entries["map"]
    map_path = (base_dir / value).resolve()
    if not map_path.is_file():
        raise ScenarioError(source, line, f"map file {value!r} not found")
    try:
        grid = read_map(map_path)
    except MapParseError as exc:
        raise ScenarioError(source, line, f"map {value!r}: {exc}") from None
    for name, pose, ln in (("start", start, entries["start"][0]), ("goal", goal, entries["goal"][0])):
        if not grid.contains(pose[0], pose[1]):
            raise ScenarioError(source, ln, f"{name} lies outside the map")
    label = entries["label"][1] if "label" in entries else Path(source).stem
    return Scenario(label, map_path, grid, robot, config, start, goal)


def load_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), path.parent, str(path))


def algorithm_config(scenario: Scenario, baseline: bool) -> PlanConfig:
    return scenario.config.baseline() if baseline else scenario.config


def algorithm_name(config: PlanConfig) -> str:
    return "baseline" if config.modes == (MotionMode.ACKERMANN,) else "multimodal"


# -- path records ------------------------------------------------------------


def format_path(result: Optional[PlanResult], meta: dict) -> str:
    out = io.StringIO()
    for key, value in meta.items():
        out.write(f"# {key}: {value}\n")
    out.write(f"# columns: {PATH_COLUMNS}\n")
    if result is not None:
        for w in result.waypoints:
            out.write(
                f"{w.x:.6f} {w.y:.6f} {w.theta:.6f} {w.mode:d} {w.gear:d} {w.cum_length:.6f} {w.steer:.6f}\n"
            )
    return out.getvalue()


def parse_path(text: str) -> tuple[list[Waypoint], dict[str, str]]:
    meta: dict[str, str] = {}
    wps: list[Waypoint] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                meta[key.strip()] = value.strip()
            continue
        parts = line.split()
        if len(parts) != 7:
            raise PathFileError(f"line {lineno}: expected 7 columns, got {len(parts)}")
        try:
            x, y, th, cum, steer = (float(parts[i]) for i in (0, 1, 2, 5, 6))
            mode, gear = int(parts[3]), int(parts[4])
        except ValueError:
            raise PathFileError(f"line {lineno}: malformed number") from None
        if mode not in (1, 2, 3) or gear not in (1, -1):
            raise PathFileError(f"line {lineno}: bad mode or gear")
        wps.append(Waypoint(x, y, th, mode, gear, cum, steer))
    return wps, meta


def read_path(path) -> tuple[list[Waypoint], dict[str, str]]:
    return parse_path(Path(path).read_text(encoding="utf-8"))


def summary_line(label: str, algorithm: str, result: PlanResult) -> str:
    s = result.stats
    return (
        f"{label} {algorithm}: length {result.total_length:.6f} m, cost {result.total_cost:.6f}, "
        f"switches {result.switch_count}, expansions {s.get('expansions', 0)}, "
        f"analytic attempts {s.get('analytic_attempts', 0)}, open peak {s.get('open_peak', 0)}, "
        f"f violations {s.get('f_violations', 0)}, {1000 * s.get('wall_time', 0.0):.1f} ms"
    )


# -- commands ----------------------------------------------------------------


def run_scenario(scenario: Scenario, baseline: bool) -> PlanResult:
    config = algorithm_config(scenario, baseline)
    start = scenario.start
    return plan(scenario.grid, scenario.robot, config, start, scenario.goal)


_FAILURES = (
    (CollisionError, EXIT_COLLISION, "collision"),
    (UnreachableError, EXIT_UNREACHABLE, "unreachable"),
    (SearchFailed, EXIT_SEARCH, "search_failed"),
)


def cmd_plan(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except (OSError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    config = algorithm_config(scenario, args.baseline)
    algo = algorithm_name(config)
    try:
        result = run_scenario(scenario, args.baseline)
    except tuple(f[0] for f in _FAILURES) as exc:
        code, tag = next((c, t) for cls, c, t in _FAILURES if isinstance(exc, cls))
        print(f"{scenario.label} {algo}: {tag}: {exc}", file=sys.stderr)
        return code
    meta = {
        "label": scenario.label,
        "algorithm": algo,
        "length": repr(result.total_length),
        "cost": repr(result.total_cost),
        "switches": result.switch_count,
    }
    try:
        Path(args.output).write_text(format_path(result, meta), encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot write {args.output}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(summary_line(scenario.label, algo, result))
    return EXIT_OK


def bench_row(job: tuple[str, bool, bool]) -> dict:
    path, baseline, timing = job
    scenario = load_scenario(path)
    config = algorithm_config(scenario, baseline)
    row = dict.fromkeys(CSV_COLUMNS, "")
    row.update(scenario=scenario.label, algorithm=algorithm_name(config))
    t0 = time.perf_counter()
    try:
        result = run_scenario(scenario, baseline)
    except tuple(f[0] for f in _FAILURES) as exc:
        row["status"] = next(t for cls, _, t in _FAILURES if isinstance(exc, cls))
    else:
        row.update(
            path_length_m=f"{result.total_length:.6f}",
            path_cost=f"{result.total_cost:.6f}",
            switches=str(result.switch_count),
            expansions=str(result.stats["expansions"]),
            status="ok",
        )
    row["runtime_ms"] = f"{1000 * (time.perf_counter() - t0):.1f}" if timing else ""
    return row


def bench_figure(rows: list[dict], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = sorted({r["scenario"] for r in rows})
    cost = {(r["scenario"], r["algorithm"]): r["path_cost"] for r in rows}
    length = {(r["scenario"], r["algorithm"]): r["path_length_m"] for r in rows}
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.6))
    xs = range(len(labels))
    for ax, table, title in ((axes[0], length, "Path length (m)"), (axes[1], cost, "Path cost")):
        for k, algo in enumerate(("baseline", "multimodal")):
            vals = [float(table.get((lab, algo)) or "nan") for lab in labels]
            ax.bar([x + (k - 0.5) * 0.38 for x in xs], vals, 0.38, label=algo, color=("#9e9e9e", "#1f77b4")[k])
        ax.set_xticks(list(xs))
        ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
        ax.set_title(title, fontsize=10)
    axes[0].legend(fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)


def cmd_bench(args) -> int:
    directory = Path(args.directory)
    files = sorted(directory.glob(args.pattern))
    if not files:
        print(f"error: no scenario files matching {args.pattern!r} in {directory}", file=sys.stderr)
        return EXIT_PARSE
    try:
        for f in files:
            load_scenario(f)
    except (OSError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    jobs = [(str(f), baseline, not args.no_timing) for f in files for baseline in (True, False)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(bench_row, jobs))
    else:
        rows = [bench_row(j) for j in jobs]
    out = Path(args.output)
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, CSV_COLUMNS, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        if not args.no_figure:
            bench_figure(rows, out.with_suffix(".png"))
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    for r in rows:
        print(f"{r['scenario']:<10} {r['algorithm']:<10} {r['path_length_m']:>11} {r['path_cost']:>11} {r['status']}")
    return EXIT_OK


def render_svg(grid: OccupancyGrid, waypoints: Sequence[Waypoint], params: RobotParams, out, spacing: float = 0.8):
    """Draw obstacles, the mode-coloured path, footprints every ``spacing`` m and switch markers."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.collections import LineCollection
    from matplotlib.patches import Polygon

    x0, x1, y0, y1 = grid.extent
    with plt.rc_context({"svg.hashsalt": "wisplan", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 6 * (y1 - y0) / (x1 - x0)))
        ax.imshow(
            grid.occupied,
            origin="lower",
            extent=(x0, x1, y0, y1),
            cmap="Greys",
            vmin=0,
            vmax=1.4,
            interpolation="nearest",
        )
        fp = Footprint(params.half_length, params.half_width)
        next_s = 0.0
        for i, w in enumerate(waypoints):
            if w.cum_length + 1e-9 >= next_s or i == len(waypoints) - 1:
                poly = Polygon(
                    fp.corners(w.x, w.y, w.theta),
                    closed=True,
                    fill=False,
                    lw=0.6,
                    ec=MODE_COLORS[w.mode],
                    alpha=0.7,
                    gid=f"footprint-{i}",
                )
                ax.add_patch(poly)
                next_s = w.cum_length + spacing
        for mode in (1, 2, 3):
            segs = [
                [(a.x, a.y), (b.x, b.y)]
                for a, b in zip(waypoints, waypoints[1:])
                if b.mode == mode and a.mode == mode
            ]
            if segs:
                ax.add_collection(
                    LineCollection(segs, colors=MODE_COLORS[mode], lw=1.6, label=MODE_NAMES[mode], gid=f"path-mode-{mode}")
                )
        k = 0
        for a, b in zip(waypoints, waypoints[1:]):
            if a.mode != b.mode:
                k += 1
                ax.plot([b.x], [b.y], marker="D", ms=6, color="black", gid=f"switch-{k}")
        if waypoints:
            ax.legend(loc="upper right", fontsize=7, frameon=True)
        ax.set_xlim(x0, x1)
        ax.set_ylim(y0, y1)
        ax.set_aspect("equal")
        ax.set_xlabel("x (m)")
        ax.set_ylabel("y (m)")
        fig.tight_layout()
        fig.savefig(out, format="svg", metadata={"Date": None})
        plt.close(fig)


def cmd_render(args) -> int:
    try:
        grid = read_map(args.map)
        waypoints, _ = read_path(args.path)
        robot = load_scenario(args.scenario).robot if args.scenario else RobotParams()
    except (OSError, MapParseError, PathFileError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        render_svg(grid, waypoints, robot, args.output)
    except OSError as exc:
        print(f"error: cannot write {args.output}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


@dataclass
class Check:
    name: str
    ok: bool
    detail: str


def validate_path(waypoints: Sequence[Waypoint], meta: dict, scenario: Scenario) -> list[Check]:
    params, config, grid = scenario.robot, scenario.config, scenario.grid
    checks = []
    if not waypoints:
        return [Check("records", False, "path file has no waypoints")]

    sx, sy, sth, sm = scenario.start
    gx, gy, gth = scenario.goal
    first, last = waypoints[0], waypoints[-1]
    start_err = max(abs(first.x - sx), abs(first.y - sy), abs(wrap_angle(first.theta - sth)))
    goal_err = max(abs(last.x - gx), abs(last.y - gy), abs(wrap_angle(last.theta - gth)))
    checks.append(
        Check(
            "endpoints",
            start_err <= 1e-5 and goal_err <= 1e-5 and first.mode == sm,
            f"start error {start_err:.2e}, goal error {goal_err:.2e}",
        )
    )

    checker = CollisionChecker(grid, Footprint(params.half_length, params.half_width))
    hits = [i for i, w in enumerate(waypoints) if not checker.is_pose_free(w.x, w.y, w.theta)]
    checks.append(
        Check("collision", not hits, f"{len(hits)} colliding waypoints" + (f", first #{hits[0]}" if hits else ""))
    )

    step = collision_step(grid)
    gaps = [math.hypot(b.x - a.x, b.y - a.y) for a, b in zip(waypoints, waypoints[1:])]
    worst_gap = max(gaps, default=0.0)
    checks.append(Check("sampling", worst_gap <= step + 1e-5, f"max spacing {worst_gap:.6f} m (limit {step:g})"))

    worst = 0.0
    excess = 0
    drift = 0.0
    for a, b in zip(waypoints, waypoints[1:]):
        if a.mode != b.mode:
            continue
        dth = abs(wrap_angle(b.theta - a.theta))
        if b.mode == MotionMode.PARALLEL:
            drift = max(drift, dth)
            continue
        ds = b.cum_length - a.cum_length
        if ds <= 1e-9:
            continue
        kappa = dth / ds
        limit = max_curvature(params, MotionMode(b.mode)) + CURVATURE_TOL
        worst = max(worst, kappa - limit + CURVATURE_TOL)
        excess += kappa > limit
    checks.append(Check("curvature", excess == 0, f"{excess} steps over the bound, worst margin {worst:+.2e}"))
    checks.append(Check("parallel_drift", drift <= DRIFT_TOL, f"max heading change {drift:.2e} rad"))

    metrics = path_metrics(waypoints, config, params)
    try:
        reported = float(meta["cost"])
    except (KeyError, ValueError):
        checks.append(Check("cost_replay", False, "no reported cost in the path header"))
    else:
        delta = metrics.cost - reported
        parts = ", ".join(f"{k} {v:.6f}" for k, v in metrics.breakdown.items())
        checks.append(
            Check(
                "cost_replay",
                abs(delta) <= COST_TOL,
                f"replayed {metrics.cost!r}, reported {reported!r}, delta {delta:+.3e} ({parts})",
            )
        )
    switch_ok = metrics.cost - metrics.non_switch == params.switch_cost * metrics.switches
    checks.append(
        Check(
            "switch_accounting",
            switch_ok,
            f"{metrics.switches} switches x {params.switch_cost:g} = {metrics.cost - metrics.non_switch!r}",
        )
    )
    if "length" in meta:
        dl = metrics.length - float(meta["length"])
        checks.append(Check("length_replay", abs(dl) <= COST_TOL, f"delta {dl:+.3e} m"))
    return checks


def cmd_validate(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
        waypoints, meta = read_path(args.path)
    except (OSError, ScenarioError, PathFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if meta.get("algorithm") == "baseline":
        scenario = replace(scenario, config=scenario.config.baseline())
    checks = validate_path(waypoints, meta, scenario)
    for c in checks:
        print(f"{'PASS' if c.ok else 'FAIL'} {c.name}: {c.detail}")
    return EXIT_OK if all(c.ok for c in checks) else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wisplan", description="Multi-modal Hybrid A* for 4WIS robots.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan one scenario and write its path file")
    p.add_argument("scenario")
    p.add_argument("output")
    p.add_argument("--baseline", action="store_true", help="restrict the mode set to Ackermann only")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("bench", help="baseline vs multi-modal on every scenario in a directory")
    p.add_argument("directory")
    p.add_argument("output", help="CSV file; the figure goes next to it as .png")
    p.add_argument("--pattern", default="*.txt")
    p.add_argument("--jobs", type=int, default=1, help="scenario runs in parallel processes")
    p.add_argument("--no-timing", action="store_true", help="leave runtime_ms empty for byte-stable output")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", help="draw a path file over its map as SVG")
    p.add_argument("path")
    p.add_argument("map")
    p.add_argument("output")
    p.add_argument("--scenario", help="take the footprint from this scenario's robot")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("validate", help="replay collision, curvature and cost checks on a path file")
    p.add_argument("path")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
