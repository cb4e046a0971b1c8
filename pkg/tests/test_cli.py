import csv
import math
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from conftest import SCENARIOS, write_scenario
from wisplan.cli import (
    EXIT_COLLISION,
    EXIT_INVALID,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_UNREACHABLE,
    PathFileError,
    ScenarioError,
    load_scenario,
    main,
    parse_path,
    parse_scenario,
    read_path,
)

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture
def empty_scenario(tmp_path):
    return write_scenario(tmp_path, "open", np.zeros((60, 100), dtype=bool), (2.0, 3.0, 0.0, 1), (7.0, 3.0, 0.0))


@pytest.fixture
def lateral_scenario(tmp_path):
    # the goal sits in a 1.2 m gap that the robot can only enter sideways
    occ = np.zeros((60, 80), dtype=bool)
    occ[30:, :] = True
    occ[30:, 34:46] = False
    # a low cap keeps the hopeless Ackermann-only search short
    return write_scenario(tmp_path, "gap", occ, (4.0, 1.5, 0.0, 1), (4.0, 4.5, 0.0), extra="config.max_iterations: 2000\n")


# -- scenario parsing ----------------------------------------------------------


def test_corpus_scenarios_load():
    labels = [load_scenario(p).label for p in sorted(SCENARIOS.glob("*.txt"))]
    assert labels == ["Env1-S1", "Env1-S2", "Env1-S3", "Env2-S1", "Env2-S2", "Env2-S3"]


def test_scenario_overrides(empty_scenario):
    text = empty_scenario.read_text() + "robot.t_switch: 2.5\nconfig.n_theta: 36\nmodes: 1 2\n"
    sc = parse_scenario(text, empty_scenario.parent)
    assert sc.robot.switch_cost == 2.5 and sc.config.n_theta == 36 and sc.modes == (1, 2)


BASE = ["label: t", "map: open.map", "start: 2 3 0 1", "goal: 7 3 0"]


@pytest.mark.parametrize(
    "index, line",
    [
        (2, "start 2 3 0 1"),
        (2, "start: 2 3"),
        (2, "start: 2 3 x 1"),
        (2, "start: 2 3 0 4"),
        (2, "start: 50 3 0 1"),
        (3, "goal: 7 3 nan"),
        (4, "colour: red"),
        (4, "label: again"),
        (4, "modes: 2 3"),
        (4, "modes: 1 5"),
    ],
)
def test_scenario_errors_carry_line_numbers(empty_scenario, index, line):
    lines = list(BASE)
    if index < len(lines):
        lines[index] = line
    else:
        lines.append(line)
    with pytest.raises(ScenarioError) as err:
        parse_scenario("\n".join(lines) + "\n", empty_scenario.parent)
    assert err.value.line == index + 1


def test_scenario_bad_override(empty_scenario):
    with pytest.raises(ScenarioError):
        parse_scenario("\n".join(BASE + ["robot.wheels: 6"]) + "\n", empty_scenario.parent)
    with pytest.raises(ScenarioError):
        parse_scenario("\n".join(BASE + ["config.n_steer: 4"]) + "\n", empty_scenario.parent)


def test_scenario_missing_map(tmp_path):
    with pytest.raises(ScenarioError, match="not found"):
        parse_scenario("map: nowhere.txt\nstart: 1 1 0 1\ngoal: 2 2 0\n", tmp_path)


def test_path_file_errors():
    with pytest.raises(PathFileError, match="line 2"):
        parse_path("# cost: 1\n1 2 3\n")
    with pytest.raises(PathFileError):
        parse_path("1 2 0 4 1 0 0\n")


# -- plan ----------------------------------------------------------------------


def test_plan_writes_monotone_path(empty_scenario, tmp_path, capsys):
    out = tmp_path / "p.txt"
    assert main(["plan", str(empty_scenario), str(out)]) == EXIT_OK
    wps, meta = read_path(out)
    assert meta["algorithm"] == "multimodal" and float(meta["cost"]) > 0
    cums = [w.cum_length for w in wps]
    assert cums == sorted(cums) and cums[-1] == pytest.approx(float(meta["length"]), abs=1e-6)
    assert re.search(r"open multimodal: length [\d.]+ m, cost [\d.]+", capsys.readouterr().out)
    lines = out.read_text().splitlines()
    assert all(re.fullmatch(r"(-?\d+\.\d{6} ){3}\d -?1 \d+\.\d{6} -?\d+\.\d{6}", ln) for ln in lines if not ln.startswith("#"))


def test_plan_unreachable_goal(tmp_path, capsys):
    occ = np.zeros((80, 80), dtype=bool)
    occ[40:42, 40:78] = True
    occ[40:78, 40:42] = True
    occ[76:78, 40:78] = True
    occ[40:78, 76:78] = True
    sc = write_scenario(tmp_path, "boxed", occ, (2.0, 2.0, 0.0, 1), (5.9, 5.9, 0.0))
    assert main(["plan", str(sc), str(tmp_path / "p.txt")]) == EXIT_UNREACHABLE
    assert "unreachable" in capsys.readouterr().err
    assert not (tmp_path / "p.txt").exists()


def test_plan_colliding_start(tmp_path, capsys):
    occ = np.zeros((60, 60), dtype=bool)
    occ[30, 30] = True
    sc = write_scenario(tmp_path, "hit", occ, (3.0, 3.0, 0.0, 1), (5.0, 1.0, 0.0))
    assert main(["plan", str(sc), str(tmp_path / "p.txt")]) == EXIT_COLLISION
    assert "collision" in capsys.readouterr().err


def test_plan_parse_error(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("start: 1 1\n")
    assert main(["plan", str(bad), str(tmp_path / "p.txt")]) == EXIT_PARSE
    assert main(["plan", str(tmp_path / "missing.txt"), str(tmp_path / "p.txt")]) == EXIT_PARSE


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["fly"])
    assert exc.value.code == 2


# -- validate ------------------------------------------------------------------


def _planned(scenario, tmp_path, *flags):
    out = tmp_path / "p.txt"
    assert main(["plan", str(scenario), str(out), *flags]) == EXIT_OK
    return out


def test_validate_round_trip(lateral_scenario, tmp_path, capsys):
    out = _planned(lateral_scenario, tmp_path)
    capsys.readouterr()
    assert main(["validate", str(out), str(lateral_scenario)]) == EXIT_OK
    report = capsys.readouterr().out
    assert "FAIL" not in report and "PASS switch_accounting" in report


def test_validate_baseline_file(empty_scenario, tmp_path):
    out = _planned(empty_scenario, tmp_path, "--baseline")
    assert read_path(out)[1]["algorithm"] == "baseline"
    assert main(["validate", str(out), str(empty_scenario)]) == EXIT_OK


def test_validate_detects_waypoint_in_wall(lateral_scenario, tmp_path, capsys):
    out = _planned(lateral_scenario, tmp_path)
    lines = out.read_text().splitlines()
    idx = [i for i, ln in enumerate(lines) if not ln.startswith("#")][len(lines) // 3]
    parts = lines[idx].split()
    parts[0], parts[1] = "1.000000", "4.500000"
    lines[idx] = " ".join(parts)
    out.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(["validate", str(out), str(lateral_scenario)]) == EXIT_INVALID
    assert "FAIL collision" in capsys.readouterr().out


def test_validate_detects_cost_perturbation(empty_scenario, tmp_path, capsys):
    out = _planned(empty_scenario, tmp_path)
    text = out.read_text()
    cost = float(re.search(r"# cost: (\S+)", text).group(1))
    out.write_text(text.replace(f"# cost: {cost!r}", f"# cost: {cost + 0.1!r}"))
    capsys.readouterr()
    assert main(["validate", str(out), str(empty_scenario)]) == EXIT_INVALID
    report = capsys.readouterr().out
    assert re.search(r"FAIL cost_replay: .*delta -1\.000e-01", report)
    assert "length" in report.split("FAIL cost_replay")[1]


# -- render --------------------------------------------------------------------


def _svg(path):
    return ET.parse(path).getroot()


def _ids(root, prefix):
    return [e for e in root.iter() if e.get("id", "").startswith(prefix)]


def test_render_empty_path_is_map_only(empty_scenario, tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("# columns: x y theta mode gear cum_length steer\n")
    out = tmp_path / "m.svg"
    assert main(["render", str(path), str(empty_scenario.parent / "open.map"), str(out)]) == EXIT_OK
    root = _svg(out)
    assert root.tag == SVG + "svg"
    assert root.findall(f".//{SVG}image") and not _ids(root, "footprint") and not _ids(root, "path-mode")


def test_render_switch_marker_and_lateral_footprint(lateral_scenario, tmp_path):
    path = _planned(lateral_scenario, tmp_path)
    wps, _ = read_path(path)
    out = tmp_path / "r.svg"
    assert main(["render", str(path), str(lateral_scenario.parent / "gap.map"), str(out), "--scenario", str(lateral_scenario)]) == EXIT_OK
    root = _svg(out)
    assert len(_ids(root, "switch-")) == 1
    # the switch happens at the start, so every drawn segment is lateral
    assert {e.get("id") for e in _ids(root, "path-mode-")} == {"path-mode-2"}
    # during lateral travel the footprint's long axis stays perpendicular to the motion
    lateral = [(a, b) for a, b in zip(wps, wps[1:]) if a.mode == b.mode == 2 and b.cum_length > a.cum_length]
    assert lateral
    for a, b in lateral:
        travel = math.atan2(b.y - a.y, b.x - a.x)
        assert abs(math.cos(travel - b.theta)) < 0.35
    again = tmp_path / "r2.svg"
    main(["render", str(path), str(lateral_scenario.parent / "gap.map"), str(again), "--scenario", str(lateral_scenario)])
    assert out.read_bytes() == again.read_bytes()


def test_render_bad_input(tmp_path):
    assert main(["render", str(tmp_path / "none.txt"), str(tmp_path / "none.map"), str(tmp_path / "o.svg")]) == EXIT_PARSE


# -- bench ---------------------------------------------------------------------


def test_bench_is_byte_identical(empty_scenario, lateral_scenario, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"bench{k}.csv"
        assert main(["bench", str(tmp_path), str(out), "--no-timing"]) == EXIT_OK
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    assert outs[0].with_suffix(".png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    rows = list(csv.DictReader(outs[0].open()))
    assert [(r["scenario"], r["algorithm"]) for r in rows] == [
        ("gap", "baseline"), ("gap", "multimodal"), ("open", "baseline"), ("open", "multimodal")
    ]
    assert all(r["runtime_ms"] == "" for r in rows)
    assert [r["status"] for r in rows] == ["search_failed", "ok", "ok", "ok"]


def test_bench_records_failures_as_rows(tmp_path):
    occ = np.zeros((60, 60), dtype=bool)
    occ[30, 30] = True
    write_scenario(tmp_path, "hit", occ, (3.0, 3.0, 0.0, 1), (5.0, 1.0, 0.0))
    out = tmp_path / "b.csv"
    assert main(["bench", str(tmp_path), str(out), "--no-figure"]) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert [r["status"] for r in rows] == ["collision", "collision"]
    assert rows[0]["runtime_ms"] != ""


def test_bench_corpus_matches_plan(corpus, tmp_path):
    out = tmp_path / "corpus.csv"
    assert main(["bench", str(SCENARIOS), str(out), "--no-timing", "--no-figure"]) == EXIT_OK
    header = out.read_text().splitlines()[0]
    assert header == "scenario,algorithm,path_length_m,path_cost,switches,expansions,runtime_ms,status"
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 12
    for r in rows:
        _, _, result = corpus[(r["scenario"], r["algorithm"])]
        assert r["status"] == "ok"
        assert r["path_cost"] == f"{result.total_cost:.6f}"
        assert r["path_length_m"] == f"{result.total_length:.6f}"
        assert r["switches"] == str(result.switch_count)
