from pathlib import Path

import numpy as np
import pytest

from wisplan.cli import load_scenario, run_scenario
from wisplan.planner import PlanningError
from wisplan.world import OccupancyGrid, write_map

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"


@pytest.fixture(scope="session")
def corpus():
    """Every shipped scenario planned with both algorithms, computed once."""
    runs = {}
    for path in sorted(SCENARIOS.glob("*.txt")):
        scenario = load_scenario(path)
        for baseline in (True, False):
            try:
                result = run_scenario(scenario, baseline)
            except PlanningError as exc:
                result = exc
            runs[(scenario.label, "baseline" if baseline else "multimodal")] = (path, scenario, result)
    return runs


def write_scenario(directory: Path, name: str, occ: np.ndarray, start, goal, res=0.1, extra="") -> Path:
    """Write a map plus a scenario file pointing at it; returns the scenario path."""
    write_map(OccupancyGrid(res, (0.0, 0.0), occ), directory / f"{name}.map")
    text = (
        f"label: {name}\nmap: {name}.map\n"
        f"start: {' '.join(map(str, start))}\ngoal: {' '.join(map(str, goal))}\n{extra}"
    )
    path = directory / f"{name}.txt"
    path.write_text(text, encoding="utf-8")
    return path


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


def report(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(ACCEPTANCE[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
