import numpy as np

from conftest import ROOT, SCENARIOS
from wisplan.cli import load_scenario
from wisplan.kinematics import RobotParams
from wisplan.maps import maze_map, parking_map
from wisplan.world import CollisionChecker, Footprint, build_distance_field, dump_map

P = RobotParams()


def test_shipped_maps_match_generators():
    assert (ROOT / "maps" / "maze.txt").read_text() == dump_map(maze_map(resolution=0.2))
    assert (ROOT / "maps" / "parking.txt").read_text() == dump_map(parking_map(resolution=0.1))


def test_maze_geometry():
    g = maze_map(resolution=0.2)
    assert (g.width, g.height) == (100, 100)
    assert g.extent == (0.0, 20.0, 0.0, 20.0)
    # outer wall closed, room centres free
    assert g.occupied[0].all() and g.occupied[-1].all() and g.occupied[:, 0].all() and g.occupied[:, -1].all()
    for i in range(9):
        for j in range(9):
            assert not g.occupied[g.cell_of(1.2 + 2.2 * i, 1.2 + 2.2 * j)[::-1]]


def test_maze_rooms_all_connected():
    g = maze_map(resolution=0.2)
    field = build_distance_field(g, g.cell_of(1.2, 1.2), inflate_radius=P.half_width)
    for i in range(9):
        for j in range(9):
            assert np.isfinite(field.at(1.2 + 2.2 * i, 1.2 + 2.2 * j))


def test_maze_is_seeded():
    assert np.array_equal(maze_map(seed=7, resolution=0.2).occupied, maze_map(seed=7, resolution=0.2).occupied)
    assert not np.array_equal(maze_map(seed=7, resolution=0.2).occupied, maze_map(seed=8, resolution=0.2).occupied)


def test_parking_free_slots():
    g = parking_map()
    ck = CollisionChecker(g, Footprint(P.half_length, P.half_width))
    # slots 4 and 11 are empty and admit the robot nose-in
    for k in (4, 11):
        assert ck.is_pose_free(1.5 + k, 0.9, np.pi / 2)
    assert not ck.is_pose_free(1.5 + 5, 0.9, np.pi / 2)
    # the kerb-side gaps fit the robot parallel to the wall
    assert ck.is_pose_free(5.0, 9.4, 0.0) and ck.is_pose_free(11.9, 9.4, 0.0)
    assert not ck.is_pose_free(3.1, 9.4, 0.0)


def test_scenario_poses_are_free():
    for path in sorted(SCENARIOS.glob("*.txt")):
        sc = load_scenario(path)
        ck = CollisionChecker(sc.grid, Footprint(sc.robot.half_length, sc.robot.half_width))
        assert ck.is_pose_free(*sc.start[:3]) and ck.is_pose_free(*sc.goal), path.name
