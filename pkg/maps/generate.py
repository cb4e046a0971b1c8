"""Regenerate the shipped benchmark maps.

    python3 maps/generate.py

The maze is written at 0.2 m and the parking lot at 0.1 m; both layouts are
reconstructions, not the original benchmark maps.
"""
from pathlib import Path

from wisplan.maps import maze_map, parking_map
from wisplan.world import write_map

HERE = Path(__file__).resolve().parent

if __name__ == "__main__":
    write_map(maze_map(resolution=0.2), HERE / "maze.txt")
    write_map(parking_map(resolution=0.1), HERE / "parking.txt")
