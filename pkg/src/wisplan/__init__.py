"""Multi-modal Hybrid A* planning for four-wheel independent steering robots."""
from .kinematics import MotionMode, RobotParams
from .planner import PlanConfig, PlanningError, PlanResult, plan
from .world import Footprint, OccupancyGrid, load_map, read_map

__all__ = [
    "Footprint",
    "MotionMode",
    "OccupancyGrid",
    "PlanConfig",
    "PlanResult",
    "PlanningError",
    "RobotParams",
    "load_map",
    "plan",
    "read_map",
]
__version__ = "0.1.0"
