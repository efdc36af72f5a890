"""Quadrotor flight simulation with a quaternion sliding-mode controller and benchmark controllers."""
from .control import CONTROLLERS, make_controller
from .dynamics import VehicleParams, VehicleState, believed_params, true_params
from .engine import SimConfig, SimLog, run_scenario
from .metrics import ComparisonReport, RunMetrics, compute_metrics
from .reference import SCENARIOS, calibrate_lemniscate, make_scenario

__version__ = "0.1.0"
