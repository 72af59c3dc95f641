"""Coordinated-turn target tracking: turn estimation, EKF filtering and prediction."""

from .core import InputVector, Measurement, f_dynamics, h_measure, jacobian_a, jacobian_c
from .ekf import FilterState, NoiseConfig, init_from_measurement, predict_step, process_measurement, update_step
from .evolution import CenterMode, ObservationWindow, curvature_center, solve_evolution, window_evolution
from .pipeline import MetricsReport, RunConfig, config_from_dict, ingest_measurements, rmse, run_scenario
from .predictor import PredictedTrajectory, PredictionConfig, predict_horizon
from .simulator import ScenarioConfig, simulate
from .tracker import Tracker

__version__ = "0.1.0"

__all__ = [
    "CenterMode",
    "FilterState",
    "InputVector",
    "Measurement",
    "MetricsReport",
    "NoiseConfig",
    "ObservationWindow",
    "PredictedTrajectory",
    "PredictionConfig",
    "RunConfig",
    "ScenarioConfig",
    "Tracker",
    "config_from_dict",
    "curvature_center",
    "f_dynamics",
    "h_measure",
    "ingest_measurements",
    "init_from_measurement",
    "jacobian_a",
    "jacobian_c",
    "predict_horizon",
    "predict_step",
    "process_measurement",
    "rmse",
    "run_scenario",
    "simulate",
    "solve_evolution",
    "update_step",
    "window_evolution",
]
