"""autorc: a fully software-simulated behavior-cloning RC car.

A fixed-step 2D vehicle simulator renders synthetic first-person camera
frames; an expert (or human teleoperator) records driving datasets; two
convolutional policies regress steering and throttle from the camera and
drive the car closed-loop, monitored over a small HTTP telemetry API.
"""

from .camera import CameraFrame, CameraModel, Renderer
from .evaluate import EvalReport, evaluate
from .loop import DriveLoop, LoopConfig, TelemetrySnapshot
from .pilots import ExpertConfig, ExpertPilot, JitteredExpert, NeuralPilot
from .pwm import ActuationConfig, NormalizedCommand, command_to_pwm
from .sim import SimConfig, VehicleState, step, step_dynamics
from .track import Obstacle, Scenario, TrackDefinition, builtin_scenario, resolve_scenario
from .tub import DatasetView, Tub, TubRecord, load_split, tub_stats

__version__ = "0.1.0"

__all__ = [
    "ActuationConfig",
    "CameraFrame",
    "CameraModel",
    "DatasetView",
    "DriveLoop",
    "EvalReport",
    "ExpertConfig",
    "ExpertPilot",
    "JitteredExpert",
    "LoopConfig",
    "NeuralPilot",
    "NormalizedCommand",
    "Renderer",
    "Scenario",
    "SimConfig",
    "TelemetrySnapshot",
    "TrackDefinition",
    "Obstacle",
    "Tub",
    "TubRecord",
    "VehicleState",
    "builtin_scenario",
    "command_to_pwm",
    "evaluate",
    "load_split",
    "resolve_scenario",
    "step",
    "step_dynamics",
    "tub_stats",
    "__version__",
]
