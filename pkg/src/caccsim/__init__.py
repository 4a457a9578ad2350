"""Two-vehicle CACC simulation with V2V attack orchestration and resiliency.

The package splits into the plant (kinematics, sensors, controller), the
scenario and data layer (environments, trajectory generation, benign
collection), the learned models (neural), the attack taxonomy (attack),
the on-board pipeline (resilience), and the evaluation harness
(evaluation, report, cli).
"""

from .controller import ControllerInput, ControllerParams
from .kinematics import ActuatorLimits, VehicleState
from .resilience import DetectorConfig, ResiliencePipeline
from .sensors import SensorConfig

__version__ = "0.1.0"

__all__ = [
    "ActuatorLimits",
    "ControllerInput",
    "ControllerParams",
    "DetectorConfig",
    "ResiliencePipeline",
    "SensorConfig",
    "VehicleState",
    "__version__",
]
