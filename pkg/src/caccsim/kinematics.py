"""Fixed-step longitudinal dynamics for a two-vehicle string.

All quantities are SI: meters, seconds, m/s, m/s^2. Decelerations are
stored as positive magnitudes. The integrator is semi-implicit Euler:
the velocity update is applied before the position update, and braking
saturates exactly at standstill (no reversing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import NumericError

DEFAULT_DT = 0.01  # 100 Hz control rate
DEFAULT_VEHICLE_LENGTH = 4.0  # meters, bumper-to-bumper gap convention
THW_VELOCITY_FLOOR = 0.1  # m/s divisor floor keeping time headway finite


@dataclass(frozen=True)
class VehicleState:
    position: float  # m
    velocity: float  # m/s, never negative
    acceleration: float = 0.0  # m/s^2 as applied (post-clamp)


@dataclass(frozen=True)
class ActuatorLimits:
    max_accel: float = 3.0  # m/s^2
    max_decel: float = 8.0  # m/s^2, positive magnitude

    def __post_init__(self):
        if not (self.max_accel > 0 and self.max_decel > 0):
            raise ValueError("actuator limits must be positive")


@dataclass
class SimClock:
    dt: float = DEFAULT_DT
    step_index: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def time(self) -> float:
        return self.step_index * self.dt

    def tick(self) -> None:
        self.step_index += 1


def integrate_step(state: VehicleState, commanded_accel: float,
                   limits: ActuatorLimits, dt: float) -> VehicleState:
    """Advance one control step under actuator clamping.

    The applied acceleration is the commanded value clamped to
    [-max_decel, max_accel], then raised if necessary so the new
    velocity is exactly zero instead of negative.
    """
    if not math.isfinite(commanded_accel):
        raise NumericError(f"non-finite commanded acceleration: {commanded_accel!r}")
    if not dt > 0:
        raise ValueError("dt must be positive")

    applied = min(max(commanded_accel, -limits.max_decel), limits.max_accel)
    velocity = state.velocity + applied * dt
    if velocity < 0.0:
        applied = -state.velocity / dt
        velocity = 0.0
    position = state.position + velocity * dt
    return replace(state, position=position, velocity=velocity, acceleration=applied)


def gap(preceding: VehicleState, ego: VehicleState,
        vehicle_length: float = DEFAULT_VEHICLE_LENGTH) -> float:
    """Bumper-to-bumper distance; negative once the vehicles overlap."""
    return preceding.position - ego.position - vehicle_length


def time_headway(gap_m: float, ego_velocity: float,
                 v_floor: float = THW_VELOCITY_FLOOR) -> float:
    """Gap over ego speed, with the divisor floored to stay finite."""
    return gap_m / max(ego_velocity, v_floor)


def detect_collision(gap_m: float) -> bool:
    return gap_m <= 0.0
