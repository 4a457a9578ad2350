"""RADAR/LIDAR sampling model.

Leader velocity and gap reach the controller through a sampled sensor
tap. Under normal operation the tap refreshes at ``f_normal``; during
mitigation it is escalated to ``f_max`` and refreshes every control
step. The tap keeps its last two distinct samples so the mitigation
layer can reconstruct the leader's acceleration by finite differencing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class SensorRate(enum.Enum):
    NORMAL = "normal"
    MAX = "max"


@dataclass
class SensorConfig:
    f_normal: float = 10.0  # Hz
    f_max: float = 100.0    # Hz

    def __post_init__(self):
        if not 0 < self.f_normal <= self.f_max:
            raise ValueError("need 0 < f_normal <= f_max")


class SensorTap:
    def __init__(self, config: SensorConfig, dt: float):
        if config.f_max > 1.0 / dt + 1e-9:
            raise ValueError("f_max cannot exceed the control frequency")
        self.config = config
        self.dt = dt
        self._period_normal = max(1, round(1.0 / (config.f_normal * dt)))
        self._v_p = None
        self._gap = None
        self._sample_step = None
        self._prev_v_p = None
        self._prev_step = None

    def observe(self, step_index: int, v_p_true: float, gap_true: float,
                rate: SensorRate = SensorRate.NORMAL) -> tuple[float, float]:
        """Return the sensed (v_p, gap), refreshing per the given rate."""
        period = 1 if rate is SensorRate.MAX else self._period_normal
        stale = self._sample_step is None or step_index - self._sample_step >= period
        if stale and step_index != self._sample_step:
            if self._sample_step is not None:
                self._prev_v_p = self._v_p
                self._prev_step = self._sample_step
            self._v_p = v_p_true
            self._gap = gap_true
            self._sample_step = step_index
        return self._v_p, self._gap

    def refresh(self, step_index: int, v_p_true: float, gap_true: float) -> tuple[float, float]:
        """Force a fresh sample now (mitigation escalates to f_max)."""
        return self.observe(step_index, v_p_true, gap_true, SensorRate.MAX)

    def finite_difference_accel(self) -> float | None:
        """Leader acceleration from the last two distinct samples."""
        if self._prev_step is None:
            return None
        dt_samples = (self._sample_step - self._prev_step) * self.dt
        return (self._v_p - self._prev_v_p) / dt_samples
