"""Gap-control laws for the ego vehicle.

Two laws are provided: the sensor-only variant (``acc_accel``) with its
conservative 1.2 s target headway, and the cooperative variant
(``cacc_accel``) that folds in the acceleration reported over V2V and
runs at a 0.55 s headway. ``comp`` wraps either law with the safe-gap
mode switch: at or below the safe gap the controller commands maximum
braking regardless of the law output.

Outputs are raw (pre-actuator); clamping happens in kinematics so the
detection layer sees the controller response, not the actuator response.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class ControlMode(enum.Enum):
    GAP_CONTROL = "gap-control"
    COLLISION_AVOIDANCE = "collision-avoidance"


class ControllerLaw(enum.Enum):
    CACC = "cacc"
    ACC = "acc"


@dataclass(frozen=True)
class ControllerParams:
    k_a: float = 0.66          # feedforward gain on reported acceleration
    k_v: float = 0.99          # 1/s, gain on relative velocity
    k_g: float = 4.08          # 1/s^2, gain on gap error
    g_min: float = 1.0         # m, standstill space margin
    t_gap_acc: float = 1.2     # s, sensor-only target headway
    t_gap_cacc: float = 0.55   # s, cooperative target headway
    d_e_max: float = 8.0       # m/s^2, ego max deceleration
    d_p_max: float = 8.0       # m/s^2, assumed leader max deceleration
    # The sensor-only law's leading term is a constant -k_a * d_p_max
    # braking bias. Set False to use k_a * a_p feedforward instead.
    acc_constant_brake_term: bool = True

    def __post_init__(self):
        for name in ("k_a", "k_v", "k_g", "g_min", "t_gap_acc",
                     "t_gap_cacc", "d_e_max", "d_p_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.t_gap_acc > self.t_gap_cacc:
            raise ValueError("t_gap_acc must exceed t_gap_cacc")


@dataclass(frozen=True)
class ControllerInput:
    a_p: float   # m/s^2, V2V-reported leader acceleration (untrusted)
    v_p: float   # m/s, sensed leader velocity
    v_e: float   # m/s, ego velocity
    gap: float   # m, sensed bumper-to-bumper gap


def safe_gap(v_e: float, v_p: float, params: ControllerParams) -> float:
    """Minimum gap below which the controller must brake at full force."""
    return (0.1 * v_e
            + v_e * v_e / (2.0 * params.d_e_max)
            - v_p * v_p / (2.0 * params.d_p_max)
            + params.g_min)


def acc_accel(inp: ControllerInput, params: ControllerParams) -> float:
    """Sensor-only gap-control response (raw, pre-clamp)."""
    if params.acc_constant_brake_term:
        lead_term = -params.k_a * params.d_p_max
    else:
        lead_term = params.k_a * inp.a_p
    return (lead_term
            + params.k_v * (inp.v_p - inp.v_e)
            + params.k_g * (inp.gap - inp.v_e * params.t_gap_acc - params.g_min))


def cacc_accel(inp: ControllerInput, params: ControllerParams) -> float:
    """Cooperative gap-control response (raw, pre-clamp)."""
    return (params.k_a * inp.a_p
            + params.k_v * (inp.v_p - inp.v_e)
            + params.k_g * (inp.gap - inp.v_e * params.t_gap_cacc - params.g_min))


def comp(inp: ControllerInput, params: ControllerParams,
         law: ControllerLaw = ControllerLaw.CACC) -> tuple[float, ControlMode]:
    """Mode-switched controller response.

    The boundary gap == safe_gap belongs to collision avoidance.
    """
    if inp.gap <= safe_gap(inp.v_e, inp.v_p, params):
        return -params.d_e_max, ControlMode.COLLISION_AVOIDANCE
    if law is ControllerLaw.ACC:
        return acc_accel(inp, params), ControlMode.GAP_CONTROL
    return cacc_accel(inp, params), ControlMode.GAP_CONTROL
