"""On-board detection and mitigation pipeline.

Per control step: predict the expected controller response from the
(possibly hostile) inputs, compare it with the actual controller
response, and on deviation beyond the threshold, or on communication
loss, enter mitigation. Mitigation escalates the sensor rate, discards
the V2V acceleration in favor of a finite-difference reconstruction
from leader-velocity samples, queries the trusted-input estimator, and
lets a worst-case plausibility check choose between the corrected
controller output, the estimator output, or the conservative
sensor-only fallback.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .attack import V2VMessage
from .controller import (ControlMode, ControllerInput, ControllerParams,
                         acc_accel, comp)
from .errors import ConfigError
from .kinematics import THW_VELOCITY_FLOOR
from .sensors import SensorConfig, SensorRate, SensorTap


@dataclass
class DetectorConfig:
    anomaly_threshold: float = 0.15  # m/s^2 tolerated deviation
    enabled: bool = True

    def __post_init__(self):
        if not self.anomaly_threshold > 0:
            raise ConfigError("anomaly_threshold must be positive")


class MitigationPath(enum.Enum):
    NORMAL_CACC = "normal"
    CORRECTED_CACC = "corrected"
    RESPONSE_ESTIMATOR = "estimator"
    DEGRADE_ACC = "degrade-acc"
    COLLISION_AVOIDANCE = "collision-avoidance"


@dataclass
class StepDecision:
    a_e_cacc: float                 # controller response on the V2V input
    a_e_pred: float                 # learned expectation of that response
    anomaly_flag: bool
    no_comm: bool
    mitigation_path: MitigationPath
    a_e_applied: float              # command handed to the actuators
    a_e_est: float | None = None
    t_gap_c: float | None = None
    t_gap_est: float | None = None


def comparator(a_e_cacc: float, a_e_pred: float, config: DetectorConfig) -> bool:
    """Deviation strictly beyond the threshold counts as an anomaly."""
    if not config.enabled:
        return False
    return abs(a_e_cacc - a_e_pred) > config.anomaly_threshold


class OracleModel:
    """Mirrors the control law itself; a perfect normal-behavior reference.

    Useful for transparency checks and for running the pipeline without
    trained weights. The estimator flavor sees trusted inputs only and
    assumes a coasting leader.
    """

    def __init__(self, params: ControllerParams, kind: str = "predictor"):
        if kind not in ("predictor", "response_estimator"):
            raise ConfigError(f"unknown oracle kind {kind!r}")
        self.params = params
        self.model_kind = kind

    def forward(self, features) -> float:
        if self.model_kind == "predictor":
            a_p, v_p, v_e, gap_m = features
        else:
            v_p, v_e, gap_m = features
            a_p = 0.0
        inp = ControllerInput(a_p=a_p, v_p=v_p, v_e=v_e, gap=gap_m)
        value, _ = comp(inp, self.params)
        return value


def get_tgap(a_candidate: float, v_p: float, v_e: float, gap_m: float,
             params: ControllerParams, hold_time: float,
             dt: float = 0.01, horizon: float = 10.0) -> float:
    """Worst-case minimum time headway if this command were applied.

    The leader is assumed to brake at its maximum deceleration to a
    standstill. The ego applies the candidate for one mitigation
    interval, then brakes at its own maximum. The minimum headway over
    the rollout (until both stand still, capped at the horizon) is
    returned; an already-collided or colliding rollout yields 0.
    """
    if gap_m <= 0:
        return 0.0
    n = int(round(horizon / dt)) + 1
    tau = np.arange(n) * dt
    v_lead = np.maximum(v_p - params.d_p_max * tau, 0.0)
    v_hold = v_e + a_candidate * hold_time
    v_ego = np.where(tau <= hold_time,
                     v_e + a_candidate * tau,
                     v_hold - params.d_e_max * (tau - hold_time))
    v_ego = np.maximum(v_ego, 0.0)

    both_stopped = (v_lead <= 0.0) & (v_ego <= 0.0)
    if both_stopped.any():
        n = int(np.argmax(both_stopped)) + 1
        tau, v_lead, v_ego = tau[:n], v_lead[:n], v_ego[:n]

    x_lead = np.concatenate(([0.0], np.cumsum(0.5 * (v_lead[1:] + v_lead[:-1]) * dt)))
    x_ego = np.concatenate(([0.0], np.cumsum(0.5 * (v_ego[1:] + v_ego[:-1]) * dt)))
    g = gap_m + x_lead - x_ego
    thw = g / np.maximum(v_ego, THW_VELOCITY_FLOOR)
    return max(0.0, float(thw.min()))


def plausibility(a_e_est: float, a_e_corrected: float, inp: ControllerInput,
                 params: ControllerParams, hold_time: float,
                 dt: float = 0.01) -> tuple[float, MitigationPath, float, float]:
    """Choose the safest efficient command among the mitigation candidates.

    The corrected controller output wins when its worst-case headway is
    safe and tighter than the estimator's; otherwise the estimator wins
    when safe; otherwise degrade to the sensor-only law.
    """
    t_gap_c = get_tgap(a_e_corrected, inp.v_p, inp.v_e, inp.gap, params, hold_time, dt)
    t_gap_est = get_tgap(a_e_est, inp.v_p, inp.v_e, inp.gap, params, hold_time, dt)
    if t_gap_c > params.t_gap_cacc and t_gap_c < t_gap_est and t_gap_c < params.t_gap_acc:
        return a_e_corrected, MitigationPath.CORRECTED_CACC, t_gap_c, t_gap_est
    if t_gap_est > params.t_gap_cacc and t_gap_est < params.t_gap_acc:
        return a_e_est, MitigationPath.RESPONSE_ESTIMATOR, t_gap_c, t_gap_est
    return acc_accel(inp, params), MitigationPath.DEGRADE_ACC, t_gap_c, t_gap_est


class ResiliencePipeline:
    """Stateful per-vehicle instance of the detection and mitigation loop.

    Holds the sensor tap, the last delivered payload, and the current
    sensor rate; one instance per simulated ego vehicle, not shared.
    """

    def __init__(self, predictor, estimator, params: ControllerParams,
                 detector: DetectorConfig, sensor: SensorConfig,
                 dt: float, lead_accel_bound: float = 3.0):
        self.predictor = predictor
        self.estimator = estimator
        self.params = params
        self.detector = detector
        self.sensor = sensor
        self.dt = dt
        self.lead_accel_bound = lead_accel_bound
        self.tap = SensorTap(sensor, dt)
        self.rate = SensorRate.NORMAL
        self.last_payload = 0.0

    def reconstruct_lead_accel(self) -> float:
        """Finite-difference leader acceleration from velocity samples;
        clamped so the 1/dt factor cannot amplify glitches beyond what
        the leader could physically do."""
        raw = self.tap.finite_difference_accel()
        if raw is None:
            return 0.0
        return min(max(raw, -self.params.d_p_max), self.lead_accel_bound)

    def step(self, msg: V2VMessage, v_p_true: float, v_e: float,
             gap_true: float) -> StepDecision:
        k = msg.step_index
        no_comm = not msg.delivered
        if msg.delivered:
            self.last_payload = msg.payload_a_p
        a_p = self.last_payload  # last delivered payload when comm is lost

        v_p_s, gap_s = self.tap.observe(k, v_p_true, gap_true, self.rate)
        inp = ControllerInput(a_p=a_p, v_p=v_p_s, v_e=v_e, gap=gap_s)
        a_e_cacc, mode = comp(inp, self.params)
        features = (a_p, v_p_s, v_e, gap_s)
        a_e_pred = self.predictor.forward(features)
        anomaly = comparator(a_e_cacc, a_e_pred, self.detector)

        if not (anomaly or no_comm):
            self.rate = SensorRate.NORMAL
            path = MitigationPath.NORMAL_CACC
            return StepDecision(a_e_cacc, a_e_pred, False, False, path, a_e_cacc)

        # mitigation mode: fresh sensors, discard the V2V acceleration
        self.rate = SensorRate.MAX
        v_p_s, gap_s = self.tap.refresh(k, v_p_true, gap_true)
        a_p_recon = self.reconstruct_lead_accel()
        inp_corr = ControllerInput(a_p=a_p_recon, v_p=v_p_s, v_e=v_e, gap=gap_s)
        a_corrected, mode_corr = comp(inp_corr, self.params)
        a_e_est = self.estimator.forward((v_p_s, v_e, gap_s))
        applied, path, t_gap_c, t_gap_est = plausibility(
            a_e_est, a_corrected, inp_corr, self.params,
            hold_time=1.0 / self.sensor.f_normal, dt=self.dt)
        if path is MitigationPath.CORRECTED_CACC and mode_corr is ControlMode.COLLISION_AVOIDANCE:
            path = MitigationPath.COLLISION_AVOIDANCE
        return StepDecision(a_e_cacc, a_e_pred, anomaly, no_comm, path, applied,
                            a_e_est=a_e_est, t_gap_c=t_gap_c, t_gap_est=t_gap_est)
