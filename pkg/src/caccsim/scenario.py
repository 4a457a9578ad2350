"""Driving environments, lead-vehicle trajectories, and benign data collection.

The 24 environments are the cross product of terrain x weather x time of
day. Each maps to a trajectory profile whose parameters drive a seeded
generator of piecewise acceleration events; real trajectories can be
substituted through the CSV importer without touching any code.

Benign collection closes the loop: the ego follows each generated lead
under the cooperative controller with a clean V2V channel, and every
control step is recorded together with the raw controller response it
produced. The 80/20 train/test split is by contiguous tail per
environment so no temporal leakage crosses the boundary.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .controller import ControllerInput, ControllerParams, cacc_accel, comp
from .errors import ConfigError, TrajectoryFormatError
from .kinematics import (ActuatorLimits, DEFAULT_DT, DEFAULT_VEHICLE_LENGTH,
                         VehicleState, gap, integrate_step)
from .seeding import derive_seed
from .sensors import SensorConfig, SensorTap


class Terrain(enum.Enum):
    HIGHWAY = "highway"
    SUBURBAN = "suburban"
    CITY = "city"


class Weather(enum.Enum):
    CLEAR = "clear"
    WINDY = "windy"
    SNOWY = "snowy"
    RAINY = "rainy"


class TimeOfDay(enum.Enum):
    DAY = "day"
    NIGHT = "night"


@dataclass(frozen=True)
class Environment:
    terrain: Terrain
    weather: Weather
    time_of_day: TimeOfDay

    @property
    def id(self) -> str:
        return f"{self.terrain.value}-{self.weather.value}-{self.time_of_day.value}"


ALL_ENVIRONMENTS = tuple(
    Environment(t, w, d)
    for t, w, d in itertools.product(Terrain, Weather, TimeOfDay)
)


def parse_environment(text: str) -> Environment:
    """Parse an environment id; component order does not matter."""
    tokens = [tok for tok in text.strip().lower().split("-") if tok]
    terrain = weather = time_of_day = None
    for tok in tokens:
        if tok in Terrain._value2member_map_:
            terrain = Terrain(tok)
        elif tok in Weather._value2member_map_:
            weather = Weather(tok)
        elif tok in TimeOfDay._value2member_map_:
            time_of_day = TimeOfDay(tok)
        else:
            raise ConfigError(f"unknown environment component {tok!r} in {text!r}")
    if terrain is None or weather is None or time_of_day is None:
        raise ConfigError(f"environment {text!r} must name terrain, weather and time of day")
    return Environment(terrain, weather, time_of_day)


@dataclass
class TrajectoryProfile:
    cruise_speed_mean: float = 20.0    # m/s
    cruise_speed_std: float = 1.0      # m/s, draw of the per-run cruise level
    accel_event_rate: float = 4.0      # events/minute
    accel_magnitude_std: float = 0.6   # m/s^2
    smoothing_time_constant: float = 2.0  # s, low-pass on commanded accel
    stop_probability: float = 0.0      # stop events/minute
    duration: float = 900.0            # s
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("cruise_speed_mean", "cruise_speed_std", "accel_event_rate",
                     "accel_magnitude_std", "smoothing_time_constant",
                     "stop_probability"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if not self.duration > 0:
            raise ConfigError("duration must be positive")


# Per-terrain base statistics; weather and time of day modulate them.
# Stop-and-go phases are opt-in through profile overrides.
TERRAIN_TABLE = {
    Terrain.HIGHWAY: dict(cruise_speed_mean=30.0, accel_event_rate=2.0,
                          accel_magnitude_std=0.4, smoothing_time_constant=3.0,
                          stop_probability=0.0, cruise_speed_std=1.5),
    Terrain.SUBURBAN: dict(cruise_speed_mean=18.0, accel_event_rate=6.0,
                           accel_magnitude_std=0.7, smoothing_time_constant=2.0,
                           stop_probability=0.0, cruise_speed_std=1.2),
    Terrain.CITY: dict(cruise_speed_mean=12.0, accel_event_rate=12.0,
                       accel_magnitude_std=0.9, smoothing_time_constant=1.5,
                       stop_probability=0.0, cruise_speed_std=1.0),
}

WEATHER_ACCEL_SCALE = {
    Weather.CLEAR: 1.0,
    Weather.WINDY: 1.1,
    Weather.SNOWY: 0.7,
    Weather.RAINY: 0.85,
}

NIGHT_CRUISE_SCALE = 0.9


def profile_for(env: Environment, overrides: dict | None = None) -> TrajectoryProfile:
    """Deterministic environment -> profile mapping (all values overridable)."""
    base = dict(TERRAIN_TABLE[env.terrain])
    base["accel_magnitude_std"] *= WEATHER_ACCEL_SCALE[env.weather]
    if env.time_of_day is TimeOfDay.NIGHT:
        base["cruise_speed_mean"] *= NIGHT_CRUISE_SCALE
    if overrides:
        unknown = set(overrides) - set(TrajectoryProfile.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown profile overrides: {sorted(unknown)}")
        base.update(overrides)
    return TrajectoryProfile(**base)


@dataclass
class LeadTrajectory:
    t: np.ndarray       # s, uniform dt grid
    accel: np.ndarray   # m/s^2, applied leader acceleration per step
    v0: float           # m/s, leader speed at t=0
    dt: float


def generate_lead_trajectory(profile: TrajectoryProfile,
                             dt: float = DEFAULT_DT) -> LeadTrajectory:
    """Synthesize a leader acceleration trace from the profile.

    Acceleration events arrive as a Poisson stream, are low-pass
    filtered, and the resulting velocity is kept inside
    [0, 1.3 * cruise_speed_mean]; the emitted acceleration is the value
    actually applied after those bounds, so integrating it with the
    same scheme reproduces the leader's velocity exactly.
    """
    rng = np.random.default_rng(profile.rng_seed)
    n = round(profile.duration / dt)
    v_max = 1.3 * profile.cruise_speed_mean

    if profile.cruise_speed_std > 0:
        cruise = profile.cruise_speed_mean + profile.cruise_speed_std * rng.standard_normal()
        cruise = min(max(cruise, 0.0), v_max)
    else:
        cruise = profile.cruise_speed_mean

    def next_arrival(rate_per_min):
        if rate_per_min <= 0:
            return n + 1
        return max(1, round(rng.exponential(60.0 / rate_per_min) / dt))

    next_event = next_arrival(profile.accel_event_rate)
    next_stop = next_arrival(profile.stop_probability)

    applied = np.empty(n)
    v = cruise
    a_s = 0.0
    event_end = -1
    event_cmd = 0.0
    mode = "cruise"  # cruise | stopping | dwell | resume
    dwell_end = -1

    for k in range(n):
        if mode == "cruise":
            if k >= next_stop:
                mode = "stopping"
                next_stop = k + next_arrival(profile.stop_probability)
            elif k >= next_event:
                mag = abs(rng.normal(0.0, profile.accel_magnitude_std))
                # bias event direction back toward the cruise level
                toward = -1.0 if v > cruise else 1.0
                sign = toward if rng.random() < 0.75 else -toward
                event_cmd = sign * mag
                event_end = k + round(rng.uniform(1.0, 4.0) / dt)
                next_event = k + next_arrival(profile.accel_event_rate)

        if mode == "stopping":
            cmd = -2.0
            if v <= 0.05:
                mode = "dwell"
                dwell_end = k + round(rng.uniform(2.0, 5.0) / dt)
        elif mode == "dwell":
            cmd = -1.0 if v > 0 else 0.0
            if k >= dwell_end:
                mode = "resume"
        elif mode == "resume":
            cmd = 1.2
            if v >= 0.9 * cruise:
                mode = "cruise"
        elif k < event_end:
            cmd = event_cmd
        else:
            # gentle cruise hold between events
            cmd = min(max(0.1 * (cruise - v), -0.3), 0.3)

        a_s += (dt / max(profile.smoothing_time_constant, dt)) * (cmd - a_s)
        v_next = min(max(v + a_s * dt, 0.0), v_max)
        applied[k] = (v_next - v) / dt
        v = v_next

    t = np.arange(n) * dt
    return LeadTrajectory(t=t, accel=applied, v0=cruise, dt=dt)


def import_trajectory_csv(path, dt: float = DEFAULT_DT,
                          initial_speed: float = 20.0) -> LeadTrajectory:
    """Load a (t, a) CSV and resample it onto the dt grid."""
    try:
        frame = pd.read_csv(path)
    except Exception as exc:
        raise TrajectoryFormatError(f"cannot parse {path}: {exc}") from exc
    for col in ("t", "a"):
        if col not in frame.columns:
            raise TrajectoryFormatError(f"missing column {col!r} in {path}")
    t_raw = frame["t"].to_numpy(dtype=float)
    a_raw = frame["a"].to_numpy(dtype=float)
    if len(t_raw) < 2:
        raise TrajectoryFormatError("need at least two samples")
    for i in range(len(t_raw)):
        if not (math.isfinite(t_raw[i]) and math.isfinite(a_raw[i])):
            raise TrajectoryFormatError("non-finite value", row=i + 2)
        if i and t_raw[i] <= t_raw[i - 1]:
            raise TrajectoryFormatError("time not strictly increasing", row=i + 2)
    n = int(math.floor((t_raw[-1] - t_raw[0]) / dt)) + 1
    t = t_raw[0] + np.arange(n) * dt
    a = np.interp(t, t_raw, a_raw)
    return LeadTrajectory(t=t - t_raw[0], accel=a, v0=initial_speed, dt=dt)


# --- dataset -----------------------------------------------------------------

DATASET_COLUMNS = ("t", "a_p", "v_p", "v_e", "gap", "a_e_response", "anomaly_flag")


@dataclass
class Dataset:
    """Columnar store of per-step training records."""
    t: np.ndarray
    a_p: np.ndarray
    v_p: np.ndarray
    v_e: np.ndarray
    gap: np.ndarray
    a_e_response: np.ndarray
    anomaly_flag: np.ndarray
    env_id: str | None = None

    def __len__(self):
        return len(self.t)

    def slice(self, lo: int, hi: int) -> "Dataset":
        return Dataset(*(getattr(self, c)[lo:hi] for c in DATASET_COLUMNS),
                       env_id=self.env_id)

    @classmethod
    def concat(cls, parts: list["Dataset"], env_id=None) -> "Dataset":
        if not parts:
            raise ValueError("nothing to concatenate")
        cols = [np.concatenate([getattr(p, c) for p in parts]) for c in DATASET_COLUMNS]
        return cls(*cols, env_id=env_id)

    def to_frame(self) -> pd.DataFrame:
        data = {c: getattr(self, c) for c in DATASET_COLUMNS}
        data["anomaly_flag"] = data["anomaly_flag"].astype(int)
        return pd.DataFrame(data)


def write_dataset_csv(dataset: Dataset, path) -> None:
    frame = dataset.to_frame()
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")


def read_dataset_csv(path, env_id=None) -> Dataset:
    frame = pd.read_csv(path)
    missing = [c for c in DATASET_COLUMNS if c not in frame.columns]
    if missing:
        raise ConfigError(f"dataset {path} missing columns {missing}")
    cols = [frame[c].to_numpy(dtype=float) for c in DATASET_COLUMNS[:-1]]
    flags = frame["anomaly_flag"].to_numpy().astype(bool)
    return Dataset(*cols, flags, env_id=env_id)


def split_contiguous(dataset: Dataset, train_fraction: float = 0.8) -> tuple[Dataset, Dataset]:
    """Temporal split: leading fraction for training, tail for testing."""
    cut = int(len(dataset) * train_fraction)
    return dataset.slice(0, cut), dataset.slice(cut, len(dataset))


def simulate_benign_following(lead: LeadTrajectory,
                              params: ControllerParams,
                              ego_limits: ActuatorLimits,
                              sensor: SensorConfig,
                              vehicle_length: float = DEFAULT_VEHICLE_LENGTH,
                              initial_gap_offset: float = 0.0,
                              env_id: str | None = None) -> Dataset:
    """Run the ego behind the lead with a clean V2V channel.

    Each record holds what the controller consumed that step (the V2V
    payload and the sensed kinematics) plus its raw gap-control
    response; the applied command goes through the mode switch and the
    actuator clamp like any real step.
    """
    dt = lead.dt
    n = len(lead.accel)
    gap0 = params.t_gap_cacc * lead.v0 + params.g_min + initial_gap_offset
    lead_state = VehicleState(position=gap0 + vehicle_length, velocity=lead.v0)
    ego_state = VehicleState(position=0.0, velocity=lead.v0)
    tap = SensorTap(sensor, dt)

    cols = {c: np.empty(n) for c in DATASET_COLUMNS[:-1]}
    for k in range(n):
        a_p_true = float(lead.accel[k])
        g_true = gap(lead_state, ego_state, vehicle_length)
        if g_true <= 0:
            raise RuntimeError(f"benign collection collided at step {k} ({env_id})")
        v_p_s, gap_s = tap.observe(k, lead_state.velocity, g_true)
        inp = ControllerInput(a_p=a_p_true, v_p=v_p_s, v_e=ego_state.velocity, gap=gap_s)
        response = cacc_accel(inp, params)
        command, _mode = comp(inp, params)

        cols["t"][k] = k * dt
        cols["a_p"][k] = a_p_true
        cols["v_p"][k] = v_p_s
        cols["v_e"][k] = ego_state.velocity
        cols["gap"][k] = gap_s
        cols["a_e_response"][k] = response

        ego_state = integrate_step(ego_state, command, ego_limits, dt)
        lead_v = max(lead_state.velocity + a_p_true * dt, 0.0)
        lead_state = VehicleState(position=lead_state.position + lead_v * dt,
                                  velocity=lead_v, acceleration=a_p_true)

    flags = np.zeros(n, dtype=bool)
    return Dataset(cols["t"], cols["a_p"], cols["v_p"], cols["v_e"], cols["gap"],
                   cols["a_e_response"], flags, env_id=env_id)


@dataclass
class BenignCollection:
    """Per-environment datasets plus the global 80/20 split."""
    datasets: dict[str, Dataset]
    train_fraction: float = 0.8
    order: tuple[str, ...] = field(default_factory=tuple)

    def split(self, env_id: str) -> tuple[Dataset, Dataset]:
        return split_contiguous(self.datasets[env_id], self.train_fraction)

    @property
    def global_train(self) -> Dataset:
        return Dataset.concat([self.split(e)[0] for e in self.order], env_id="global")

    @property
    def global_test(self) -> Dataset:
        return Dataset.concat([self.split(e)[1] for e in self.order], env_id="global")

    def manifest(self) -> dict:
        return {
            "environments": list(self.order),
            "train_fraction": self.train_fraction,
            "rows": {e: len(self.datasets[e]) for e in self.order},
            "train_rows": {e: self.split(e)[0].t.shape[0] for e in self.order},
        }


def collect_benign_dataset(environments,
                           params: ControllerParams,
                           ego_limits: ActuatorLimits,
                           sensor: SensorConfig,
                           master_seed: int = 0,
                           dt: float = DEFAULT_DT,
                           profile_overrides: dict | None = None,
                           duration: float | None = None,
                           vehicle_length: float = DEFAULT_VEHICLE_LENGTH,
                           train_fraction: float = 0.8) -> BenignCollection:
    """Generate and record benign driving data for the given environments."""
    datasets = {}
    order = []
    for env in environments:
        overrides = dict(profile_overrides or {})
        if duration is not None:
            overrides["duration"] = duration
        overrides["rng_seed"] = derive_seed(master_seed, "scenario", env.id)
        profile = profile_for(env, overrides)
        lead = generate_lead_trajectory(profile, dt)
        datasets[env.id] = simulate_benign_following(
            lead, params, ego_limits, sensor,
            vehicle_length=vehicle_length, env_id=env.id)
        order.append(env.id)
    return BenignCollection(datasets=datasets, train_fraction=train_fraction,
                            order=tuple(order))
