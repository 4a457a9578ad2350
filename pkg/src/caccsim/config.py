"""Run-configuration loading and validation.

Configs are JSON documents validated against the shipped schema
(``config_schema.json``); unknown keys are rejected and violations are
reported with the failing key path. A validated config materializes
into the typed parameter objects the rest of the package consumes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from .controller import ControllerParams
from .errors import ConfigError
from .kinematics import ActuatorLimits, DEFAULT_DT, DEFAULT_VEHICLE_LENGTH
from .resilience import DetectorConfig
from .scenario import ALL_ENVIRONMENTS, Environment, parse_environment
from .sensors import SensorConfig


def load_schema() -> dict:
    with resources.files("caccsim").joinpath("config_schema.json").open() as fh:
        return json.load(fh)


@dataclass
class RunConfig:
    master_seed: int = 1234
    dt: float = DEFAULT_DT
    vehicle_length: float = DEFAULT_VEHICLE_LENGTH
    outdir: str = "out"
    jobs: int = 1
    mode: str = "raccon"
    attack: object = None                      # None | name | inline dict
    controller: ControllerParams = field(default_factory=ControllerParams)
    ego_limits: ActuatorLimits = field(default_factory=ActuatorLimits)
    sensor: SensorConfig = field(default_factory=SensorConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    environments: list[Environment] = field(default_factory=lambda: list(ALL_ENVIRONMENTS))
    environment: Environment | None = None     # single-campaign scenario
    duration: float = 200.0
    initial_gap_offset: float = 0.0
    trajectory_csv: str | None = None
    initial_speed: float = 20.0
    profile_overrides: dict = field(default_factory=dict)          # dataset collection
    campaign_profile_overrides: dict = field(default_factory=dict)  # per-campaign scenario
    model_paths: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    subversion: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def validate_config_dict(data: dict) -> None:
    """Schema-check a raw config; raise ConfigError naming the key path."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config key {path!r}: {err.message}")


def config_from_dict(data: dict) -> RunConfig:
    validate_config_dict(data)
    cfg = RunConfig(raw=data)
    cfg.master_seed = data.get("master_seed", cfg.master_seed)
    cfg.dt = data.get("dt", cfg.dt)
    cfg.vehicle_length = data.get("vehicle_length", cfg.vehicle_length)
    cfg.outdir = data.get("outdir", cfg.outdir)
    cfg.jobs = data.get("jobs", cfg.jobs)
    cfg.mode = data.get("mode", cfg.mode)
    cfg.attack = data.get("attack")

    try:
        if "controller" in data:
            cfg.controller = ControllerParams(**data["controller"])
        if "ego_limits" in data:
            cfg.ego_limits = ActuatorLimits(**data["ego_limits"])
        if "sensor" in data:
            cfg.sensor = SensorConfig(**data["sensor"])
        if "detector" in data:
            cfg.detector = DetectorConfig(**data["detector"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    scenario = data.get("scenario", {})
    envs = scenario.get("environments", "all")
    if envs == "all":
        cfg.environments = list(ALL_ENVIRONMENTS)
    else:
        cfg.environments = [parse_environment(e) for e in envs]
    if "environment" in scenario:
        cfg.environment = parse_environment(scenario["environment"])
    cfg.duration = scenario.get("duration", cfg.duration)
    cfg.initial_gap_offset = scenario.get("initial_gap_offset", 0.0)
    cfg.trajectory_csv = scenario.get("trajectory_csv")
    cfg.initial_speed = scenario.get("initial_speed", cfg.initial_speed)
    cfg.profile_overrides = dict(scenario.get("profile_overrides", {}))
    cfg.campaign_profile_overrides = dict(scenario.get("campaign_profile_overrides", {}))

    cfg.model_paths = dict(data.get("models", {}))
    cfg.train = dict(data.get("train", {}))
    cfg.sweep = dict(data.get("sweep", {}))
    cfg.subversion = dict(data.get("subversion", {}))
    return cfg


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig(raw={})
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return config_from_dict(data)
