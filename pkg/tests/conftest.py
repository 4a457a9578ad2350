"""Shared fixtures: one benchmark dataset + model pair for the session.

Training runs once per pytest session on a reduced-duration benchmark
dataset (24 environments x 120 s); both the unit tests that need real
models and the acceptance suite share it.
"""

import pytest

from caccsim import neural
from caccsim.controller import ControllerParams
from caccsim.evaluation import (BENCHMARK_CONTROLLER, BENCHMARK_DETECTOR_THRESHOLD,
                                BENCHMARK_ENVIRONMENT, BENCHMARK_PROFILE_OVERRIDES,
                                HarnessConfig)
from caccsim.kinematics import ActuatorLimits
from caccsim.resilience import DetectorConfig
from caccsim.scenario import ALL_ENVIRONMENTS, collect_benign_dataset
from caccsim.seeding import derive_seed
from caccsim.sensors import SensorConfig

MASTER_SEED = 42
DATASET_DURATION = 120.0


@pytest.fixture(scope="session")
def benchmark_params():
    return ControllerParams(**BENCHMARK_CONTROLLER)


@pytest.fixture(scope="session")
def benchmark_collection(benchmark_params):
    return collect_benign_dataset(
        ALL_ENVIRONMENTS, benchmark_params, ActuatorLimits(), SensorConfig(),
        master_seed=MASTER_SEED, duration=DATASET_DURATION)


@pytest.fixture(scope="session")
def trained_models(benchmark_collection):
    train_set = benchmark_collection.global_train
    test_set = benchmark_collection.global_test
    predictor, predictor_stats = neural.train(
        train_set, test_set,
        neural.default_train_config("predictor",
                                    rng_seed=derive_seed(MASTER_SEED, "train", "predictor")),
        "predictor")
    estimator, _ = neural.train(
        train_set, test_set,
        neural.default_train_config("response_estimator",
                                    rng_seed=derive_seed(MASTER_SEED, "train", "response_estimator")),
        "response_estimator")
    return {"predictor": predictor, "estimator": estimator,
            "predictor_stats": predictor_stats}


@pytest.fixture(scope="session")
def benchmark_harness(benchmark_params, trained_models):
    return HarnessConfig(
        params=benchmark_params,
        ego_limits=ActuatorLimits(),
        sensor=SensorConfig(),
        detector=DetectorConfig(anomaly_threshold=BENCHMARK_DETECTOR_THRESHOLD),
        predictor=trained_models["predictor"],
        estimator=trained_models["estimator"],
        master_seed=MASTER_SEED,
        duration=200.0,
        profile_overrides=dict(BENCHMARK_PROFILE_OVERRIDES),
        environment=BENCHMARK_ENVIRONMENT)
