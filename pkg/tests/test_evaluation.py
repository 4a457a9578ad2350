import numpy as np
import pytest

from caccsim.attack import AttackSpec
from caccsim.controller import ControllerParams
from caccsim.errors import ConfigError
from caccsim.evaluation import (PipelineMode, RunLog, attack_catalog,
                                benign_false_positive_rate, detection_metrics,
                                default_impact_grid, impact_analysis,
                                resolve_attack, run_campaign, sweep_quantiles,
                                threshold_sweep, thw_buckets)
from caccsim.kinematics import ActuatorLimits
from caccsim.resilience import DetectorConfig, OracleModel
from caccsim.scenario import TrajectoryProfile, generate_lead_trajectory
from caccsim.sensors import SensorConfig

PARAMS = ControllerParams()


def _stub_log(thw, flags=None, active=None, collided=False):
    n = len(thw)
    z = np.zeros(n)
    return RunLog(
        dt=0.01, t=np.arange(n) * 0.01, pos_p=z, pos_e=z, v_p=z, v_e=z,
        a_p_true=z, a_p_received=z, delivered=np.ones(n, dtype=bool),
        a_e_pred=z, a_e_cacc=z, a_e_applied=z,
        anomaly_flag=np.zeros(n, dtype=bool) if flags is None else np.asarray(flags, dtype=bool),
        attack_active=np.zeros(n, dtype=bool) if active is None else np.asarray(active, dtype=bool),
        mitigation_path=np.array(["normal"] * n),
        thw=np.asarray(thw, dtype=float), collided=collided)


def test_thw_buckets_arithmetic():
    b = thw_buckets(_stub_log([0.65] * 200))
    assert (b.frac_below, b.frac_ideal, b.frac_above) == (0.0, 100.0, 0.0)
    assert b.max_thw == 0.65 and not b.collision

    b = thw_buckets(_stub_log([0.5] * 100 + [0.8] * 100))
    assert (b.frac_below, b.frac_ideal, b.frac_above) == (50.0, 0.0, 50.0)

    assert thw_buckets(_stub_log([0.6], collided=True)).collision


def test_thw_buckets_band_edges_inclusive():
    b = thw_buckets(_stub_log([0.55, 0.75]))
    assert b.frac_ideal == 100.0


def test_thw_buckets_window():
    log = _stub_log([0.5] * 100 + [0.65] * 100)
    b = thw_buckets(log, window=(1.0, 1.99))
    assert b.frac_ideal == 100.0
    with pytest.raises(ValueError):
        thw_buckets(log, window=(50.0, 60.0))


def test_detection_metrics_formulas():
    flags = [True] * 8 + [False] * 2 + [True] * 12 + [False] * 78
    active = [True] * 10 + [False] * 90
    m = detection_metrics(_stub_log([0.6] * 100, flags=flags, active=active))
    assert m.recall == pytest.approx(0.8)
    assert m.precision == pytest.approx(0.4)
    assert m.f1 == pytest.approx(2 * 0.4 * 0.8 / 1.2)


def test_detection_metrics_perfect_and_undefined():
    active = [True] * 10 + [False] * 10
    perfect = detection_metrics(_stub_log([0.6] * 20, flags=active, active=active))
    assert perfect.recall == perfect.precision == perfect.f1 == 1.0

    benign = _stub_log([0.6] * 20)
    m = detection_metrics(benign)
    assert m.recall is None and m.precision is None and m.f1 is None
    assert benign_false_positive_rate(benign) == 0.0


def _benign_lead(duration=80.0, seed=5, cruise=20.0):
    profile = TrajectoryProfile(cruise_speed_mean=cruise, cruise_speed_std=0.0,
                                accel_event_rate=2.0, accel_magnitude_std=0.3,
                                smoothing_time_constant=3.0, duration=duration,
                                rng_seed=seed)
    return generate_lead_trajectory(profile)


def test_benign_campaign_converges_to_ideal_band():
    log = run_campaign(_benign_lead(), PipelineMode.NAIVE, PARAMS,
                       ActuatorLimits(), SensorConfig(), DetectorConfig())
    assert thw_buckets(log, window=(20.0, 80.0)).frac_ideal == 100.0
    assert not log.collided


def test_campaign_determinism():
    lead = _benign_lead()
    a = run_campaign(lead, PipelineMode.NAIVE, PARAMS, ActuatorLimits(),
                     SensorConfig(), DetectorConfig())
    b = run_campaign(lead, PipelineMode.NAIVE, PARAMS, ActuatorLimits(),
                     SensorConfig(), DetectorConfig())
    assert a.to_frame().equals(b.to_frame())


def test_run_campaign_attack_window_metadata():
    spec = attack_catalog()["cluster-bias+0.8"]
    log = run_campaign(_benign_lead(duration=200.0), PipelineMode.NAIVE, PARAMS,
                       ActuatorLimits(), SensorConfig(), DetectorConfig(),
                       attack=spec)
    assert log.attack_window() == (spec.start, spec.end + 10.0)
    assert log.attack_active.any()
    assert not log.attack_active[: round(spec.start / log.dt)].any()


def test_thw_column_matches_truth():
    log = run_campaign(_benign_lead(duration=20.0), PipelineMode.NAIVE, PARAMS,
                       ActuatorLimits(), SensorConfig(), DetectorConfig())
    gap_true = log.pos_p - log.pos_e - 4.0
    expected = gap_true / np.maximum(log.v_e, 0.1)
    assert np.allclose(log.thw, expected, atol=1e-12)


def test_raccon_requires_models():
    with pytest.raises(ConfigError):
        run_campaign(_benign_lead(duration=5.0), PipelineMode.RACCON, PARAMS,
                     ActuatorLimits(), SensorConfig(), DetectorConfig())


def test_degrade_mode_latches_permanently():
    # hostile stub predictor fires immediately; every later step degrades
    class Hostile:
        model_kind = "predictor"
        def forward(self, features):
            return 1e3

    spec = attack_catalog()["cluster-bias+0.8"]
    log = run_campaign(_benign_lead(duration=60.0), PipelineMode.DEGRADE_ACC,
                       PARAMS, ActuatorLimits(), SensorConfig(),
                       DetectorConfig(), attack=spec, predictor=Hostile())
    first = np.argmax(log.anomaly_flag)
    assert (log.mitigation_path[first:] == "degrade-acc").all()
    assert not log.collided


def test_collision_halts_run():
    # the controller assumes the leader can barely brake (tiny d_p_max,
    # so the safe gap stays small) while the leader actually stops hard
    # and a fabrication attack masks the braking signal
    from caccsim.attack import (BiasFunction, BiasShape, FrequencyPattern,
                                Operation, PatternKind)
    profile = TrajectoryProfile(cruise_speed_mean=25.0, cruise_speed_std=0.0,
                                accel_event_rate=0.0, accel_magnitude_std=0.0,
                                stop_probability=0.0, duration=60.0, rng_seed=0)
    lead = generate_lead_trajectory(profile)
    accel = lead.accel.copy()
    brake = round(20.0 / lead.dt)
    accel[brake:brake + round(3.2 / lead.dt)] = -8.0  # emergency stop
    lead.accel = accel
    spec = AttackSpec(operation=Operation.FABRICATION,
                      pattern=FrequencyPattern(PatternKind.CONTINUOUS),
                      bias=BiasFunction(BiasShape.CONSTANT, b=8.0),
                      start=19.0, end=40.0)
    params = ControllerParams(d_p_max=1.5)
    log = run_campaign(lead, PipelineMode.NAIVE, params,
                       ActuatorLimits(), SensorConfig(),
                       DetectorConfig(), attack=spec)
    assert log.collided
    assert log.collision_step == len(log)
    assert thw_buckets(log, log.attack_window()).collision


def test_sweep_exact_monotonicity_two_envs(benchmark_harness):
    cells = threshold_sweep(benchmark_harness,
                            thresholds=(0.05, 0.1, 0.2, 0.4),
                            environments=["suburban-clear-day", "city-windy-night"])
    assert len(cells) == 8
    for env in ("suburban-clear-day", "city-windy-night"):
        env_cells = sorted((c for c in cells if c.env_id == env),
                           key=lambda c: c.threshold)
        recalls = [c.recall for c in env_cells]
        fps = [c.fp_benign for c in env_cells]
        assert all(a >= b - 1e-12 for a, b in zip(recalls, recalls[1:])
                   if a is not None and b is not None)
        assert all(a >= b - 1e-12 for a, b in zip(fps, fps[1:]))
    q = sweep_quantiles(cells, "recall")
    assert list(q.columns) == ["threshold", "min", "q1", "median", "q3", "max"]


def test_impact_analysis_qualitative_ordering(benchmark_harness):
    grid = default_impact_grid()
    assert len(grid) == 12
    sub = {k: grid[k] for k in ("continuous-constant+0.15", "discrete-constant+0.5",
                                "random-continuous")}
    results = impact_analysis(benchmark_harness, attack_grid=sub)
    by_name = {r.name: r for r in results}

    def displacement_integral(res):
        log = res.log
        idx = log.window_indices(log.attack_window())
        benign_eq = 0.55 + benchmark_harness.params.g_min / 18.0
        return float(np.sum(np.abs(log.thw[idx] - benign_eq))) * log.dt

    cont = displacement_integral(by_name["continuous-constant+0.15"])
    disc = displacement_integral(by_name["discrete-constant+0.5"])
    assert cont > disc
    rand = by_name["random-continuous"].buckets
    assert rand.frac_ideal >= 99.0


def test_resolve_attack_forms(tmp_path):
    assert resolve_attack(None) is None
    assert resolve_attack("none") is None
    spec = resolve_attack("mitm")
    assert spec is not None
    assert resolve_attack(spec) is spec
    from caccsim.attack import spec_to_dict
    as_dict = spec_to_dict(spec)
    assert resolve_attack(as_dict) == spec

    path = tmp_path / "attack.json"
    import json
    path.write_text(json.dumps(as_dict))
    assert resolve_attack(str(path)) == spec

    with pytest.raises(ConfigError):
        resolve_attack("zero-day-special")
