import json
import math

import pytest
from hypothesis import given, strategies as st

from caccsim.attack import (AttackSpec, BiasFunction, BiasShape, FrequencyPattern,
                            Operation, PatternKind, apply_attack,
                            apply_flooding_marker, attack_active, bias_value,
                            load_campaign_file, nday_preset, pattern_active,
                            spec_from_dict, spec_to_dict)
from caccsim.errors import ConfigError

DT = 0.01


def _mutation(bias, pattern=None, start=0.0, end=None, seed=0):
    return AttackSpec(operation=Operation.MUTATION,
                      pattern=pattern or FrequencyPattern(PatternKind.CONTINUOUS),
                      bias=bias, start=start, end=end, rng_seed=seed)


def test_constant_bias_addition():
    spec = _mutation(BiasFunction(BiasShape.CONSTANT, b=0.8))
    msg = apply_attack(spec, 100, 0.5, DT)
    assert msg.payload_a_p == pytest.approx(1.3, abs=1e-12)
    assert msg.delivered and not msg.fabricated


def test_sinusoidal_bias_zero_at_onset():
    spec = _mutation(BiasFunction(BiasShape.SINUSOIDAL, b=0.8, f=0.05), start=5.0)
    msg = apply_attack(spec, 500, 0.4, DT)  # t == start -> t_attack == 0
    assert msg.payload_a_p == pytest.approx(0.4, abs=1e-12)


def test_linear_bias_uses_attack_clock():
    spec = _mutation(BiasFunction(BiasShape.LINEAR, b=0.3), start=2.0)
    msg = apply_attack(spec, 1200, 0.1, DT)  # t = 12 s, t_attack = 10 s
    assert msg.payload_a_p == pytest.approx(0.1 + 3.0, abs=1e-12)


def test_outside_window_is_benign():
    spec = _mutation(BiasFunction(BiasShape.CONSTANT, b=5.0), start=10.0, end=20.0)
    before = apply_attack(spec, 500, 0.2, DT)
    after = apply_attack(spec, 2500, 0.2, DT)
    assert before.payload_a_p == 0.2 and after.payload_a_p == 0.2


def test_fabrication_replaces_ground_truth():
    spec = AttackSpec(operation=Operation.FABRICATION,
                      pattern=FrequencyPattern(PatternKind.CONTINUOUS),
                      bias=BiasFunction(BiasShape.CONSTANT, b=1.5, sign=-1))
    msg = apply_attack(spec, 10, 0.7, DT)
    assert msg.fabricated
    assert msg.payload_a_p == pytest.approx(-1.5, abs=1e-12)


def test_delivery_prevention_drops_messages():
    spec = AttackSpec(operation=Operation.DELIVERY_PREVENTION,
                      pattern=FrequencyPattern(PatternKind.CONTINUOUS))
    msg = apply_attack(spec, 10, 0.7, DT)
    assert not msg.delivered


def test_pattern_continuous_always_active():
    pat = FrequencyPattern(PatternKind.CONTINUOUS)
    for t in (0.0, 0.5, 123.4):
        assert pattern_active(pat, t, DT)


def test_pattern_cluster_window_arithmetic():
    pat = FrequencyPattern(PatternKind.CLUSTER, period=20.0, burst=2.0)
    assert pattern_active(pat, 1.9, DT)
    assert not pattern_active(pat, 2.1, DT)
    assert pattern_active(pat, 20.5, DT)
    assert not pattern_active(pat, 39.0, DT)


def test_pattern_discrete_one_step_per_period():
    pat = FrequencyPattern(PatternKind.DISCRETE, period=5.0)
    window = [k for k in range(round(5.0 / DT))
              if pattern_active(pat, k * DT, DT)]
    assert len(window) == 1
    later = [k for k in range(round(5.0 / DT), round(10.0 / DT))
             if pattern_active(pat, k * DT, DT)]
    assert len(later) == 1


def test_zero_bias_attack_is_identity():
    spec = _mutation(BiasFunction(BiasShape.CONSTANT, b=0.0))
    for k in range(0, 2000, 37):
        a_true = math.sin(k * 0.01)
        assert apply_attack(spec, k, a_true, DT).payload_a_p == a_true


@given(period=st.floats(1.0, 60.0), duty=st.floats(0.05, 0.95))
def test_cluster_duty_cycle_conservation(period, duty):
    burst = period * duty
    pat = FrequencyPattern(PatternKind.CLUSTER, period=period, burst=burst)
    periods = 3
    n = round(periods * period / DT)
    active = sum(pattern_active(pat, k * DT, DT) for k in range(n))
    expected = periods * burst / DT
    assert abs(active - expected) <= periods + 1  # one-step tolerance per period


def test_random_bias_deterministic_per_seed_and_step():
    bias = BiasFunction(BiasShape.RANDOM_UNIFORM, lo=-2.0, hi=2.0)
    a = bias_value(bias, 1.0, rng_seed=9, step_index=100)
    b = bias_value(bias, 1.0, rng_seed=9, step_index=100)
    c = bias_value(bias, 1.0, rng_seed=9, step_index=101)
    assert a == b
    assert a != c
    assert -2.0 <= a <= 2.0


def test_nday_mitm_closed_form():
    spec = nday_preset("mitm")
    assert spec.operation is Operation.MUTATION
    assert spec.pattern.kind is PatternKind.CONTINUOUS
    t_attack = 12.34
    k = round(t_attack / DT)
    msg = apply_attack(spec, k, 0.0, DT)
    assert msg.payload_a_p == pytest.approx(0.8 * math.sin(0.05 * t_attack), abs=1e-12)


def test_nday_jamming_duty_cycle():
    spec = nday_preset("jamming")
    n = round(200.0 / DT)
    dropped = sum(not apply_attack(spec, k, 0.0, DT).delivered for k in range(n))
    assert dropped / n == pytest.approx(0.10, abs=0.005)


def test_nday_flooding_gaps_every_ten_seconds():
    spec = nday_preset("flooding")
    assert spec.operation is Operation.DELIVERY_PREVENTION
    assert spec.pattern.period == 10.0 and spec.pattern.burst == 2.0
    msg = apply_flooding_marker(spec, apply_attack(spec, 50, 0.0, DT))
    assert not msg.delivered and msg.fabricated
    # delivery resumes between bursts
    ok = apply_flooding_marker(spec, apply_attack(spec, round(5.0 / DT), 0.0, DT))
    assert ok.delivered and not ok.fabricated


def test_nday_unknown_name():
    with pytest.raises(ConfigError):
        nday_preset("quantum")


def test_attack_active_ground_truth_labels():
    spec = _mutation(BiasFunction(BiasShape.CONSTANT, b=1.0),
                     pattern=FrequencyPattern(PatternKind.CLUSTER, period=10.0, burst=2.0),
                     start=5.0, end=25.0)
    assert not attack_active(spec, 100, DT)          # before window
    assert attack_active(spec, 600, DT)              # inside first burst
    assert not attack_active(spec, 900, DT)          # inside window, between bursts
    assert not attack_active(spec, 2600, DT)         # after window
    assert not attack_active(None, 600, DT)


def test_spec_json_round_trip():
    spec = _mutation(BiasFunction(BiasShape.SINUSOIDAL, b=0.8, f=0.05, sign=-1),
                     pattern=FrequencyPattern(PatternKind.CLUSTER, period=16.0, burst=4.0),
                     start=20.0, end=110.0, seed=7)
    again = spec_from_dict(spec_to_dict(spec))
    assert again == spec


def test_campaign_file_round_trip(tmp_path):
    specs = [
        {"name": "a", **spec_to_dict(_mutation(BiasFunction(BiasShape.CONSTANT, b=0.8)))},
        {"name": "b", **spec_to_dict(nday_preset("jamming"))},
    ]
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps(specs))
    loaded = load_campaign_file(path)
    assert set(loaded) == {"a", "b"}
    assert loaded["b"].operation is Operation.DELIVERY_PREVENTION

    path.write_text(json.dumps([{"operation": "mutation"}]))
    with pytest.raises(ConfigError):
        load_campaign_file(path)


def test_spec_validation():
    with pytest.raises(ConfigError):
        FrequencyPattern(PatternKind.CLUSTER, period=2.0, burst=3.0)
    with pytest.raises(ConfigError):
        BiasFunction(BiasShape.SINUSOIDAL, b=1.0, f=0.0)
    with pytest.raises(ConfigError):
        AttackSpec(operation=Operation.MUTATION,
                   pattern=FrequencyPattern(PatternKind.CONTINUOUS), bias=None)
    with pytest.raises(ConfigError):
        _mutation(BiasFunction(BiasShape.CONSTANT, b=1.0), start=10.0, end=5.0)
