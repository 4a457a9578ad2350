import json

import numpy as np
import pytest

from caccsim import neural
from caccsim.errors import ModelError, TrainingError
from caccsim.neural import (MlpModel, TrainConfig, features_for, load_model,
                            loss_and_grads, mae, save_model, train)
from caccsim.scenario import Dataset


def _dataset(x, y, env_id="synthetic"):
    n = len(y)
    zeros = np.zeros(n)
    return Dataset(t=np.arange(n) * 0.01, a_p=x[:, 0], v_p=x[:, 1],
                   v_e=x[:, 2], gap=x[:, 3], a_e_response=np.asarray(y, dtype=float),
                   anomaly_flag=np.zeros(n, dtype=bool), env_id=env_id)


def _linear_problem(n=4000, seed=0, noise=0.0):
    # gap-control-like affine target with a bounded response range
    rng = np.random.default_rng(seed)
    a = rng.uniform(-2.0, 2.0, n)
    v_p = rng.uniform(5.0, 30.0, n)
    dv = rng.uniform(-1.0, 1.0, n)
    e = rng.uniform(-1.0, 1.0, n)
    x = np.column_stack([a, v_p, v_p - dv, 11.0 + e])
    y = 0.66 * a + 0.99 * dv + 4.08 * e
    if noise:
        y = y + rng.normal(0, noise, n)
    return _dataset(x, y)


def _tiny_model(weights, biases, kind="predictor", activation="relu"):
    dims = [w.shape[1] for w in weights] + [1]
    d = len(neural.FEATURES_BY_KIND[kind])
    return MlpModel(kind, dims, activation,
                    means=np.zeros(d), stds=np.ones(d),
                    weights=[np.asarray(w, dtype=float) for w in weights],
                    biases=[np.asarray(b, dtype=float) for b in biases])


def test_zero_weight_model_outputs_bias():
    model = _tiny_model([np.zeros((1, 4))], [np.array([0.37])])
    assert model.forward((1.0, 2.0, 3.0, 4.0)) == 0.37


def test_single_linear_layer_identity_chain():
    model = _tiny_model([np.array([[1.0, 0.0, 0.0, 0.0]])], [np.array([0.0])])
    assert model.forward((2.0, 5.0, 7.0, 9.0)) == 2.0


def test_dimension_mismatch_rejected():
    model = _tiny_model([np.zeros((1, 4))], [np.zeros(1)])
    with pytest.raises(ModelError):
        model.forward((1.0, 2.0, 3.0))


@pytest.mark.parametrize("activation", ["tanh", "relu"])
def test_gradient_check_small_networks(activation):
    rng = np.random.default_rng(5)
    dims = [4, 8, 6, 1]
    weights = [rng.normal(0, 0.6, (dims[i + 1], dims[i])) for i in range(3)]
    biases = [rng.normal(0, 0.1, dims[i + 1]) for i in range(3)]
    model = _tiny_model(weights, biases, activation=activation)
    x = rng.normal(0, 1.0, size=(16, 4))
    y = rng.normal(0, 1.0, size=16)

    _, gw, gb = loss_and_grads(model, x, y)
    eps = 1e-5
    worst = 0.0
    for li in range(3):
        w = model.weights[li]
        for idx in [(0, 0), (w.shape[0] - 1, w.shape[1] - 1)]:
            w[idx] += eps
            up, _, _ = loss_and_grads(model, x, y)
            w[idx] -= 2 * eps
            dn, _, _ = loss_and_grads(model, x, y)
            w[idx] += eps
            numeric = (up - dn) / (2 * eps)
            denom = max(abs(numeric), abs(gw[li][idx]), 1e-8)
            worst = max(worst, abs(numeric - gw[li][idx]) / denom)
        b = model.biases[li]
        b[0] += eps
        up, _, _ = loss_and_grads(model, x, y)
        b[0] -= 2 * eps
        dn, _, _ = loss_and_grads(model, x, y)
        b[0] += eps
        numeric = (up - dn) / (2 * eps)
        denom = max(abs(numeric), abs(gb[li][0]), 1e-8)
        worst = max(worst, abs(numeric - gb[li][0]) / denom)
    assert worst < 1e-4


def test_training_learns_linear_function():
    ds = _linear_problem()
    train_set, val_set = ds.slice(0, 3200), ds.slice(3200, 4000)
    config = TrainConfig(hidden_layers=[16], epochs=50, rng_seed=2,
                         learning_rate=3e-2, batch_size=128,
                         early_stop_patience=50)
    model, report = train(train_set, val_set, config, "predictor")
    assert min(r.val_mae for r in report) < 0.01
    assert mae(model, val_set) < 0.01


def test_training_constant_target():
    x = np.random.default_rng(1).uniform(-1, 1, size=(800, 4))
    ds = _dataset(x, np.full(800, 1.234))
    cfg = TrainConfig(hidden_layers=[8], epochs=120, rng_seed=0,
                      learning_rate=2e-2, batch_size=64, early_stop_patience=120)
    model, _ = train(ds.slice(0, 600), ds.slice(600, 800), cfg, "predictor")
    out = model.forward(features_for("predictor", ds.slice(600, 800)))
    assert np.mean(np.abs(out - 1.234)) < 1e-3
    assert np.max(np.abs(out - 1.234)) < 0.05


def test_training_deterministic():
    ds = _linear_problem(n=1200, seed=3)
    cfg = TrainConfig(hidden_layers=[8], epochs=5, rng_seed=11)
    m1, _ = train(ds.slice(0, 1000), ds.slice(1000, 1200), cfg, "predictor")
    m2, _ = train(ds.slice(0, 1000), ds.slice(1000, 1200), cfg, "predictor")
    for w1, w2 in zip(m1.weights, m2.weights):
        assert np.array_equal(w1, w2)
    for b1, b2 in zip(m1.biases, m2.biases):
        assert np.array_equal(b1, b2)


def test_training_divergence_reports_learning_rate():
    ds = _linear_problem(n=600, seed=4)
    cfg = TrainConfig(hidden_layers=[8], epochs=10, rng_seed=0,
                      optimizer="sgd-momentum", learning_rate=1e6)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(TrainingError, match="learning rate"):
            train(ds.slice(0, 500), ds.slice(500, 600), cfg, "predictor")


def test_sgd_momentum_optimizer_trains():
    ds = _linear_problem(n=2000, seed=6)
    cfg = TrainConfig(hidden_layers=[8], epochs=40, rng_seed=1,
                      optimizer="sgd-momentum", learning_rate=2e-3)
    model, report = train(ds.slice(0, 1600), ds.slice(1600, 2000), cfg, "predictor")
    assert min(r.val_mae for r in report) < 0.5


def test_save_load_round_trip_is_exact(tmp_path):
    ds = _linear_problem(n=1000, seed=8)
    model, _ = train(ds.slice(0, 800), ds.slice(800, 1000),
                     TrainConfig(hidden_layers=[8, 4], epochs=3, rng_seed=5), "predictor")
    path = tmp_path / "model.json"
    save_model(model, path)
    again = load_model(path)
    rng = np.random.default_rng(0)
    x = rng.uniform(-3, 45, size=(1000, 4))
    assert np.array_equal(model.forward(x), again.forward(x))


def test_load_rejects_truncated_file(tmp_path):
    path = tmp_path / "model.json"
    model = _tiny_model([np.zeros((1, 4))], [np.zeros(1)])
    save_model(model, path)
    path.write_text(path.read_text()[:100])
    with pytest.raises(ModelError, match="corrupt"):
        load_model(path)


def test_load_rejects_unknown_activation(tmp_path):
    path = tmp_path / "model.json"
    model = _tiny_model([np.zeros((2, 4)), np.zeros((1, 2))],
                        [np.zeros(2), np.zeros(1)])
    save_model(model, path)
    doc = json.loads(path.read_text())
    doc["activations"] = ["swish", "identity"]
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelError):
        load_model(path)


def test_load_rejects_version_and_shape_mismatch(tmp_path):
    path = tmp_path / "model.json"
    model = _tiny_model([np.zeros((1, 4))], [np.zeros(1)])
    save_model(model, path)
    doc = json.loads(path.read_text())
    doc["format_version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelError, match="version"):
        load_model(path)

    save_model(model, path)
    doc = json.loads(path.read_text())
    doc["layers"][0]["weights"] = doc["layers"][0]["weights"][:-1]
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelError):
        load_model(path)


def test_response_estimator_cannot_see_v2v_field():
    assert "a_p" not in neural.RESPONSE_ESTIMATOR_FEATURES
    x = np.random.default_rng(2).uniform(0, 1, size=(50, 4))
    ds = _dataset(x, np.zeros(50))
    clean = features_for("response_estimator", ds)
    ds.a_p[:] = 1e9  # poison the V2V column
    poisoned = features_for("response_estimator", ds)
    assert np.array_equal(clean, poisoned)


def test_mae_contracts():
    x = np.random.default_rng(0).uniform(0, 1, size=(100, 4))
    y = np.arange(100) * 0.01
    ds = _dataset(x, y)

    class Exact:
        model_kind = "predictor"
        def forward(self, features):
            return y.copy()

    assert float(np.mean(np.abs(Exact().forward(None) - y))) == 0.0

    model = _tiny_model([np.zeros((1, 4))], [np.array([0.5])])
    ds_const = _dataset(x, np.zeros(100))
    assert mae(model, ds_const) == pytest.approx(0.5, abs=1e-12)

    with pytest.raises(ValueError):
        mae(model, ds_const.slice(0, 0))


def test_validation_mae_on_benchmark_models(trained_models, benchmark_collection):
    val = neural.mae(trained_models["predictor"], benchmark_collection.global_test)
    assert val <= 0.05
