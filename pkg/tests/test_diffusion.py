import numpy as np
import pandas as pd
import pytest

from diffusion.optimizer import Adam
from diffusion.schedule import NoiseSchedule
from datagen.schema import Dataset
from diffusion.trainer import TrainConfig, TrainedScoreModel, load_model, save_model, train, write_training_log
from diffcore.tape import GradientRecord
from errors import ConfigError, DataError
from scino.checkpoint import save_checkpoint
from scino.hyperparams import HyperParams

FAST = TrainConfig(epochs=2, batch_size=32, diffusion_steps=20, seed=7)


@pytest.fixture
def tiny_model(linear_data):
    _, dataset = linear_data
    hp = HyperParams.desk(dataset.n_vars, hidden=8, n_layers=1, fourier_features=4)
    return train(dataset, hp, FAST), dataset, hp


def test_schedule_is_decreasing_and_time_input_in_unit_interval():
    schedule = NoiseSchedule.linear(10)
    assert np.all(np.diff(schedule.alpha_bars) < 0)
    assert schedule.time_input(10) == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        schedule.alpha_bar(0)
    with pytest.raises(ConfigError):
        NoiseSchedule.linear(0)


def test_perturb_per_row_steps():
    schedule = NoiseSchedule.linear(10)
    x0 = np.ones((2, 3))
    eps = np.zeros((2, 3))
    out = schedule.perturb(x0, np.array([1, 10]), eps)
    np.testing.assert_allclose(out[0], np.sqrt(schedule.alpha_bar(1)))
    np.testing.assert_allclose(out[1], np.sqrt(schedule.alpha_bar(10)))


def test_adam_moves_against_gradient():
    params = {"w": np.array([1.0, -1.0])}
    opt = Adam(params, lr=0.1)
    opt.step(GradientRecord({"w": np.array([2.0, -3.0])}))
    np.testing.assert_allclose(params["w"], [0.9, -0.9])


def test_training_is_deterministic(tiny_model):
    model, dataset, hp = tiny_model
    again = train(dataset, hp, FAST)
    assert model.loss_history == again.loss_history
    assert len(model.loss_history) == FAST.epochs
    assert not model.network.training


def test_members_differ(tiny_model):
    model, dataset, hp = tiny_model
    other = train(dataset, hp, FAST, member=1)
    assert other.loss_history != model.loss_history


def test_training_rejects_bad_shapes(linear_data):
    _, dataset = linear_data
    with pytest.raises(ConfigError):
        train(dataset, HyperParams.desk(dataset.n_vars + 1, hidden=8, n_layers=1), FAST)
    with pytest.raises(DataError):
        train(dataset.head(10), HyperParams.desk(dataset.n_vars, hidden=8, n_layers=1), FAST)


def test_hessian_diag_matches_derivative_slot(tiny_model):
    model, dataset, _ = tiny_model
    x = dataset.values[:5]
    diag = model.hessian_diag(x, [0, 2])
    np.testing.assert_allclose(diag[:, 1], model.derivatives(x, 2, 2).d_a[:, 2])
    np.testing.assert_allclose(model.derivatives(x, 0, 0).value, model.score_at(x), atol=1e-12)


def test_model_file_roundtrip(tiny_model, tmp_path):
    model, dataset, _ = tiny_model
    path = str(tmp_path / "model.json")
    save_model(path, model, dataset.names)
    restored, names = load_model(path)
    assert names == tuple(dataset.names)
    assert restored.loss_history == model.loss_history
    assert restored.score_output
    np.testing.assert_array_equal(restored.score_at(dataset.values[:4]), model.score_at(dataset.values[:4]))


def test_model_file_missing_fields(tiny_model, tmp_path):
    model, _, _ = tiny_model
    path = str(tmp_path / "bare.json")
    save_checkpoint(path, model.network)
    with pytest.raises(DataError):
        load_model(path)


def test_training_log(tmp_path):
    path = tmp_path / "log.csv"
    write_training_log(str(path), [1.5, 0.75])
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["epoch", "loss"]
    assert frame["epoch"].tolist() == [1, 2]


def _gaussian(n, mean, std, seed=0):
    rng = np.random.default_rng(seed)
    mean, std = np.atleast_1d(mean), np.atleast_1d(std)
    return Dataset(mean + std * rng.standard_normal((n, mean.size)))


def test_score_scale_by_parameterization(tiny_model):
    model, _, _ = tiny_model
    assert model.score_output
    assert model.score_scale == 1.0
    legacy = TrainedScoreModel(model.network, model.schedule, model.data_mean, model.data_std)
    assert legacy.score_scale == pytest.approx(-1.0 / np.sqrt(1.0 - model.schedule.alpha_bar(1)))


def test_epsilon_parameterization_still_trains(linear_data):
    _, dataset = linear_data
    hp = HyperParams.desk(dataset.n_vars, hidden=8, n_layers=1, fourier_features=4)
    cfg = TrainConfig(epochs=2, batch_size=32, diffusion_steps=20, seed=7, score_output=False)
    model = train(dataset, hp, cfg)
    assert not model.score_output
    assert np.all(np.isfinite(model.loss_history))


def test_first_epoch_loss_below_dimension():
    dataset = _gaussian(3000, [0.0, 0.0], [1.0, 1.0])
    model = train(dataset, HyperParams.desk(2), TrainConfig(epochs=1))
    assert model.loss_history[0] < dataset.n_vars


# === GAUSSIAN ORACLES ===

ORACLE = TrainConfig(epochs=60, seed=0)


@pytest.mark.slow
def test_standard_gaussian_score():
    dataset = _gaussian(5000, [0.0, 0.0], [1.0, 1.0])
    model = train(dataset, HyperParams.desk(2), ORACLE)

    at_point = model.score_at(np.array([[1.0, -1.0]]))[0]
    assert np.linalg.norm(at_point - [-1.0, 1.0]) < 0.15 * np.sqrt(2.0)

    points = np.random.default_rng(11).standard_normal((400, 2))
    radius = np.linalg.norm(points, axis=1)
    points = points[(radius > 0.75) & (radius < 2.5)][:100]
    err = np.linalg.norm(model.score_at(points) + points, axis=1) / np.linalg.norm(points, axis=1)
    assert err.mean() < 0.15


@pytest.mark.slow
def test_shifted_scaled_gaussian_score():
    mean, std = np.array([3.0, -2.0]), np.array([2.0, 0.5])
    dataset = _gaussian(5000, mean, std, seed=1)
    model = train(dataset, HyperParams.desk(2), ORACLE)
    x = mean + std * np.array([1.0, -1.0])
    expected = -(x - mean) / std**2
    score = model.score_at(x[None, :])[0]
    assert np.linalg.norm(score - expected) < 0.15 * np.linalg.norm(expected)


@pytest.mark.slow
def test_one_dimensional_score_derivative():
    dataset = _gaussian(5000, 1.0, 2.0, seed=2)
    model = train(dataset, HyperParams.desk(1), ORACLE)
    x = 1.0 + 2.0 * np.linspace(-1.0, 1.0, 21)[:, None]
    slope = model.hessian_diag(x, [0])[:, 0]
    assert slope.mean() == pytest.approx(-0.25, rel=0.2)
