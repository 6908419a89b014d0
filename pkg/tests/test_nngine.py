import math
from types import SimpleNamespace

import numpy as np
import pytest

from qinspired import activations as act
from qinspired import nngine as nn
from qinspired.activations import Kind
from qinspired.errors import ShapeError

from conftest import central_diff, rel_error


def tiny(kind="af3", seed=0):
    cfg = nn.CnnConfig(image_size=4, kernel_size=3, channels=2, hidden=8, classes=10, activation=kind)
    return nn.CnnModel.create(cfg, seed)


def tiny_data(rng, n=6):
    return rng.uniform(0, 1, (n, 4, 4)), rng.integers(0, 10, n)


def test_default_shapes():
    cfg = nn.CnnConfig()
    assert (cfg.conv_size, cfg.pooled_size, cfg.flat_size) == (26, 13, 2704)
    model = nn.CnnModel.create(cfg, 0)
    assert model.params["conv"].shape == (16, 9)
    assert model.params["dense1.W"].shape == (2704, 64)
    assert model.params["dense2.W"].shape == (64, 10)
    logits = nn.forward(model, np.zeros((2, 28, 28)))
    assert logits.shape == (2, 10)


def test_odd_conv_size_rejected():
    with pytest.raises(ShapeError):
        nn.CnnModel.create(nn.CnnConfig(image_size=5, kernel_size=3), 0)


def test_conv_zero_background():
    model = nn.CnnModel.create(nn.CnnConfig(activation="af3"), 0)
    model.params["conv"][:] = math.pi / 2
    maps = nn.conv_forward(model, np.zeros((1, 28, 28)))
    assert maps.shape == (1, 26, 26, 16)
    assert np.max(np.abs(maps)) < 1e-15


def test_conv_af1_zero_params(rng):
    model = nn.CnnModel.create(nn.CnnConfig(activation="af1"), 0)
    model.params["conv"][:] = 0.0
    assert np.array_equal(nn.conv_forward(model, rng.uniform(0, 1, (2, 28, 28))), np.zeros((2, 26, 26, 16)))


@pytest.mark.parametrize("kind", list(Kind), ids=lambda k: k.name)
def test_conv_single_patch_equals_kernel(kind, rng):
    cfg = nn.CnnConfig(image_size=3, kernel_size=3, channels=3, hidden=4, activation=kind.value)
    conv = np.stack([act.init_params(kind, 9, rng) for _ in range(3)])
    model = nn.CnnModel(cfg, {"conv": conv, "dense1.W": np.zeros((3, 4)), "dense1.b": np.zeros(4),
                              "dense2.W": np.zeros((4, 10)), "dense2.b": np.zeros(10)})
    image = rng.uniform(0, 1, (1, 3, 3))
    out = nn.conv_forward(model, image)
    for c, k in enumerate(model.conv_kernels):
        assert out[0, 0, 0, c] == pytest.approx(act.eval(k, image[0].reshape(-1)), abs=1e-14)


def test_avg_pool(rng):
    assert np.allclose(nn.avg_pool(np.full((1, 4, 4, 2), 3.5)), 3.5)
    x = np.zeros((1, 2, 2, 1))
    x[0, 1, 1, 0] = 4
    assert nn.avg_pool(x)[0, 0, 0, 0] == 1.0
    a, b = rng.normal(size=(2, 6, 6, 3)), rng.normal(size=(2, 6, 6, 3))
    assert np.allclose(nn.avg_pool(a + b), nn.avg_pool(a) + nn.avg_pool(b))
    with pytest.raises(ShapeError):
        nn.avg_pool(np.zeros((1, 3, 3, 1)))


def test_forward_properties(rng):
    model = nn.CnnModel.create(nn.CnnConfig(), 0)
    for name in model.params:
        model.params[name][:] = 0.0
    probs = nn.softmax(nn.forward(model, rng.uniform(0, 1, (3, 28, 28))))
    assert np.allclose(probs, 0.1)
    model = nn.CnnModel.create(nn.CnnConfig(), 1)
    img = rng.uniform(0, 1, (28, 28))
    out = nn.forward(model, np.stack([img, img]))
    assert np.array_equal(out[0], out[1])
    batch = rng.uniform(0, 1, (4, 28, 28))
    perm = np.array([2, 0, 3, 1])
    assert np.allclose(nn.forward(model, batch)[perm], nn.forward(model, batch[perm]), atol=1e-14)


def test_loss_examples():
    assert nn.loss_ce(np.zeros((1, 10)), [3]) == pytest.approx(math.log(10))
    logits = np.zeros((1, 10))
    logits[0, 4] = 1000
    assert nn.loss_ce(logits, [4]) == pytest.approx(0.0, abs=1e-12)
    z = np.random.default_rng(0).normal(size=(2, 10))
    pair = nn.loss_ce(z, [1, 7])
    assert pair == pytest.approx((nn.loss_ce(z[:1], [1]) + nn.loss_ce(z[1:], [7])) / 2)
    assert math.isfinite(nn.loss_ce(np.full((1, 10), 1e4) * np.arange(10), [0]))
    with pytest.raises(ValueError):
        nn.loss_ce(np.zeros((1, 10)), [10])


def test_softmax_rows(rng):
    p = nn.softmax(rng.normal(scale=50, size=(20, 10)))
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("kind", list(Kind), ids=lambda k: k.name)
def test_full_model_gradient(kind, rng):
    model = tiny(kind.value, seed=3)
    images, labels = tiny_data(rng)
    _, grads = nn.gradients(model, images, labels)
    for name, param in model.params.items():
        numeric = central_diff(lambda: nn.loss_ce(nn.forward(model, images), labels), param)
        assert rel_error(grads[name], numeric) <= 1e-4, name


def test_zero_lr_leaves_params(rng):
    model = tiny()
    before = model.copy()
    images, labels = tiny_data(rng)
    nn.backward_and_step(model, images, labels, lr=0.0)
    for name in model.params:
        assert np.array_equal(model.params[name], before.params[name])


def test_small_step_descends(rng):
    model = tiny("af3", 5)
    images, labels = tiny_data(rng, 1)
    before = nn.loss_ce(nn.forward(model, images), labels)
    nn.backward_and_step(model, images, labels, lr=1e-4)
    assert nn.loss_ce(nn.forward(model, images), labels) < before


def _sets(rng, n_train=24, n_test=8):
    tr = SimpleNamespace(images=rng.uniform(0, 1, (n_train, 4, 4)), labels=rng.integers(0, 10, n_train))
    te = SimpleNamespace(images=rng.uniform(0, 1, (n_test, 4, 4)), labels=rng.integers(0, 10, n_test))
    return tr, te


def test_train_deterministic(rng):
    tr, te = _sets(rng)
    a = nn.train(tiny(), tr, te, 3, batch_size=5, seed=9)
    b = nn.train(tiny(), tr, te, 3, batch_size=5, seed=9)
    assert a.records == b.records and len(a.records) == 3


def test_zero_epochs(rng):
    tr, te = _sets(rng)
    report = nn.train(tiny(), tr, te, 0)
    assert report.records == []
    with pytest.raises(ValueError):
        report.optimal_epoch


def test_optimal_epoch_is_argmin_test_loss():
    recs = [nn.EpochRecord(e, 1.0, 0.5, loss, 0.5) for e, loss in ((1, 0.9), (2, 0.4), (3, 0.6), (4, 0.4))]
    report = nn.TrainReport(recs)
    assert report.optimal_epoch == 2
    assert report.optimal.test_loss == 0.4


def test_metrics_csv_round_trip(tmp_path, rng):
    tr, te = _sets(rng)
    report = nn.train(tiny(), tr, te, 2, batch_size=6)
    path = tmp_path / "m.csv"
    nn.write_metrics_csv(path, report.records)
    assert nn.read_metrics_csv(path) == report.records
    assert path.read_text().splitlines()[0] == "epoch,train_loss,train_acc,test_loss,test_acc"
