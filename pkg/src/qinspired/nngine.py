"""Small deterministic CNN with quantum-filter convolution.

Architecture: one k x k convolution (stride 1, no padding) whose per-patch
nonlinearity is an :mod:`~qinspired.activations` kernel, 2x2 average
pooling, flatten (row-major over height, width, channel), a tanh dense
layer, a linear dense layer and softmax cross-entropy. Parameters are
trained with Adam. Everything is float64.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import kernels
from .activations import ActivationKernel, Kind, init_params, odd_sites, product_terms
from .errors import NumericalError, ShapeError

BETA1, BETA2, EPS = 0.9, 0.999, 1e-8
PARAM_NAMES = ("conv", "dense1.W", "dense1.b", "dense2.W", "dense2.b")
METRICS_HEADER = ("epoch", "train_loss", "train_acc", "test_loss", "test_acc")


@dataclass(frozen=True)
class CnnConfig:
    image_size: int = 28
    kernel_size: int = 3
    channels: int = 16
    hidden: int = 64
    classes: int = 10
    activation: str = "af3"

    @property
    def conv_size(self) -> int:
        return self.image_size - self.kernel_size + 1

    @property
    def pooled_size(self) -> int:
        return self.conv_size // 2

    @property
    def flat_size(self) -> int:
        return self.pooled_size**2 * self.channels

    @property
    def patch_len(self) -> int:
        return self.kernel_size**2

    @property
    def kind(self) -> Kind:
        return Kind.parse(self.activation)


@dataclass
class CnnModel:
    config: CnnConfig
    params: Dict[str, np.ndarray]
    adam_m: Dict[str, np.ndarray] = field(default_factory=dict)
    adam_v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def create(cls, config: CnnConfig, seed: int = 0) -> "CnnModel":
        if config.conv_size % 2:
            raise ShapeError(f"conv output {config.conv_size} is odd; 2x2 pooling needs even size")
        rng = np.random.default_rng(seed)
        kind = config.kind
        conv = np.stack(
            [init_params(kind, config.patch_len, rng, fan_out=config.channels) for _ in range(config.channels)]
        )

        def glorot(fan_in, fan_out):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-limit, limit, (fan_in, fan_out))

        params = {
            "conv": conv,
            "dense1.W": glorot(config.flat_size, config.hidden),
            "dense1.b": np.zeros(config.hidden),
            "dense2.W": glorot(config.hidden, config.classes),
            "dense2.b": np.zeros(config.classes),
        }
        return cls(config, params)

    def __post_init__(self):
        for name in PARAM_NAMES:
            self.adam_m.setdefault(name, np.zeros_like(self.params[name]))
            self.adam_v.setdefault(name, np.zeros_like(self.params[name]))

    @property
    def conv_kernels(self) -> List[ActivationKernel]:
        return [ActivationKernel(self.config.kind, self.config.patch_len, row) for row in self.params["conv"]]

    def copy(self) -> "CnnModel":
        return CnnModel(
            self.config,
            {k: v.copy() for k, v in self.params.items()},
            {k: v.copy() for k, v in self.adam_m.items()},
            {k: v.copy() for k, v in self.adam_v.items()},
            self.step,
        )


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    test_loss: float
    test_acc: float


@dataclass
class TrainReport:
    records: List[EpochRecord] = field(default_factory=list)

    @property
    def optimal_epoch(self) -> int:
        """Epoch with the lowest test loss (first one on ties)."""
        if not self.records:
            raise ValueError("no epochs recorded")
        best = min(self.records, key=lambda r: (r.test_loss, r.epoch))
        return best.epoch

    @property
    def optimal(self) -> EpochRecord:
        epoch = self.optimal_epoch
        return next(r for r in self.records if r.epoch == epoch)


def write_metrics_csv(path, records: List[EpochRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for r in records:
            writer.writerow([r.epoch] + ["%.17g" % getattr(r, k) for k in METRICS_HEADER[1:]])


def read_metrics_csv(path) -> List[EpochRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        EpochRecord(int(r["epoch"]), *(float(r[k]) for k in METRICS_HEADER[1:]))
        for r in rows
    ]


def _check_images(config: CnnConfig, images: np.ndarray) -> np.ndarray:
    images = np.asarray(images, dtype=float)
    size = config.image_size
    if images.ndim != 3 or images.shape[1:] != (size, size):
        raise ShapeError(f"expected images of shape (B, {size}, {size}), got {images.shape}")
    return images


def extract_patches(images: np.ndarray, kernel_size: int) -> np.ndarray:
    """(B, H, W) -> (B * Ho * Wo, k * k), windows flattened row-major."""
    win = sliding_window_view(images, (kernel_size, kernel_size), axis=(1, 2))
    return np.ascontiguousarray(win.reshape(-1, kernel_size * kernel_size))


def conv_forward(model: CnnModel, images, cache: Optional[dict] = None) -> np.ndarray:
    """Activation-kernel convolution: (B, H, W) -> (B, Ho, Wo, C)."""
    cfg = model.config
    images = _check_images(cfg, images)
    batch, size = images.shape[0], cfg.conv_size
    kind = cfg.kind
    params = model.params["conv"]
    if kind.is_quantum:
        theta = np.pi * images
        cos_t = extract_patches(np.cos(theta), cfg.kernel_size)
        sin_t = extract_patches(np.sin(theta), cfg.kernel_size)
        out = None
        for term in product_terms(kind, cfg.patch_len):
            part = kernels.product_forward(term.mode, term.sites, cos_t, sin_t, params, term.sign)
            out = part if out is None else out + part
        if cache is not None:
            cache.update(cos_t=cos_t, sin_t=sin_t)
    else:
        x = extract_patches(images, cfg.kernel_size)
        if kind is Kind.AF2:
            x = x[:, odd_sites(cfg.patch_len)]
        out = np.tanh(x @ params[:, :-1].T + params[:, -1])
        if cache is not None:
            cache.update(x=x, conv_out=out)
    return out.reshape(batch, size, size, cfg.channels)


def avg_pool(x: np.ndarray) -> np.ndarray:
    """2x2 non-overlapping mean over axes 1 and 2."""
    b, h, w, c = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"average pooling needs even spatial dims, got {h}x{w}")
    return x.reshape(b, h // 2, 2, w // 2, 2, c).mean(axis=(2, 4))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_ce(logits, labels) -> float:
    """Mean of -log softmax(logits)[label], max-shifted for stability."""
    logits = np.asarray(logits, dtype=float)
    labels = np.asarray(labels)
    if labels.shape != (logits.shape[0],):
        raise ShapeError("one label per row of logits required")
    if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[1]):
        raise ValueError(f"labels must lie in 0..{logits.shape[1] - 1}")
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    return float(np.mean(logsum - z[np.arange(labels.size), labels]))


def forward(model: CnnModel, images, cache: Optional[dict] = None) -> np.ndarray:
    """Logits of shape (B, classes). Intermediates go into ``cache`` if given."""
    p = model.params
    conv = conv_forward(model, images, cache)
    flat = avg_pool(conv).reshape(conv.shape[0], -1)
    h1 = np.tanh(flat @ p["dense1.W"] + p["dense1.b"])
    logits = h1 @ p["dense2.W"] + p["dense2.b"]
    if cache is not None:
        cache.update(flat=flat, h1=h1, logits=logits, batch=conv.shape[0])
    return logits


def gradients(model: CnnModel, images, labels):
    """Loss and exact parameter gradients for one batch."""
    cfg = model.config
    p = model.params
    cache: dict = {}
    logits = forward(model, images, cache)
    labels = np.asarray(labels)
    loss = loss_ce(logits, labels)
    if not math.isfinite(loss):
        raise NumericalError(f"non-finite loss {loss}")
    batch = cache["batch"]
    dlogits = softmax(logits)
    dlogits[np.arange(batch), labels] -= 1.0
    dlogits /= batch
    h1, flat = cache["h1"], cache["flat"]
    grads = {
        "dense2.W": h1.T @ dlogits,
        "dense2.b": dlogits.sum(axis=0),
    }
    dz1 = (dlogits @ p["dense2.W"].T) * (1.0 - h1 * h1)
    grads["dense1.W"] = flat.T @ dz1
    grads["dense1.b"] = dz1.sum(axis=0)
    dpool = (dz1 @ p["dense1.W"].T).reshape(batch, cfg.pooled_size, cfg.pooled_size, cfg.channels)
    dconv = np.repeat(np.repeat(dpool, 2, axis=1), 2, axis=2) * 0.25
    dconv = np.ascontiguousarray(dconv.reshape(-1, cfg.channels))
    kind = cfg.kind
    if kind.is_quantum:
        g = np.zeros_like(p["conv"])
        for term in product_terms(kind, cfg.patch_len):
            g += kernels.product_grad(
                term.mode, term.sites, cache["cos_t"], cache["sin_t"], p["conv"], term.sign, dconv
            )
    else:
        dpre = dconv * (1.0 - cache["conv_out"] ** 2)
        g = np.empty_like(p["conv"])
        g[:, :-1] = dpre.T @ cache["x"]
        g[:, -1] = dpre.sum(axis=0)
    grads["conv"] = g
    return loss, grads


def adam_update(params, grads, m, v, step: int, lr: float) -> None:
    """In-place Adam update of every array in ``params``; ``step`` is 1-based."""
    c1 = 1.0 - BETA1**step
    c2 = 1.0 - BETA2**step
    for name, g in grads.items():
        m[name] *= BETA1
        m[name] += (1.0 - BETA1) * g
        v[name] *= BETA2
        v[name] += (1.0 - BETA2) * g * g
        params[name] -= lr * (m[name] / c1) / (np.sqrt(v[name] / c2) + EPS)


def backward_and_step(model: CnnModel, images, labels, lr: float) -> float:
    """One Adam step on a batch; returns the batch loss before the update."""
    loss, grads = gradients(model, images, labels)
    model.step += 1
    adam_update(model.params, grads, model.adam_m, model.adam_v, model.step, lr)
    return loss


def evaluate(model: CnnModel, images, labels, batch_size: int = 500):
    """Mean cross-entropy and accuracy over a full split."""
    labels = np.asarray(labels)
    total_loss, correct = 0.0, 0
    for start in range(0, labels.size, batch_size):
        logits = forward(model, images[start : start + batch_size])
        lab = labels[start : start + batch_size]
        total_loss += loss_ce(logits, lab) * lab.size
        correct += int(np.sum(np.argmax(logits, axis=1) == lab))
    return total_loss / labels.size, correct / labels.size


def epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    """Sample order for one epoch; depends only on (seed, epoch) so resumes match."""
    return np.random.default_rng([seed, epoch]).permutation(n)


def train(
    model: CnnModel,
    train_set,
    test_set,
    epochs: int,
    batch_size: int = 64,
    lr: float = 1e-3,
    seed: int = 0,
    start_epoch: int = 0,
    on_epoch: Optional[Callable[[EpochRecord, CnnModel], None]] = None,
    log: Optional[Callable[[str], None]] = None,
) -> TrainReport:
    """Train for ``epochs`` epochs starting after ``start_epoch``.

    ``train_set`` and ``test_set`` need ``images`` and ``labels`` attributes.
    Metrics are computed over the full splits after every epoch.
    """
    n = len(train_set.labels)
    if n == 0 or len(test_set.labels) == 0:
        raise ValueError("train and test sets must be non-empty")
    report = TrainReport()
    for epoch in range(start_epoch + 1, start_epoch + epochs + 1):
        order = epoch_order(seed, epoch, n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            backward_and_step(model, train_set.images[idx], train_set.labels[idx], lr)
        train_loss, train_acc = evaluate(model, train_set.images, train_set.labels)
        test_loss, test_acc = evaluate(model, test_set.images, test_set.labels)
        if not all(math.isfinite(v) for v in (train_loss, test_loss)):
            raise NumericalError(f"non-finite loss at epoch {epoch}")
        record = EpochRecord(epoch, train_loss, train_acc, test_loss, test_acc)
        report.records.append(record)
        if log:
            log(
                f"epoch {epoch}: train_loss={train_loss:.4f} train_acc={train_acc:.4f} "
                f"test_loss={test_loss:.4f} test_acc={test_acc:.4f}"
            )
        if on_epoch:
            on_epoch(record, model)
    return report


def config_dict(config: CnnConfig) -> dict:
    return asdict(config)


def to_checkpoint(model: CnnModel, epoch: int, record: Optional[EpochRecord] = None, run: Optional[dict] = None):
    """Snapshot of parameters, Adam state and metrics. ``run`` holds training settings."""
    from .checkpoint import Checkpoint

    arrays = {}
    for name in PARAM_NAMES:
        arrays[name] = model.params[name]
        arrays[f"adam.m.{name}"] = model.adam_m[name]
        arrays[f"adam.v.{name}"] = model.adam_v[name]
    metrics = asdict(record) if record is not None else {}
    config = dict(config_dict(model.config), **(run or {}))
    return Checkpoint("cnn", epoch, config, arrays, metrics, {"adam_step": model.step})


def from_checkpoint(ckpt) -> CnnModel:
    if ckpt.model_type != "cnn":
        raise ValueError(f"checkpoint holds a {ckpt.model_type!r} model, not 'cnn'")
    fields = CnnConfig.__dataclass_fields__
    config = CnnConfig(**{k: v for k, v in ckpt.config.items() if k in fields})
    arrays = ckpt.arrays
    return CnnModel(
        config,
        {n: arrays[n].copy() for n in PARAM_NAMES},
        {n: arrays[f"adam.m.{n}"].copy() for n in PARAM_NAMES},
        {n: arrays[f"adam.v.{n}"].copy() for n in PARAM_NAMES},
        int(ckpt.meta.get("adam_step", 0)),
    )
