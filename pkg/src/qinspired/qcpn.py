"""Chebyshev-polynomial networks, the tanh baseline, and special-function targets.

A unit with coefficients ``a`` maps a rescaled input x in [-1, 1] to
``sum_i (-1)^i a_i^2 T_i(x)``. A :class:`HybridQcpn` combines units as

    y(x_1..x_m) = sum_t w_t prod_j O_{t,j}(x_j) + b

and a :class:`ChebyshevBank` is the single-input case ``sum_i w_i O_i(x) + b``.
Inputs are mapped into [-1, 1] by the affine map of each model's ``domain``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .closedform import _signs, chebyshev_basis, qcpn_unit_eval
from .errors import DomainError, NumericalError, ShapeError, SizeError
from .nngine import EpochRecord, TrainReport, adam_update, epoch_order

Domain = Tuple[float, float]

QCPN_NAMES = ("units", "w", "b")
BASELINE_NAMES = ("dense1.W", "dense1.b", "dense2.W", "dense2.b")
J_LIMIT = 12.0
SERIES_TERMS = 40


# --- input rescaling -------------------------------------------------------

def rescale(x, domain: Domain):
    """Affine map of ``domain`` onto [-1, 1]; endpoints land exactly on -1 and 1."""
    lo, hi = float(domain[0]), float(domain[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise ValueError(f"bad domain {domain!r}")
    x = np.asarray(x, dtype=float)
    if lo == -1.0 and hi == 1.0:
        return x
    return 2.0 * (x - lo) / (hi - lo) - 1.0


def _rescale_inputs(x: np.ndarray, domains: Sequence[Domain]) -> np.ndarray:
    """Rescale an (N, m) input matrix column by column and check the range."""
    out = np.empty_like(x)
    for j, dom in enumerate(domains):
        out[:, j] = rescale(x[:, j], dom)
    if np.any(np.abs(out) > 1.0 + 1e-12):
        raise DomainError("input outside the model domain")
    return np.clip(out, -1.0, 1.0)


def _as_matrix(x, m: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if m == 1 else x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != m:
        raise ShapeError(f"expected inputs with {m} column(s), got shape {np.shape(x)}")
    return x


# --- models ----------------------------------------------------------------

@dataclass
class HybridQcpn:
    """Product-form model; ``params['units']`` has shape (terms, input_dim, K + 1)."""

    params: Dict[str, np.ndarray]
    domains: List[Domain]
    adam_m: Dict[str, np.ndarray] = field(default_factory=dict)
    adam_v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    def __post_init__(self):
        units = self.params["units"]
        if units.ndim != 3:
            raise ShapeError("units must have shape (terms, input_dim, K + 1)")
        if self.params["w"].shape != (units.shape[0],):
            raise ShapeError("one weight per product term is required")
        if len(self.domains) != units.shape[1]:
            raise ShapeError("one domain per input dimension is required")
        self.domains = [(float(lo), float(hi)) for lo, hi in self.domains]
        for name, arr in self.params.items():
            self.adam_m.setdefault(name, np.zeros_like(arr))
            self.adam_v.setdefault(name, np.zeros_like(arr))

    @classmethod
    def create(cls, terms: int, input_dim: int, order: int, domains=None, seed: int = 0) -> "HybridQcpn":
        if terms < 1 or input_dim < 1 or order < 0:
            raise SizeError("terms and input_dim must be positive and order non-negative")
        rng = np.random.default_rng(seed)
        units = rng.uniform(-0.5, 0.5, size=(terms, input_dim, order + 1))
        # Every unit's coefficient signs are pinned to (-1)^i, so a weight
        # stuck on the wrong side of zero freezes the achievable sign pattern.
        # Alternate the weight signs so both patterns are present from the start.
        w = np.abs(rng.uniform(-1.0, 1.0, size=terms)) * _signs(terms)
        params = {
            "units": units,
            "w": w,
            "b": np.zeros(()),
        }
        return cls(params, list(domains or [(-1.0, 1.0)] * input_dim))

    @property
    def terms(self) -> int:
        return self.params["units"].shape[0]

    @property
    def input_dim(self) -> int:
        return self.params["units"].shape[1]

    @property
    def order(self) -> int:
        return self.params["units"].shape[2] - 1

    def copy(self) -> "HybridQcpn":
        dup = lambda d: {k: v.copy() for k, v in d.items()}  # noqa: E731
        return HybridQcpn(dup(self.params), list(self.domains), dup(self.adam_m), dup(self.adam_v), self.step)


@dataclass
class ChebyshevBank:
    """Single-input sum of units; ``units`` is (U, K + 1), ``w`` is (U,)."""

    units: np.ndarray
    w: np.ndarray
    b: float = 0.0
    domain: Domain = (-1.0, 1.0)

    def __post_init__(self):
        self.units = np.atleast_2d(np.asarray(self.units, dtype=float))
        self.w = np.atleast_1d(np.asarray(self.w, dtype=float))
        if self.w.shape != (self.units.shape[0],):
            raise ShapeError("one weight per unit is required")

    def as_hybrid(self) -> HybridQcpn:
        params = {"units": self.units[:, None, :].copy(), "w": self.w.copy(), "b": np.array(float(self.b))}
        return HybridQcpn(params, [self.domain])

    @classmethod
    def from_hybrid(cls, model: HybridQcpn) -> "ChebyshevBank":
        if model.input_dim != 1:
            raise ShapeError("only single-input models convert to a bank")
        p = model.params
        return cls(p["units"][:, 0, :].copy(), p["w"].copy(), float(p["b"]), model.domains[0])


def _unit_outputs(units: np.ndarray, bases: List[np.ndarray]) -> np.ndarray:
    """O[n, t, j] for units (T, m, K+1) and per-dimension bases (N, K+1)."""
    coeffs = _signs(units.shape[2]) * units * units
    return np.stack([bases[j] @ coeffs[:, j, :].T for j in range(units.shape[1])], axis=2)


def _bases(model: HybridQcpn, x) -> List[np.ndarray]:
    xs = _rescale_inputs(_as_matrix(x, model.input_dim), model.domains)
    return [chebyshev_basis(model.order, xs[:, j]) for j in range(model.input_dim)]


def hybrid_forward(model: HybridQcpn, x):
    """Model output for one input vector (returns float) or an (N, m) batch."""
    scalar = np.ndim(x) == 0 or (np.ndim(x) == 1 and model.input_dim > 1)
    if np.ndim(x) == 1 and model.input_dim > 1 and np.size(x) != model.input_dim:
        raise ShapeError(f"expected {model.input_dim} inputs, got {np.size(x)}")
    outs = _unit_outputs(model.params["units"], _bases(model, x))
    y = outs.prod(axis=2) @ model.params["w"] + model.params["b"]
    return float(y[0]) if scalar else y


def bank_forward(bank: ChebyshevBank, x):
    """sum_i w_i O_i(L(x)) + b; scalar in, scalar out."""
    xs = rescale(x, bank.domain)
    if np.any(np.abs(xs) > 1.0 + 1e-12):
        raise DomainError("input outside the bank domain")
    xs = np.clip(xs, -1.0, 1.0)
    y = sum(wi * qcpn_unit_eval(a, xs) for a, wi in zip(bank.units, bank.w)) + bank.b
    return float(y) if np.ndim(x) == 0 else y


def qcpn_loss_grads(model: HybridQcpn, x, y) -> Tuple[float, Dict[str, np.ndarray]]:
    """Mean squared error and its gradient with respect to units, w and b."""
    bases = _bases(model, x)
    y = np.asarray(y, dtype=float).reshape(-1)
    units, w = model.params["units"], model.params["w"]
    outs = _unit_outputs(units, bases)  # (N, T, m)
    prods = outs.prod(axis=2)
    pred = prods @ w + model.params["b"]
    resid = pred - y
    loss = float(np.mean(resid**2))
    if not math.isfinite(loss):
        raise NumericalError("non-finite loss")
    g = 2.0 * resid / y.size
    m = model.input_dim
    d_units = np.empty_like(units)
    signs = _signs(units.shape[2])
    for j in range(m):
        others = np.prod(np.delete(outs, j, axis=2), axis=2) if m > 1 else np.ones_like(prods)
        d_out = g[:, None] * w[None, :] * others  # (N, T)
        d_units[:, j, :] = 2.0 * signs * units[:, j, :] * (d_out.T @ bases[j])
    grads = {"units": d_units, "w": prods.T @ g, "b": np.array(g.sum())}
    return loss, grads


# --- baseline --------------------------------------------------------------

@dataclass
class BaselineNn:
    """Input -> tanh(H) -> linear(1)."""

    params: Dict[str, np.ndarray]
    domains: List[Domain]
    adam_m: Dict[str, np.ndarray] = field(default_factory=dict)
    adam_v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    def __post_init__(self):
        W1 = self.params["dense1.W"]
        if W1.ndim != 2 or self.params["dense2.W"].shape != (W1.shape[1],):
            raise ShapeError("dense1.W must be (input_dim, H) and dense2.W (H,)")
        self.domains = [(float(lo), float(hi)) for lo, hi in self.domains]
        for name, arr in self.params.items():
            self.adam_m.setdefault(name, np.zeros_like(arr))
            self.adam_v.setdefault(name, np.zeros_like(arr))

    @classmethod
    def create(cls, input_dim: int = 1, hidden: int = 16, domains=None, seed: int = 0) -> "BaselineNn":
        if input_dim < 1 or hidden < 1:
            raise SizeError("input_dim and hidden must be positive")
        rng = np.random.default_rng(seed)
        lim1 = math.sqrt(6.0 / (input_dim + hidden))
        lim2 = math.sqrt(6.0 / (hidden + 1))
        params = {
            "dense1.W": rng.uniform(-lim1, lim1, size=(input_dim, hidden)),
            "dense1.b": np.zeros(hidden),
            "dense2.W": rng.uniform(-lim2, lim2, size=hidden),
            "dense2.b": np.zeros(()),
        }
        return cls(params, list(domains or [(-1.0, 1.0)] * input_dim))

    @property
    def input_dim(self) -> int:
        return self.params["dense1.W"].shape[0]

    @property
    def hidden(self) -> int:
        return self.params["dense1.W"].shape[1]


def baseline_forward(model: BaselineNn, x):
    scalar = np.ndim(x) == 0 or (np.ndim(x) == 1 and model.input_dim > 1)
    xs = _rescale_inputs(_as_matrix(x, model.input_dim), model.domains)
    p = model.params
    y = np.tanh(xs @ p["dense1.W"] + p["dense1.b"]) @ p["dense2.W"] + p["dense2.b"]
    return float(y[0]) if scalar else y


def baseline_loss_grads(model: BaselineNn, x, y) -> Tuple[float, Dict[str, np.ndarray]]:
    xs = _rescale_inputs(_as_matrix(x, model.input_dim), model.domains)
    y = np.asarray(y, dtype=float).reshape(-1)
    p = model.params
    h = np.tanh(xs @ p["dense1.W"] + p["dense1.b"])
    resid = h @ p["dense2.W"] + p["dense2.b"] - y
    loss = float(np.mean(resid**2))
    if not math.isfinite(loss):
        raise NumericalError("non-finite loss")
    g = 2.0 * resid / y.size
    dh = np.outer(g, p["dense2.W"]) * (1.0 - h * h)
    grads = {
        "dense1.W": xs.T @ dh,
        "dense1.b": dh.sum(axis=0),
        "dense2.W": h.T @ g,
        "dense2.b": np.array(g.sum()),
    }
    return loss, grads


# --- training --------------------------------------------------------------

def _model_api(model):
    if isinstance(model, HybridQcpn):
        return qcpn_loss_grads, lambda xs: hybrid_forward(model, xs)
    if isinstance(model, BaselineNn):
        return baseline_loss_grads, lambda xs: baseline_forward(model, xs)
    raise TypeError(f"cannot train {type(model).__name__}")


def mse(model, x, y) -> float:
    _, predict = _model_api(model)
    resid = predict(_as_matrix(x, model.input_dim)) - np.asarray(y, dtype=float).reshape(-1)
    return float(np.mean(resid**2))


def _fit(
    model,
    dataset,
    epochs: int,
    lr: float,
    seed: int,
    batch_size: int,
    start_epoch: int,
    on_epoch,
    log,
) -> TrainReport:
    loss_grads, _ = _model_api(model)
    x_tr, y_tr = dataset.x_train, dataset.y_train
    n = len(y_tr)
    if n == 0 or len(dataset.y_test) == 0:
        raise ValueError("train and test sets must be non-empty")
    report = TrainReport()
    nan = float("nan")
    for epoch in range(start_epoch + 1, start_epoch + epochs + 1):
        order = epoch_order(seed, epoch, n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            _, grads = loss_grads(model, x_tr[idx], y_tr[idx])
            model.step += 1
            adam_update(model.params, grads, model.adam_m, model.adam_v, model.step, lr)
        train_loss = mse(model, x_tr, y_tr)
        test_loss = mse(model, dataset.x_test, dataset.y_test)
        if not (math.isfinite(train_loss) and math.isfinite(test_loss)):
            raise NumericalError(f"non-finite loss at epoch {epoch}")
        record = EpochRecord(epoch, train_loss, nan, test_loss, nan)
        report.records.append(record)
        if log:
            log(f"epoch {epoch}: train_mse={train_loss:.3e} test_mse={test_loss:.3e}")
        if on_epoch:
            on_epoch(record, model)
    return report


def train_qcpn(
    model,
    dataset,
    epochs: int,
    lr: float = 1e-2,
    seed: int = 0,
    batch_size: int = 100,
    start_epoch: int = 0,
    on_epoch: Optional[Callable] = None,
    log: Optional[Callable[[str], None]] = None,
) -> TrainReport:
    """Adam on MSE over seeded minibatches. A :class:`ChebyshevBank` is updated in place."""
    if isinstance(model, ChebyshevBank):
        hybrid = model.as_hybrid()
        report = _fit(hybrid, dataset, epochs, lr, seed, batch_size, start_epoch, on_epoch, log)
        trained = ChebyshevBank.from_hybrid(hybrid)
        model.units, model.w, model.b = trained.units, trained.w, trained.b
        return report
    return _fit(model, dataset, epochs, lr, seed, batch_size, start_epoch, on_epoch, log)


def train_baseline(
    model: BaselineNn,
    dataset,
    epochs: int,
    lr: float = 1e-2,
    seed: int = 0,
    batch_size: int = 100,
    start_epoch: int = 0,
    on_epoch: Optional[Callable] = None,
    log: Optional[Callable[[str], None]] = None,
) -> TrainReport:
    """Same optimiser, loss and batching as :func:`train_qcpn`."""
    return _fit(model, dataset, epochs, lr, seed, batch_size, start_epoch, on_epoch, log)


# --- special functions and datasets ---------------------------------------

def _bessel_series(order: int, x: np.ndarray) -> np.ndarray:
    # J_n(x) = sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!)
    half = x / 2.0
    term = half**order / math.factorial(order)
    total = term.copy()
    q = -half * half
    for k in range(1, SERIES_TERMS):
        term = term * q / (k * (k + order))
        total = total + term
    return total


def special_fn(name: str, x):
    """J0, J1 (power series, |x| <= 12) or the Legendre polynomials P5, P6."""
    key = name.upper()
    arr = np.asarray(x, dtype=float)
    if key in ("J0", "J1"):
        if np.any(np.abs(arr) > J_LIMIT):
            raise DomainError(f"{key} series is only validated for |x| <= {J_LIMIT:g}")
        out = _bessel_series(int(key[1]), arr)
    elif key == "P5":
        out = (63 * arr**5 - 70 * arr**3 + 15 * arr) / 8
    elif key == "P6":
        out = (231 * arr**6 - 315 * arr**4 + 105 * arr**2 - 5) / 16
    else:
        raise ValueError(f"unknown function {name!r}; choose from J0, J1, P5, P6")
    return float(out) if arr.ndim == 0 else out


# target -> (function, how inputs combine, default per-dimension domain)
TARGETS = {
    "J0": ("J0", None, (0.0, 10.0)),
    "J1": ("J1", None, (0.0, 10.0)),
    "P5": ("P5", None, (-1.0, 1.0)),
    "P6": ("P6", None, (-1.0, 1.0)),
    "J0SUM": ("J0", "sum", (0.0, 5.0)),
    "J1SUM": ("J1", "sum", (0.0, 5.0)),
    "P5PROD": ("P5", "prod", (-1.0, 1.0)),
    "P6PROD": ("P6", "prod", (-1.0, 1.0)),
}


def parse_target(name: str) -> str:
    key = str(name).upper()
    if key not in TARGETS:
        raise ValueError(f"unknown target {name!r}; choose from {', '.join(TARGETS)}")
    return key


def target_dim(target: str) -> int:
    return 1 if TARGETS[parse_target(target)][1] is None else 2


def target_value(target: str, x) -> np.ndarray:
    """Evaluate a target on an (N, m) input matrix."""
    fn, combine, _ = TARGETS[parse_target(target)]
    x = _as_matrix(x, target_dim(target))
    if combine is None:
        arg = x[:, 0]
    elif combine == "sum":
        arg = x[:, 0] + x[:, 1]
    else:
        arg = x[:, 0] * x[:, 1]
    return special_fn(fn, arg)


@dataclass
class RegressionSet:
    target: str
    domains: List[Domain]
    x_train: np.ndarray  # (N, m), raw (unscaled) inputs
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray


def gen_dataset(target: str, n_train: int, n_test: int, domain: Optional[Domain] = None, seed: int = 0) -> RegressionSet:
    """Uniform inputs over ``domain`` (per dimension) with exact target values."""
    key = parse_target(target)
    if n_train <= 0 or n_test <= 0:
        raise SizeError("n_train and n_test must be positive")
    lo, hi = domain if domain is not None else TARGETS[key][2]
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise ValueError(f"bad domain {(lo, hi)!r}")
    m = target_dim(key)
    rng = np.random.default_rng(seed)
    x = rng.uniform(lo, hi, size=(n_train + n_test, m))
    y = target_value(key, x)
    return RegressionSet(key, [(float(lo), float(hi))] * m, x[:n_train], y[:n_train], x[n_train:], y[n_train:])


def write_predictions_csv(path, model, x, y) -> None:
    """Rows of x[, y], target, prediction for plotting."""
    _, predict = _model_api(model)
    x = _as_matrix(x, model.input_dim)
    pred = predict(x)
    cols = ["x"] if x.shape[1] == 1 else ["x", "y"] if x.shape[1] == 2 else [f"x{j + 1}" for j in range(x.shape[1])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols + ["target", "prediction"])
        for xi, ti, pi in zip(x, np.asarray(y).reshape(-1), pred):
            writer.writerow(["%.17g" % v for v in xi] + ["%.17g" % ti, "%.17g" % pi])


# --- checkpoints -----------------------------------------------------------

def to_checkpoint(model, epoch: int, record: Optional[EpochRecord] = None, run: Optional[dict] = None):
    from dataclasses import asdict

    from .checkpoint import Checkpoint

    if isinstance(model, HybridQcpn):
        kind, names = "qcpn", QCPN_NAMES
        config = {"terms": model.terms, "input_dim": model.input_dim, "order": model.order}
    elif isinstance(model, BaselineNn):
        kind, names = "baseline", BASELINE_NAMES
        config = {"input_dim": model.input_dim, "hidden": model.hidden}
    else:
        raise TypeError(f"cannot checkpoint {type(model).__name__}")
    config["domains"] = [list(d) for d in model.domains]
    arrays = {}
    for name in names:
        arrays[name] = model.params[name]
        arrays[f"adam.m.{name}"] = model.adam_m[name]
        arrays[f"adam.v.{name}"] = model.adam_v[name]
    metrics = asdict(record) if record is not None else {}
    return Checkpoint(kind, epoch, dict(config, **(run or {})), arrays, metrics, {"adam_step": model.step})


def from_checkpoint(ckpt):
    if ckpt.model_type == "qcpn":
        cls, names = HybridQcpn, QCPN_NAMES
    elif ckpt.model_type == "baseline":
        cls, names = BaselineNn, BASELINE_NAMES
    else:
        raise ValueError(f"checkpoint holds a {ckpt.model_type!r} model")
    a = ckpt.arrays
    return cls(
        {n: a[n].copy() for n in names},
        [tuple(d) for d in ckpt.config["domains"]],
        {n: a[f"adam.m.{n}"].copy() for n in names},
        {n: a[f"adam.v.{n}"].copy() for n in names},
        int(ckpt.meta.get("adam_step", 0)),
    )
