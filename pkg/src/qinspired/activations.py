"""Patch-level activation kernels for the quantum-filter convolution.

A kernel maps a flattened (row-major) patch ``x`` with values in [0, 1] to a
scalar. Quantum kinds encode each pixel as the angle ``theta_i = pi * x_i``
and combine it with a trainable angle ``phi_i``. Sites are 1-based, so for a
3x3 window the odd sites are the four corners and the centre.

==== ==========================================================
AF1  tanh(sum_i w_i x_i + b)
AF2  tanh(sum_{i odd} w_i x_i + b)
AF3  -prod_{i odd} cos(phi_i + theta_i)
AF4  prod_{i even} cos(phi_i + theta_i)
AF5  prod_i cos(phi_i + theta_i)
F1   prod_{i even}(cos phi_i + cos theta_i) + prod_{i odd}(sin phi_i + cos theta_i)
F2   prod_{i even}(cos phi_i + cos theta_i)
F3   prod_i cos phi_i cos theta_i
==== ==========================================================

Quantum kinds carry one angle per site even when the site is masked out, so
parameter arrays line up with the patch. Angles are never wrapped.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence

import numpy as np


class Kind(enum.Enum):
    AF1 = "af1"
    AF2 = "af2"
    AF3 = "af3"
    AF4 = "af4"
    AF5 = "af5"
    F1 = "f1"
    F2 = "f2"
    F3 = "f3"

    @classmethod
    def parse(cls, name) -> "Kind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(
                f"unknown activation {name!r}; choose from {', '.join(k.value for k in cls)}"
            ) from None

    @property
    def is_quantum(self) -> bool:
        return self not in (Kind.AF1, Kind.AF2)


# factor modes shared with the compiled kernels
COS_SUM = 0  # cos(phi + theta)
COS_PROD = 1  # cos(phi) * cos(theta)
COS_PLUS = 2  # cos(phi) + cos(theta)
SIN_PLUS = 3  # sin(phi) + cos(theta)


class ProductTerm(NamedTuple):
    mode: int
    sites: np.ndarray  # 0-based positions in the flattened patch
    sign: float


def odd_sites(patch_len: int) -> np.ndarray:
    return np.arange(0, patch_len, 2)


def even_sites(patch_len: int) -> np.ndarray:
    return np.arange(1, patch_len, 2)


def product_terms(kind: Kind, patch_len: int) -> List[ProductTerm]:
    """Decompose a quantum kind into signed products of per-site factors."""
    odd, even, every = odd_sites(patch_len), even_sites(patch_len), np.arange(patch_len)
    table = {
        Kind.AF3: [ProductTerm(COS_SUM, odd, -1.0)],
        Kind.AF4: [ProductTerm(COS_SUM, even, 1.0)],
        Kind.AF5: [ProductTerm(COS_SUM, every, 1.0)],
        Kind.F1: [ProductTerm(COS_PLUS, even, 1.0), ProductTerm(SIN_PLUS, odd, 1.0)],
        Kind.F2: [ProductTerm(COS_PLUS, even, 1.0)],
        Kind.F3: [ProductTerm(COS_PROD, every, 1.0)],
    }
    return table[kind]


def param_size(kind: Kind, patch_len: int) -> int:
    kind = Kind.parse(kind)
    if kind is Kind.AF1:
        return patch_len + 1
    if kind is Kind.AF2:
        return math.ceil(patch_len / 2) + 1
    return patch_len


def init_params(kind: Kind, patch_len: int, rng: np.random.Generator, fan_out: int = 1) -> np.ndarray:
    """Angles uniform on [-pi, pi); tanh weights Glorot-uniform with zero bias."""
    kind = Kind.parse(kind)
    size = param_size(kind, patch_len)
    if kind.is_quantum:
        return rng.uniform(-np.pi, np.pi, size)
    limit = math.sqrt(6.0 / (size - 1 + fan_out))
    params = rng.uniform(-limit, limit, size)
    params[-1] = 0.0
    return params


def _factor(mode: int, phi, theta):
    if mode == COS_SUM:
        return np.cos(phi + theta), -np.sin(phi + theta)
    if mode == COS_PROD:
        return np.cos(phi) * np.cos(theta), -np.sin(phi) * np.cos(theta)
    if mode == COS_PLUS:
        return np.cos(phi) + np.cos(theta), -np.sin(phi)
    if mode == SIN_PLUS:
        return np.sin(phi) + np.cos(theta), np.cos(phi)
    raise ValueError(f"unknown factor mode {mode}")


@dataclass(frozen=True)
class ActivationKernel:
    kind: Kind
    patch_len: int
    params: np.ndarray

    def __post_init__(self):
        kind = Kind.parse(self.kind)
        params = np.array(self.params, dtype=float)
        if params.shape != (param_size(kind, self.patch_len),):
            raise ValueError(
                f"{kind.name} with patch_len {self.patch_len} needs "
                f"{param_size(kind, self.patch_len)} params, got {params.shape}"
            )
        params.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", params)

    @classmethod
    def random(cls, kind, patch_len: int = 9, rng=None) -> "ActivationKernel":
        kind = Kind.parse(kind)
        rng = np.random.default_rng(rng)
        return cls(kind, patch_len, init_params(kind, patch_len, rng))

    def _patch(self, patch) -> np.ndarray:
        patch = np.asarray(patch, dtype=float)
        if patch.shape != (self.patch_len,):
            raise ValueError(f"patch must have length {self.patch_len}, got {patch.shape}")
        return patch

    def _tanh_inputs(self, patch):
        w, b = self.params[:-1], self.params[-1]
        x = patch if self.kind is Kind.AF1 else patch[odd_sites(self.patch_len)]
        return x, w, b


def eval(kernel: ActivationKernel, patch) -> float:  # noqa: A001 - mirrors the kernel API
    patch = kernel._patch(patch)
    if not kernel.kind.is_quantum:
        x, w, b = kernel._tanh_inputs(patch)
        return float(np.tanh(np.dot(w, x) + b))
    theta = np.pi * patch
    total = 0.0
    for term in product_terms(kernel.kind, kernel.patch_len):
        f, _ = _factor(term.mode, kernel.params[term.sites], theta[term.sites])
        total += term.sign * float(np.prod(f))
    return total


def grad_params(kernel: ActivationKernel, patch) -> np.ndarray:
    """Analytic d(eval)/d(params), same layout as ``kernel.params``."""
    patch = kernel._patch(patch)
    grad = np.zeros_like(kernel.params)
    if not kernel.kind.is_quantum:
        x, w, b = kernel._tanh_inputs(patch)
        dpre = 1.0 - np.tanh(np.dot(w, x) + b) ** 2
        grad[:-1] = dpre * x
        grad[-1] = dpre
        return grad
    theta = np.pi * patch
    for term in product_terms(kernel.kind, kernel.patch_len):
        f, df = _factor(term.mode, kernel.params[term.sites], theta[term.sites])
        for k, site in enumerate(term.sites):
            others = np.prod(np.delete(f, k))
            grad[site] += term.sign * df[k] * others
    return grad


def edge_response_profile(kernel: ActivationKernel, ramp: Sequence) -> np.ndarray:
    """Kernel output for each patch in ``ramp``."""
    return np.array([eval(kernel, p) for p in ramp])


def edge_ramp(patch_len: int = 9, steps: int = 5) -> List[np.ndarray]:
    """Flat background, mid-ramp edge patches, and flat interior."""
    return [np.full(patch_len, v) for v in np.linspace(0.0, 1.0, steps)]
