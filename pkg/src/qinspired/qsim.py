"""Brute-force real statevector simulator.

Every gate used here (Ry, CNOT, controlled-Ry, X) is a real matrix, so
amplitudes are stored as float64. Qubits are numbered from 1 and qubit ``i``
maps to bit ``i - 1`` of the basis index, i.e. qubit 1 is the least
significant bit. ``|10>`` in the docstrings below means qubit 1 = 1 and
qubit 2 = 0 (basis index 1).

The circuit runners build the circuits from the quantum-filter and QCPN
experiments and return Pauli-Z expectation values. They are the reference
against which the closed forms in :mod:`qinspired.closedform` are checked.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, SizeError

MAX_QUBITS = 14


class CircuitKind(enum.Enum):
    QC1 = "qc1"
    QC2 = "qc2"
    QCPN = "qcpn"
    REUPLOAD = "reupload"


@dataclass(frozen=True)
class Statevector:
    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        if self.amps.shape != (1 << self.n_qubits,):
            raise SizeError(
                f"expected {1 << self.n_qubits} amplitudes, got {self.amps.shape}"
            )

    def norm2(self) -> float:
        return float(np.dot(self.amps, self.amps))


def _check_qubit(state: Statevector, qubit: int) -> None:
    if not 1 <= qubit <= state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range 1..{state.n_qubits}")


def _check_pair(state: Statevector, control: int, target: int) -> None:
    _check_qubit(state, control)
    _check_qubit(state, target)
    if control == target:
        raise ValueError(f"control and target are both qubit {control}")


def _pair_indices(n_qubits: int, control: int, target: int):
    """Basis indices with control bit 1 and target bit 0, and their partners."""
    idx = np.arange(1 << n_qubits)
    cbit, tbit = 1 << (control - 1), 1 << (target - 1)
    i0 = idx[(idx & cbit != 0) & (idx & tbit == 0)]
    return i0, i0 | tbit


def zero_state(n_qubits: int) -> Statevector:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise SizeError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")
    amps = np.zeros(1 << n_qubits)
    amps[0] = 1.0
    return Statevector(n_qubits, amps)


def apply_ry(state: Statevector, qubit: int, angle: float) -> Statevector:
    """Ry(angle) on ``qubit``: (a, b) -> (a cos - b sin, a sin + b cos) of angle/2."""
    _check_qubit(state, qubit)
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    v = state.amps.reshape(-1, 2, 1 << (qubit - 1))
    a, b = v[:, 0, :], v[:, 1, :]
    out = np.empty_like(v)
    out[:, 0, :] = c * a - s * b
    out[:, 1, :] = s * a + c * b
    return Statevector(state.n_qubits, out.reshape(-1))


def apply_x(state: Statevector, qubit: int) -> Statevector:
    _check_qubit(state, qubit)
    v = state.amps.reshape(-1, 2, 1 << (qubit - 1))
    return Statevector(state.n_qubits, v[:, ::-1, :].reshape(-1).copy())


def apply_cnot(state: Statevector, control: int, target: int) -> Statevector:
    _check_pair(state, control, target)
    i0, i1 = _pair_indices(state.n_qubits, control, target)
    amps = state.amps.copy()
    amps[i0], amps[i1] = state.amps[i1], state.amps[i0]
    return Statevector(state.n_qubits, amps)


def apply_cry(state: Statevector, control: int, target: int, angle: float) -> Statevector:
    _check_pair(state, control, target)
    i0, i1 = _pair_indices(state.n_qubits, control, target)
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    a, b = state.amps[i0], state.amps[i1]
    amps = state.amps.copy()
    amps[i0] = c * a - s * b
    amps[i1] = s * a + c * b
    return Statevector(state.n_qubits, amps)


def expect_z(state: Statevector, mask: Iterable[int]) -> float:
    """<Z_i Z_j ...> over the 1-based qubits in ``mask``."""
    qubits = sorted(set(mask))
    if not qubits:
        raise ValueError("mask must name at least one qubit")
    for q in qubits:
        _check_qubit(state, q)
    bits = sum(1 << (q - 1) for q in qubits)
    idx = np.arange(1 << state.n_qubits) & bits
    parity = np.zeros(idx.shape, dtype=np.int64)
    for q in qubits:
        parity ^= (idx >> (q - 1)) & 1
    return float(np.dot(1 - 2 * parity, state.amps**2))


def _encoded_layers(x: Sequence[float], theta: Sequence[float]) -> Statevector:
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if x.ndim != 1 or x.shape != theta.shape or x.size == 0:
        raise ValueError(f"x and theta must be equal-length vectors, got {x.shape} and {theta.shape}")
    state = zero_state(x.size)
    for q in range(1, x.size + 1):
        state = apply_ry(state, q, np.pi * x[q - 1])
    for q in range(1, x.size + 1):
        state = apply_ry(state, q, theta[q - 1])
    return state


def qc1_entangle(state: Statevector) -> Statevector:
    """CNOT layer of QC1: CX(1,2), CX(3,4), ... then CX(2,3), CX(4,5), ..."""
    n = state.n_qubits
    for first in (1, 2):
        for c in range(first, n, 2):
            state = apply_cnot(state, c, c + 1)
    return state


def qc2_entangle(state: Statevector) -> Statevector:
    """CNOT chain of QC2: CX(1,2), CX(2,3), ..., CX(n-1,n)."""
    for c in range(1, state.n_qubits):
        state = apply_cnot(state, c, c + 1)
    return state


def run_qc1(x, theta) -> float:
    state = qc1_entangle(_encoded_layers(x, theta))
    return expect_z(state, range(1, state.n_qubits + 1))


def run_qc2(x, theta) -> float:
    if len(x) < 3:
        raise ValueError("QC2 needs at least 3 qubits")
    state = qc2_entangle(_encoded_layers(x, theta))
    return expect_z(state, range(1, state.n_qubits + 1))


def qcpn_theta_size(n_qubits: int) -> int:
    return (n_qubits - 1) ** 2


def run_qcpn_circuit(x: float, theta, n_qubits: int) -> float:
    """Circuit-backed QCPN unit, measured as <Z_1 Z_2>.

    Qubit 1 is the readout and starts in |0>; qubits 2..n are controls.
    The controls are prepared by ``n - 1`` layers of [Ry on every control,
    CNOT chain 2->3->...->n], consuming ``theta`` row by row (shape
    ``(n - 1, n - 1)``). Then ``n - 2`` blocks each apply CRy(arccos x)
    from every control onto the readout, ``(n - 1)(n - 2)`` gates in total.

    Because no data-independent rotation follows the first CRy, each
    control basis string keeps a single path and the output is an
    algebraic polynomial in ``x`` of degree at most ``(n - 1)(n - 2)``.
    """
    if n_qubits < 3:
        raise SizeError("the QCPN circuit needs at least 3 qubits")
    if abs(x) > 1:
        raise DomainError(f"x = {x} outside [-1, 1]")
    theta = np.asarray(theta, dtype=float).reshape(n_qubits - 1, n_qubits - 1)
    xi = np.arccos(x)
    state = zero_state(n_qubits)
    for layer in theta:
        for q in range(2, n_qubits + 1):
            state = apply_ry(state, q, layer[q - 2])
        for q in range(2, n_qubits):
            state = apply_cnot(state, q, q + 1)
    for _ in range(n_qubits - 2):
        for q in range(2, n_qubits + 1):
            state = apply_cry(state, q, 1, xi)
    return expect_z(state, (1, 2))


def run_reuploading(x: float, theta, layers: int) -> float:
    theta = np.asarray(theta, dtype=float)
    if layers < 1:
        raise ValueError("layers must be positive")
    if theta.shape != (layers,):
        raise ValueError(f"expected {layers} angles, got {theta.shape}")
    state = zero_state(1)
    for t in theta:
        state = apply_ry(state, 1, t)
        state = apply_ry(state, 1, np.pi * x)
    return expect_z(state, (1,))


def product_state(alphas) -> Statevector:
    """Ry(alpha_i)|0> on every qubit."""
    alphas = np.asarray(alphas, dtype=float)
    state = zero_state(alphas.size)
    for q, a in enumerate(alphas, start=1):
        state = apply_ry(state, q, a)
    return state


def split_last(state: Statevector):
    """Split ``|psi> = |a>|0>_n + |b>|1>_n`` and return the unnormalised (a, b)."""
    v = state.amps.reshape(2, -1)
    return v[0].copy(), v[1].copy()


def chain_branches(alphas):
    """Branch vectors of the QC2 chain built by recursion on the qubit count.

    With ``|Phi^k> = |a_k>|0>_k + |b_k>|1>_k`` the state of qubits 1..k after
    CX(1,2)...CX(k-1,k), appending qubit k+1 in cos|0> + sin|1> and applying
    CX(k,k+1) gives::

        a_{k+1} = cos * a_k (x) |0>_k + sin * b_k (x) |1>_k
        b_{k+1} = sin * a_k (x) |0>_k + cos * b_k (x) |1>_k

    (half angles). Returns ``(a_n, b_n)`` as vectors over qubits 1..n-1.
    """
    alphas = np.asarray(alphas, dtype=float)
    q0, p0 = np.cos(alphas[0] / 2), np.sin(alphas[0] / 2)
    a, b = np.array([q0]), np.array([p0])
    for alpha in alphas[1:]:
        q, p = np.cos(alpha / 2), np.sin(alpha / 2)
        # new trailing qubit is the most significant bit of the branch vector
        a, b = np.concatenate([q * a, p * b]), np.concatenate([p * a, q * b])
    return a, b


def z_all(vec: np.ndarray) -> float:
    """<Z^{(x)k}> of an unnormalised real vector over k qubits."""
    idx = np.arange(vec.size)
    parity = np.array([bin(i).count("1") & 1 for i in idx])
    return float(np.dot(1 - 2 * parity, vec**2))
