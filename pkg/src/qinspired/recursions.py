"""Recursive decompositions behind the QC1 and QC2 closed forms.

Each helper returns the quantities on both sides of an identity so callers
(tests, ``qinspired verify``) can measure the deviation themselves.
Single-qubit inputs are ``q|0> + p|1>`` with ``q = cos(alpha/2)`` and
``p = sin(alpha/2)``.
"""
from __future__ import annotations

from typing import Tuple

import numpy as np

from . import qsim
from .errors import SizeError


def _qc1_state(alphas) -> qsim.Statevector:
    return qsim.qc1_entangle(qsim.product_state(alphas))


def _z_all(state: qsim.Statevector) -> float:
    return qsim.expect_z(state, range(1, state.n_qubits + 1))


def qc1_peel(alphas) -> Tuple[float, float, float]:
    """Peel qubits 1 and 2 off the QC1 construction.

    Returns ``(full, recursive, printed)`` where ``full`` is <Z...Z> on all n
    qubits, ``recursive = (q1^2 - p1^2) * <Z...Z>`` of the same construction on
    qubits 3..n, and ``printed`` uses the factor ``p1^2 - q1^2`` instead.
    ``full == recursive`` holds; ``printed`` is its negative.
    """
    a = np.asarray(alphas, dtype=float)
    if a.size < 3:
        raise SizeError("the recursion needs at least 3 qubits")
    q1, p1 = np.cos(a[0] / 2), np.sin(a[0] / 2)
    rest = _z_all(_qc1_state(a[2:]))
    full = _z_all(_qc1_state(a))
    return full, (q1 * q1 - p1 * p1) * rest, (p1 * p1 - q1 * q1) * rest


def x_conjugation(alphas) -> Tuple[float, float]:
    """``(<X1 Z..Z X1>, -<Z..Z>)`` on the QC1 state; the two agree.

    Qubit 1 here plays the role of the first qubit of the peeled register.
    """
    state = _qc1_state(alphas)
    return _z_all(qsim.apply_x(state, 1)), -_z_all(state)


def qc2_branch_moments(alphas) -> Tuple[np.ndarray, np.ndarray]:
    """<Z..Z> of the two QC2 chain branches after each appended qubit.

    ``A[k]`` and ``B[k]`` belong to the chain on qubits 1..k+1. They obey
    ``A[k+1] + B[k+1] = A[k] - B[k]`` and
    ``A[k+1] - B[k+1] = cos(alpha_{k+2}) (A[k] + B[k])``, and the chain output
    on n qubits is ``A[n-1] - B[n-1]``.
    """
    a = np.asarray(alphas, dtype=float)
    A, B = [], []
    for k in range(1, a.size + 1):
        ga, gb = qsim.chain_branches(a[:k])
        A.append(qsim.z_all(ga))
        B.append(qsim.z_all(gb))
    return np.array(A), np.array(B)


def qc2_chain_output(alphas) -> float:
    """<Z..Z> after the CNOT chain, straight from the simulator."""
    return _z_all(qsim.qc2_entangle(qsim.product_state(alphas)))
