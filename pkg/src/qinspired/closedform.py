"""Closed-form outputs of the shallow circuits and Chebyshev utilities.

Qubit/site indices are 1-based: "odd" means positions 1, 3, 5, ...

The QC1 and QC2 evaluators that ship here are the expressions the
statevector simulator in :mod:`qinspired.qsim` agrees with. The printed
variants (``*_printed``) reproduce the published formulas literally and
are kept only so the disagreement can be measured and reported.
"""
from __future__ import annotations

import math
import warnings
from typing import Sequence

import numpy as np

from .errors import DomainError, NumericalError

__all__ = [
    "angle_vector",
    "o_qc1_closed",
    "o_qc1_printed",
    "o_qc2_closed",
    "o_qc2_printed",
    "qc2_printed_branch",
    "qc2_discrepancy",
    "write_qc2_discrepancy_report",
    "chebyshev_t",
    "chebyshev_basis",
    "chebyshev_nodes",
    "chebyshev_project",
    "qcpn_unit_eval",
    "qcpn_unit_grad",
    "ExtrapolationWarning",
]


class ExtrapolationWarning(UserWarning):
    """Chebyshev polynomial evaluated outside [-1, 1]."""


def angle_vector(theta, x) -> np.ndarray:
    """alpha_i = theta_i + pi * x_i."""
    return np.asarray(theta, dtype=float) + np.pi * np.asarray(x, dtype=float)


def _alphas(alphas) -> np.ndarray:
    a = np.asarray(alphas, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("alphas must be a non-empty vector")
    if not np.all(np.isfinite(a)):
        raise ValueError("alphas must be finite")
    return a


def _qc1_product(c: np.ndarray) -> float:
    n = c.size
    if n % 2:
        return float(np.prod(c[0::2]))
    # odd sites 1, 3, ..., n-3 and the last site n
    return float(c[n - 1] * np.prod(c[0 : n - 2 : 2]))


def o_qc1_closed(alphas: Sequence[float]) -> float:
    """<Z^n> of QC1.

    n odd:  prod_{i odd} cos alpha_i
    n even: cos alpha_n * prod_{i odd, i <= n-3} cos alpha_i
    """
    return _qc1_product(np.cos(_alphas(alphas)))


def o_qc1_printed(alphas: Sequence[float]) -> float:
    """Published QC1 form, which carries an extra overall minus sign."""
    return -o_qc1_closed(alphas)


def o_qc2_closed(alphas: Sequence[float]) -> float:
    """<Z^n> of QC2: product of cos alpha_i over sites with the parity of n."""
    a = _alphas(alphas)
    n = a.size
    if n < 3:
        raise ValueError("QC2 closed form needs n >= 3")
    return float(np.prod(np.cos(a[(n - 1) % 2 :: 2])))


def qc2_printed_branch(n: int):
    """Branch id and 1-based site list of the published four-branch QC2 form."""
    if n < 3:
        raise ValueError("QC2 closed form needs n >= 3")
    r = n % 4
    branch, lower, tail = {
        0: ("n=4+4m", 4, (3, 1)),
        2: ("n=6+4m", 6, (4, 2)),
        3: ("n=3+4m", 5, (5, 2)),
        1: ("n=5+4m", 5, (3, 1)),
    }[r]
    sites = []
    i = n - 2
    while i > lower:
        sites.append(i)
        i -= 4
    return branch, sites + list(tail)


def o_qc2_printed(alphas: Sequence[float]) -> float:
    """Published QC2 form; NaN when a branch references a site beyond n."""
    a = _alphas(alphas)
    _, sites = qc2_printed_branch(a.size)
    if max(sites) > a.size:
        return math.nan
    return float(np.prod(np.cos(a[np.array(sites) - 1])))


def qc2_discrepancy(n_values, draws: int = 100, seed: int = 0):
    """Compare the printed QC2 branch with the simulator for each n.

    Returns a list of dicts with keys n, branch, printed_sites, shipped_sites,
    max_dev_printed, max_dev_shipped.
    """
    from .qsim import run_qc2

    rng = np.random.default_rng(seed)
    rows = []
    for n in n_values:
        branch, sites = qc2_printed_branch(n)
        dev_printed = 0.0
        dev_shipped = 0.0
        for _ in range(draws):
            theta = rng.uniform(-np.pi, np.pi, n)
            x = rng.uniform(0.0, 1.0, n)
            ref = run_qc2(x, theta)
            alphas = angle_vector(theta, x)
            printed = o_qc2_printed(alphas)
            dev_printed = max(dev_printed, abs(printed - ref)) if not math.isnan(printed) else math.inf
            dev_shipped = max(dev_shipped, abs(o_qc2_closed(alphas) - ref))
        rows.append(
            {
                "n": n,
                "branch": branch,
                "printed_sites": sites,
                "shipped_sites": list(range(1 + (n - 1) % 2, n + 1, 2)),
                "max_dev_printed": dev_printed,
                "max_dev_shipped": dev_shipped,
            }
        )
    return rows


def write_qc2_discrepancy_report(path, rows) -> None:
    """One tab-separated line per circuit size."""
    lines = ["n\tbranch\tprinted_sites\tmax_dev_printed\tshipped_sites\tmax_dev_shipped"]
    for r in rows:
        lines.append(
            "\t".join(
                [
                    str(r["n"]),
                    r["branch"],
                    ",".join(map(str, r["printed_sites"])),
                    repr(r["max_dev_printed"]),
                    ",".join(map(str, r["shipped_sites"])),
                    repr(r["max_dev_shipped"]),
                ]
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def chebyshev_t(k: int, x):
    """T_k(x) by the three-term recurrence. Works elementwise on arrays."""
    if k < 0:
        raise ValueError("order must be non-negative")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1):
        warnings.warn("Chebyshev polynomial evaluated outside [-1, 1]", ExtrapolationWarning, stacklevel=2)
    t_prev, t = np.ones_like(x), x
    if k == 0:
        return t_prev if t_prev.ndim else float(t_prev)
    for _ in range(k - 1):
        t_prev, t = t, 2 * x * t - t_prev
    return t if t.ndim else float(t)


def chebyshev_basis(max_order: int, x) -> np.ndarray:
    """Matrix with columns T_0(x) .. T_K(x), shape (len(x), K + 1)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((x.size, max_order + 1))
    out[:, 0] = 1.0
    if max_order >= 1:
        out[:, 1] = x
    for k in range(2, max_order + 1):
        out[:, k] = 2 * x * out[:, k - 1] - out[:, k - 2]
    return out


def chebyshev_nodes(m: int) -> np.ndarray:
    """Chebyshev-Gauss abscissae cos(pi (j + 1/2) / m), j = 0..m-1."""
    return np.cos(np.pi * (np.arange(m) + 0.5) / m)


def chebyshev_project(xs, ys, max_order: int):
    """Least-squares fit of ``ys`` onto T_0..T_K.

    Returns ``(coeffs, residual)`` where residual is the RMS misfit.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1-D arrays of equal length")
    if np.any(np.abs(xs) > 1):
        raise DomainError("sample abscissae must lie in [-1, 1]")
    if np.unique(xs).size < max_order + 1:
        raise NumericalError(
            f"need at least {max_order + 1} distinct abscissae, got {np.unique(xs).size}"
        )
    basis = chebyshev_basis(max_order, xs)
    coeffs, _, rank, _ = np.linalg.lstsq(basis, ys, rcond=None)
    if rank < max_order + 1:
        raise NumericalError("rank-deficient Chebyshev design matrix")
    residual = float(np.sqrt(np.mean((basis @ coeffs - ys) ** 2)))
    return coeffs, residual


def _signs(size: int) -> np.ndarray:
    return np.where(np.arange(size) % 2 == 0, 1.0, -1.0)


def qcpn_unit_eval(a, x):
    """sum_i (-1)^i a_i^2 T_i(x); vectorised over ``x``."""
    a = np.asarray(a, dtype=float)
    scalar = np.ndim(x) == 0
    basis = chebyshev_basis(a.size - 1, x)
    out = basis @ (_signs(a.size) * a * a)
    return float(out[0]) if scalar else out


def qcpn_unit_grad(a, x) -> np.ndarray:
    """d/da_i of :func:`qcpn_unit_eval` = 2 (-1)^i a_i T_i(x) for scalar ``x``."""
    a = np.asarray(a, dtype=float)
    basis = chebyshev_basis(a.size - 1, x)[0]
    return 2.0 * _signs(a.size) * a * basis
