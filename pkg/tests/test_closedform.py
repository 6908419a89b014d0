import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qinspired import closedform as cf
from qinspired import qsim
from qinspired.errors import DomainError, NumericalError


def test_qc1_closed_examples():
    assert cf.o_qc1_closed([0, 0, 0]) == 1.0
    assert cf.o_qc1_printed([0, 0, 0]) == -1.0
    alphas = np.zeros(9)
    alphas[0] = math.pi / 2
    assert cf.o_qc1_closed(alphas) == pytest.approx(0.0, abs=1e-15)


def test_qc1_closed_matches_oracle_with_zero_data(rng):
    alphas = rng.uniform(-math.pi, math.pi, 4)
    assert cf.o_qc1_closed(alphas) == pytest.approx(qsim.run_qc1(np.zeros(4), alphas), abs=1e-10)


def test_printed_qc1_is_negated_oracle(rng):
    for n in range(1, 10):
        theta, x = rng.uniform(-3, 3, n), rng.uniform(0, 1, n)
        ref = qsim.run_qc1(x, theta)
        assert cf.o_qc1_printed(cf.angle_vector(theta, x)) == pytest.approx(-ref, abs=1e-12)


def test_qc2_closed_examples(rng):
    assert cf.o_qc2_closed(np.zeros(4)) == 1.0
    assert cf.o_qc2_closed([0, math.pi, 0, 0, 0, 0]) == pytest.approx(-1.0)
    alphas = rng.uniform(-math.pi, math.pi, 10)
    assert cf.o_qc2_closed(alphas) == pytest.approx(qsim.run_qc2(np.zeros(10), alphas), abs=1e-10)


def test_qc2_printed_branch_out_of_range():
    branch, sites = cf.qc2_printed_branch(3)
    assert branch == "n=3+4m" and max(sites) > 3
    assert math.isnan(cf.o_qc2_printed([0.1, 0.2, 0.3]))


def test_qc2_discrepancy_report(tmp_path):
    rows = cf.qc2_discrepancy(range(3, 8), draws=5, seed=1)
    assert [r["n"] for r in rows] == [3, 4, 5, 6, 7]
    assert all(r["max_dev_shipped"] < 1e-10 for r in rows)
    assert any(r["max_dev_printed"] > 1e-3 for r in rows)
    path = tmp_path / "report.tsv"
    cf.write_qc2_discrepancy_report(path, rows)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("n\tbranch") and len(lines) == 6


@pytest.mark.parametrize("n", range(1, 13))
def test_qc1_oracle_equivalence(n, rng):
    for _ in range(100):
        theta, x = rng.uniform(-math.pi, math.pi, n), rng.uniform(0, 1, n)
        assert abs(cf.o_qc1_closed(cf.angle_vector(theta, x)) - qsim.run_qc1(x, theta)) < 1e-10


@pytest.mark.parametrize("n", range(3, 13))
def test_qc2_oracle_equivalence(n, rng):
    for _ in range(100):
        theta, x = rng.uniform(-math.pi, math.pi, n), rng.uniform(0, 1, n)
        assert abs(cf.o_qc2_closed(cf.angle_vector(theta, x)) - qsim.run_qc2(x, theta)) < 1e-10


def test_qc1_site_dependence(rng):
    alphas = rng.uniform(-math.pi, math.pi, 9)
    base = cf.o_qc1_closed(alphas)
    for site in range(1, 10):
        moved = alphas.copy()
        moved[site - 1] += 0.7
        if site % 2 == 0:
            assert cf.o_qc1_closed(moved) == base
        else:
            assert cf.o_qc1_closed(moved) != pytest.approx(base, abs=1e-9)


def test_chebyshev_examples():
    assert cf.chebyshev_t(2, 0.5) == pytest.approx(-0.5)
    for n in range(0, 20):
        assert cf.chebyshev_t(n, 1.0) == pytest.approx(1.0)
    assert cf.chebyshev_t(7, math.cos(0.3)) == pytest.approx(math.cos(2.1), abs=1e-14)
    with pytest.raises(ValueError):
        cf.chebyshev_t(-1, 0.0)


def test_chebyshev_extrapolation_warns():
    with pytest.warns(cf.ExtrapolationWarning):
        assert cf.chebyshev_t(2, 2.0) == pytest.approx(7.0)


@given(st.integers(0, 64), st.floats(-1, 1))
@settings(max_examples=300, deadline=None)
def test_chebyshev_bounded(k, x):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert abs(cf.chebyshev_t(k, x)) <= 1 + 1e-12


@given(st.integers(0, 40), st.floats(0, math.pi))
@settings(max_examples=200, deadline=None)
def test_chebyshev_trig_identity(k, xi):
    assert cf.chebyshev_t(k, math.cos(xi)) == pytest.approx(math.cos(k * xi), abs=1e-11)


def test_basis_matches_scalar_recurrence(rng):
    x = rng.uniform(-1, 1, 17)
    basis = cf.chebyshev_basis(9, x)
    for k in range(10):
        assert np.allclose(basis[:, k], cf.chebyshev_t(k, x), atol=1e-14)


def test_project_examples():
    xs = cf.chebyshev_nodes(20)
    coeffs, res = cf.chebyshev_project(xs, xs**2, 2)
    assert np.allclose(coeffs, [0.5, 0, 0.5], atol=1e-12) and res < 1e-12
    xs = cf.chebyshev_nodes(50)
    _, res = cf.chebyshev_project(xs, np.abs(xs), 2)
    assert res > 1e-3


def test_project_circuit_degree(rng):
    n = 4
    theta = rng.uniform(-math.pi, math.pi, qsim.qcpn_theta_size(n))
    xs = cf.chebyshev_nodes(30)
    ys = np.array([qsim.run_qcpn_circuit(x, theta, n) for x in xs])
    _, res = cf.chebyshev_project(xs, ys, 6)
    assert res < 1e-8


def test_project_errors():
    with pytest.raises(NumericalError):
        cf.chebyshev_project([0.1, 0.2], [1.0, 2.0], 3)
    with pytest.raises(DomainError):
        cf.chebyshev_project([0.1, 1.5, 0.3], [1.0, 2.0, 3.0], 1)


def test_qcpn_unit_examples(rng):
    x = rng.uniform(-1, 1, 11)
    assert np.allclose(cf.qcpn_unit_eval([1, 0, 0, 0], x), 1.0)
    assert np.allclose(cf.qcpn_unit_eval([0, 1, 0], x), -x)
    assert cf.qcpn_unit_eval([1, 1, 1, 0], 0.0) == pytest.approx(0.0)
    assert np.array_equal(cf.qcpn_unit_grad([1, 0, 0], 0.3), [2, 0, 0])
    assert np.array_equal(cf.qcpn_unit_grad(np.zeros(5), 0.3), np.zeros(5))


def test_qcpn_unit_sign_structure(rng):
    for k in range(10):
        a = np.zeros(10)
        a[k] = 1.0
        x = rng.uniform(-1, 1, 7)
        assert np.array_equal(cf.qcpn_unit_eval(a, x), (-1) ** k * cf.chebyshev_basis(9, x)[:, k])
