import math

import numpy as np
import pytest

from qinspired import qsim
from qinspired.closedform import angle_vector, o_qc1_closed, o_qc2_closed
from qinspired.errors import DomainError, SizeError


def basis(n, index):
    amps = np.zeros(1 << n)
    amps[index] = 1.0
    return qsim.Statevector(n, amps)


def test_zero_state():
    assert np.array_equal(qsim.zero_state(1).amps, [1, 0])
    assert np.array_equal(qsim.zero_state(2).amps, [1, 0, 0, 0])
    with pytest.raises(SizeError):
        qsim.zero_state(15)
    with pytest.raises(SizeError):
        qsim.zero_state(0)


def test_ry_examples():
    s = qsim.zero_state(1)
    assert np.allclose(qsim.apply_ry(s, 1, math.pi).amps, [0, 1], atol=1e-15)
    assert np.array_equal(qsim.apply_ry(s, 1, 0.0).amps, [1, 0])
    half = math.sqrt(2) / 2
    assert np.allclose(qsim.apply_ry(s, 1, math.pi / 2).amps, [half, half], atol=1e-15)


def test_bit_convention():
    # qubit 1 is the least significant bit
    s = qsim.apply_ry(qsim.zero_state(3), 1, math.pi)
    assert abs(s.amps[1]) == pytest.approx(1.0)
    s = qsim.apply_ry(qsim.zero_state(3), 3, math.pi)
    assert abs(s.amps[4]) == pytest.approx(1.0)


def test_cnot_examples():
    assert np.array_equal(qsim.apply_cnot(basis(2, 1), 1, 2).amps, basis(2, 3).amps)
    assert np.array_equal(qsim.apply_cnot(basis(2, 0), 1, 2).amps, basis(2, 0).amps)
    with pytest.raises(ValueError):
        qsim.apply_cnot(basis(2, 0), 2, 2)
    with pytest.raises(IndexError):
        qsim.apply_cnot(basis(2, 0), 1, 3)


def test_cry_examples(rng):
    s = qsim.product_state(rng.uniform(-3, 3, 3))
    assert np.array_equal(qsim.apply_cry(s, 1, 2, 0.0).amps, s.amps)
    assert np.allclose(qsim.apply_cry(basis(2, 1), 1, 2, math.pi).amps, basis(2, 3).amps, atol=1e-15)
    for angle in (0.3, 1.0, -2.0):
        assert np.array_equal(qsim.apply_cry(basis(2, 0), 1, 2, angle).amps, basis(2, 0).amps)


def test_expect_z_examples():
    assert qsim.expect_z(qsim.zero_state(3), {1, 2, 3}) == 1.0
    assert qsim.expect_z(basis(1, 1), {1}) == -1.0
    half = math.sqrt(2) / 2
    assert qsim.expect_z(qsim.Statevector(1, np.array([half, half])), {1}) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        qsim.expect_z(qsim.zero_state(2), [])


def test_norm_preserved_by_random_circuits(rng):
    for _ in range(50):
        n = int(rng.integers(2, 7))
        s = qsim.zero_state(n)
        for _ in range(30):
            op = rng.integers(3)
            a, b = rng.choice(np.arange(1, n + 1), 2, replace=False)
            if op == 0:
                s = qsim.apply_ry(s, int(a), rng.uniform(-7, 7))
            elif op == 1:
                s = qsim.apply_cnot(s, int(a), int(b))
            else:
                s = qsim.apply_cry(s, int(a), int(b), rng.uniform(-7, 7))
            assert s.norm2() == pytest.approx(1.0, abs=1e-12)
        assert s.amps.size == 1 << n


def test_qc1_small_cases():
    # The simulator gives +cos products; the published form carries an extra minus.
    assert qsim.run_qc1([0.0], [0.0]) == pytest.approx(1.0)
    assert qsim.run_qc1([0, 0, 0], [math.pi, 0, math.pi]) == pytest.approx(1.0)
    assert qsim.run_qc1([0, 0, 0], [math.pi, 0, 0]) == pytest.approx(-1.0)


def test_qc1_matches_closed_form_n9(rng):
    theta, x = rng.uniform(-math.pi, math.pi, 9), rng.uniform(0, 1, 9)
    assert qsim.run_qc1(x, theta) == pytest.approx(o_qc1_closed(angle_vector(theta, x)), abs=1e-10)


def test_qc2_examples(rng):
    assert qsim.run_qc2(np.zeros(4), np.zeros(4)) == pytest.approx(1.0)
    assert qsim.run_qc2(np.zeros(6), np.zeros(6)) == pytest.approx(1.0)
    theta, x = rng.uniform(-math.pi, math.pi, 8), rng.uniform(0, 1, 8)
    assert qsim.run_qc2(x, theta) == pytest.approx(o_qc2_closed(angle_vector(theta, x)), abs=1e-10)
    with pytest.raises(ValueError):
        qsim.run_qc2([0, 0], [0, 0])


def test_qcpn_circuit_examples(rng):
    for n in (3, 4, 5):
        zeros = np.zeros(qsim.qcpn_theta_size(n))
        for x in (-1.0, -0.3, 0.0, 0.8, 1.0):
            assert qsim.run_qcpn_circuit(x, zeros, n) == pytest.approx(1.0)
    # x = 1 makes every CRy the identity: only the control preparation matters
    n = 4
    theta = rng.uniform(-math.pi, math.pi, qsim.qcpn_theta_size(n))
    state = qsim.zero_state(n)
    for layer in theta.reshape(n - 1, n - 1):
        for q in range(2, n + 1):
            state = qsim.apply_ry(state, q, layer[q - 2])
        for q in range(2, n):
            state = qsim.apply_cnot(state, q, q + 1)
    assert qsim.run_qcpn_circuit(1.0, theta, n) == pytest.approx(qsim.expect_z(state, (1, 2)), abs=1e-14)


def test_qcpn_circuit_errors():
    with pytest.raises(SizeError):
        qsim.run_qcpn_circuit(0.0, [], 2)
    with pytest.raises(DomainError):
        qsim.run_qcpn_circuit(1.5, np.zeros(4), 3)


def test_reuploading_examples():
    assert qsim.run_reuploading(0.0, [0.0], 1) == pytest.approx(1.0)
    assert qsim.run_reuploading(0.0, [math.pi], 1) == pytest.approx(-1.0)
    assert qsim.run_reuploading(0.0, [math.pi / 2, math.pi / 2], 2) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        qsim.run_reuploading(0.0, [0.0], 2)


def test_outputs_bounded_and_deterministic(rng):
    for _ in range(20):
        n = int(rng.integers(3, 8))
        theta, x = rng.uniform(-7, 7, n), rng.uniform(0, 1, n)
        for run in (qsim.run_qc1, qsim.run_qc2):
            a, b = run(x, theta), run(x, theta)
            assert a == b
            assert -1.0 - 1e-12 <= a <= 1.0 + 1e-12
        th = rng.uniform(-7, 7, qsim.qcpn_theta_size(n))
        assert abs(qsim.run_qcpn_circuit(rng.uniform(-1, 1), th, n)) <= 1.0 + 1e-12
