import math

import numpy as np
import pytest

from qinspired import activations as act
from qinspired.activations import ActivationKernel, Kind
from qinspired.closedform import o_qc1_printed

from conftest import central_diff, rel_error

ALL_KINDS = list(Kind)


def kernel(kind, params, patch_len=9):
    return ActivationKernel(Kind.parse(kind), patch_len, np.asarray(params, dtype=float))


def test_parse():
    assert Kind.parse("af3") is Kind.AF3
    assert Kind.parse("F2") is Kind.F2
    with pytest.raises(ValueError, match="af1"):
        Kind.parse("af9")


def test_param_sizes():
    assert act.param_size(Kind.AF1, 9) == 10
    assert act.param_size(Kind.AF2, 9) == 6
    for kind in (Kind.AF3, Kind.AF4, Kind.AF5, Kind.F1, Kind.F2, Kind.F3):
        assert act.param_size(kind, 9) == 9
    with pytest.raises(ValueError):
        kernel("af3", np.zeros(8))


def test_params_read_only():
    k = kernel("af3", np.zeros(9))
    with pytest.raises(ValueError):
        k.params[0] = 1.0


def test_eval_examples(rng):
    zeros = np.zeros(9)
    assert act.eval(kernel("af3", zeros), zeros) == -1.0
    phi = zeros.copy()
    phi[0] = math.pi / 2
    assert act.eval(kernel("af3", phi), zeros) == pytest.approx(0.0, abs=1e-15)
    assert act.eval(kernel("af3", np.full(9, math.pi / 2)), np.ones(9)) == pytest.approx(0.0, abs=1e-15)
    assert act.eval(kernel("f3", zeros), zeros) == 1.0
    assert act.eval(kernel("af1", np.zeros(10)), rng.uniform(0, 1, 9)) == 0.0


def test_grad_examples(rng):
    zeros = np.zeros(9)
    assert np.array_equal(act.grad_params(kernel("af3", zeros), zeros), np.zeros(9))
    patch = rng.uniform(0, 1, 9)
    g = act.grad_params(kernel("af1", np.zeros(10)), patch)
    assert np.allclose(g[:-1], patch) and g[-1] == 1.0


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.name)
def test_grad_finite_difference(kind, rng):
    worst = 0.0
    for _ in range(200):
        params = act.init_params(kind, 9, rng)
        patch = rng.uniform(0, 1, 9)
        analytic = act.grad_params(kernel(kind, params), patch)
        numeric = central_diff(lambda: act.eval(kernel(kind, params), patch), params)
        worst = max(worst, rel_error(analytic, numeric))
    assert worst <= 1e-5


def test_af3_is_printed_qc1(rng):
    for _ in range(50):
        phi, patch = rng.uniform(-math.pi, math.pi, 9), rng.uniform(0, 1, 9)
        alphas = phi + math.pi * patch
        assert act.eval(kernel("af3", phi), patch) == pytest.approx(o_qc1_printed(alphas), abs=1e-14)


def test_parity_masking(rng):
    phi, patch = rng.uniform(-math.pi, math.pi, 9), rng.uniform(0, 1, 9)
    even, odd = act.even_sites(9), act.odd_sites(9)
    for moved_sites, kind in ((even, "af3"), (odd, "af4")):
        base = act.eval(kernel(kind, phi), patch)
        phi2, patch2 = phi.copy(), patch.copy()
        phi2[moved_sites] += rng.uniform(-1, 1, moved_sites.size)
        patch2[moved_sites] = rng.uniform(0, 1, moved_sites.size)
        assert act.eval(kernel(kind, phi2), patch2) == base


@pytest.mark.parametrize("kind", ["af3", "af4", "af5", "f3"])
def test_bounded(kind, rng):
    for _ in range(200):
        out = act.eval(kernel(kind, rng.uniform(-10, 10, 9)), rng.uniform(0, 1, 9))
        assert -1.0 <= out <= 1.0


def test_edge_profile():
    k = kernel("af3", np.full(9, math.pi / 2))
    ramp = act.edge_ramp(9, 5)
    prof = act.edge_response_profile(k, ramp)
    assert abs(prof[0]) < 1e-15 and abs(prof[-1]) < 1e-15
    assert abs(prof[2]) > 1e-3
    mid = np.zeros(9)
    mid[act.odd_sites(9)] = 0.5
    assert abs(act.eval(k, mid)) > 1e-3


def test_init_params(rng):
    q = act.init_params(Kind.AF5, 9, rng)
    assert q.shape == (9,) and np.all((q >= -math.pi) & (q < math.pi))
    t = act.init_params(Kind.AF1, 9, rng, fan_out=16)
    assert t[-1] == 0.0 and np.all(np.abs(t[:-1]) <= math.sqrt(6 / 25))
