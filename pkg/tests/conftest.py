import os
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = Path(os.environ.get("QINSPIRED_DATA", ROOT / "data"))

# (criterion, passed, detail) lines collected by test_acceptance.py
ACCEPTANCE = []


def record(criterion, passed, detail=""):
    """``passed`` is a bool or one of the strings PASS, FAIL, SKIP."""
    status = passed if isinstance(passed, str) else ("PASS" if passed else "FAIL")
    ACCEPTANCE.append((str(criterion), status, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, status, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {criterion}: {status}  {detail}")


def central_diff(f, params, step=1e-6):
    """Central finite differences of scalar ``f()`` w.r.t. every entry of ``params`` (in place)."""
    grad = np.zeros_like(params)
    for idx in np.ndindex(params.shape):
        orig = params[idx]
        params[idx] = orig + step
        up = f()
        params[idx] = orig - step
        down = f()
        params[idx] = orig
        grad[idx] = (up - down) / (2 * step)
    return grad


def rel_error(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(a - b) / scale)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def have_mnist():
    d = DATA_DIR / "mnist"
    return any((d / f"train-images-idx3-ubyte{ext}").exists() for ext in ("", ".gz"))
