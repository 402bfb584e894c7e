import numpy as np
import pytest
from hypothesis import strategies as st

from toric_legendre.polytope import make_box, make_hirzebruch, make_orthant, make_simplex

BUILTINS = {
    "cp1": make_simplex(1),
    "cp2": make_simplex(2),
    "cp3": make_simplex(3),
    "hirzebruch0": make_hirzebruch(0),
    "hirzebruch1": make_hirzebruch(1),
    "hirzebruch3": make_hirzebruch(3),
    "box2": make_box((1.0, 0.5)),
    "orthant2": make_orthant(2),
}


def random_interior_point(P, rng):
    """Rejection sample from the bounding box (orthant: from (0, 3)^n)."""
    n = P.dim
    lo, hi = (np.zeros(n), np.full(n, 3.0)) if not P.is_bounded() else _bbox(P)
    while True:
        x = rng.uniform(lo, hi)
        if np.all(P.L @ x + P.b > 1e-3):
            return x


def _bbox(P):
    from toric_legendre.polytope import bounding_box
    return bounding_box(P)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


positive = st.floats(0.1, 5.0)


# Acceptance summary ---------------------------------------------------------------

ACCEPTANCE = {}
DETAILS = {}


@pytest.fixture
def record():
    """record(k, text): attach a measured value to acceptance criterion k."""
    def _record(k, text):
        DETAILS.setdefault(k, []).append(text)
    return _record


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for marker in report.keywords:
        if marker.startswith("criterion_"):
            key = int(marker.split("_")[1])
            ACCEPTANCE[key] = ACCEPTANCE.get(key, True) and report.passed


def pytest_configure(config):
    for k in range(1, 11):
        config.addinivalue_line("markers", f"criterion_{k}: acceptance criterion {k}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        detail = "; ".join(DETAILS.get(k, []))
        terminalreporter.write_line(
            f"criterion {k:2d}: {'PASS' if ACCEPTANCE[k] else 'FAIL'}  {detail}".rstrip())
