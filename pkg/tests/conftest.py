import numpy as np
import pytest

from higgslab.geometry import Domain

ACCEPTANCE = {}


def record(criterion, ok, detail=""):
    """Store a PASS/FAIL line for the acceptance summary."""
    ACCEPTANCE[criterion] = (bool(ok), detail)


def herm_exp(S):
    w, V = np.linalg.eigh(S)
    return (V * np.exp(w)[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def smooth_metric(dom, amp=1.0, trace_free=False):
    """Smooth rank-2 metric ``exp(S)`` with periodic Hermitian ``S``."""
    L = dom.period_x if dom.periodic else 2.0 * dom.radius
    x, y = dom.x[:, None] / L, dom.y[None, :] / L
    a = 0.3 * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y)
    b = 0.2 * np.cos(2 * np.pi * (x + y))
    c = 0.25 * np.sin(2 * np.pi * (x - 2 * y)) + 0.1j * np.cos(2 * np.pi * x)
    S = np.zeros(dom.shape + (2, 2), complex)
    S[..., 0, 0] = a
    S[..., 1, 1] = -a if trace_free else b
    S[..., 0, 1] = c
    S[..., 1, 0] = np.conj(c)
    return herm_exp(amp * S)


@pytest.fixture
def torus32():
    return Domain.torus(32)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
