import math

import numpy as np
import pytest

from ddcoherence.quadrature import NODES, W_GAUSS, W_KRONROD, QuadratureError, integrate_panels


def test_rule_weights():
    assert W_KRONROD.sum() == pytest.approx(2.0, abs=1e-15)
    assert W_GAUSS.sum() == pytest.approx(2.0, abs=1e-15)
    # Kronrod rule integrates x^22 exactly
    assert (W_KRONROD * NODES**22).sum() == pytest.approx(2 / 23, rel=1e-13)


def test_smooth_integrands():
    res = integrate_panels(lambda x: np.exp(-x), [0.0, 1.0, 40.0], rel_tol=1e-12)
    assert res.value == pytest.approx(1.0 - math.exp(-40.0), rel=1e-12)
    assert res.converged


def test_oscillatory_integrand():
    edges = np.arange(0.0, 200 * math.pi + 1, math.pi)
    res = integrate_panels(lambda x: np.sin(x) ** 2 / np.where(x == 0, 1, x * x) + (x == 0), edges,
                           rel_tol=1e-10)
    si_tail = 1.0 / (2 * 200 * math.pi)  # average of sin^2/x^2 beyond the cut
    assert res.value == pytest.approx(math.pi / 2 - si_tail, rel=1e-5)


def test_nonconvergence_reported():
    res = integrate_panels(lambda x: 1 / np.sqrt(np.abs(x - 0.3)), [0.0, 1.0], rel_tol=1e-14, max_iter=3)
    assert not res.converged
    assert res.error > 1e-14 * abs(res.value)


def test_error_carries_value():
    exc = QuadratureError("stalled", 1.5, 0.1)
    assert exc.value == 1.5 and exc.error == 0.1 and "stalled" in str(exc)
