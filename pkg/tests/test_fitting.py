import math

import numpy as np
import pytest

from ddcoherence.fitting import FitError, NoOscillation, decay_model, fit_decay, fit_rabi, rabi_model

OMEGA = 2 * math.pi * 76.78e3
VIS = 0.837


def _rabi_data(seed, vis=VIS, shots=300, n=601, t_decay=200e-6):
    rng = np.random.default_rng(seed)
    t = np.linspace(0, 60e-6, n)
    p = rabi_model(t, OMEGA, vis, t_decay)
    return t, rng.binomial(shots, p) / shots


@pytest.mark.parametrize("shape,T", [("exponential", 38e-6), ("gaussian", 480e-6)])
def test_decay_recovery(shape, T):
    rng = np.random.default_rng(1)
    t = np.linspace(0, 3 * T, 80)
    y = decay_model(t, 0.5, 0.42, T, 1.0 if shape == "exponential" else 2.0)
    res = fit_decay(t, y + 0.01 * rng.standard_normal(len(t)), shape)
    assert res.converged
    assert res.params["t_decay"] == pytest.approx(T, rel=0.05)
    assert res.errors["t_decay"] > 0


def test_stretched_recovery():
    t = np.linspace(0, 4e-3, 100)
    y = decay_model(t, 0.5, 0.4, 1.2e-3, 1.6)
    res = fit_decay(t, y, "stretched")
    assert res.converged
    assert res.params["power"] == pytest.approx(1.6, rel=1e-5)
    assert res.params["t_decay"] == pytest.approx(1.2e-3, rel=1e-5)
    assert res.rss < 1e-10


def test_decay_time_unit_invariance():
    rng = np.random.default_rng(3)
    t = np.linspace(0, 2e-3, 60)
    y = decay_model(t, 0.5, 0.4, 7e-4, 1.0) + 0.01 * rng.standard_normal(60)
    a = fit_decay(t, y)
    b = fit_decay(t * 1e6, y)
    assert b.params["t_decay"] == pytest.approx(a.params["t_decay"] * 1e6, rel=1e-5)


def test_decay_minimizes_rss():
    rng = np.random.default_rng(4)
    t = np.linspace(0, 2e-3, 60)
    truth = (0.5, 0.4, 7e-4, 2.0)
    y = decay_model(t, *truth) + 0.01 * rng.standard_normal(60)
    res = fit_decay(t, y, "gaussian")
    assert res.rss <= np.sum((decay_model(t, *truth) - y) ** 2)


def test_decay_unidentifiable():
    t = np.linspace(0, 1, 30)
    res = fit_decay(t, np.full(30, 0.7))
    assert not res.converged
    assert "unidentifiable" in res.message
    with pytest.raises(FitError):
        fit_decay(t[:8], np.ones(8))
    with pytest.raises(ValueError):
        fit_decay(t, np.ones(30), "lorentzian")


def test_rabi_recovery():
    res = fit_rabi(*_rabi_data(7))
    assert res.converged
    assert res.params["omega"] == pytest.approx(OMEGA, rel=0.005)
    assert res.params["visibility"] == pytest.approx(VIS, rel=0.02)
    assert res.errors["visibility"] < 0.02


def test_rabi_noiseless_exact():
    t = np.linspace(0, 60e-6, 301)
    p = rabi_model(t, OMEGA, VIS, 150e-6)
    res = fit_rabi(t, p)
    assert res.rss < 1e-10
    assert res.params["t_decay"] == pytest.approx(150e-6, rel=1e-4)


def test_rabi_minimizes_rss():
    t, p = _rabi_data(11)
    res = fit_rabi(t, p)
    assert res.rss <= np.sum((rabi_model(t, OMEGA, VIS, 200e-6) - p) ** 2)


def test_rabi_without_oscillation():
    with pytest.raises(NoOscillation):
        fit_rabi(*_rabi_data(2, vis=0.0))
    with pytest.raises(NoOscillation):
        fit_rabi(np.linspace(0, 1e-4, 50), np.full(50, 0.5))


def test_rabi_preconditions():
    t = np.linspace(0, 60e-6, 10)
    with pytest.raises(FitError):
        fit_rabi(t, rabi_model(t, OMEGA, VIS, 1e-3))
    # under one period in the record
    t = np.linspace(0, 10e-6, 200)
    with pytest.raises(FitError):
        fit_rabi(t, rabi_model(t, OMEGA, VIS, 1e-3))
