"""Frequency-domain filter function of an instantaneous-pulse sequence.

With the switching function s(t) = +-1 flipping sign at every pulse, the
filter is ``g(w, tau) = |(1/tau) int_0^tau s(t) exp(i w t) dt|^2``, which is
the same as ``|y(w tau)|^2 / (w tau)^2`` for the pulse-sum phasor ``y``.
The normalization makes ``chi = (2/pi) tau^2 int S(w) g(w, tau) dw``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .sequences import PulseSequence

# coarse grid density used by the peak search, points per pi/tau
PEAK_GRID_PER_PI = 64
# below this x the phasor form loses digits to cancellation
_X_SMALL = 2.0


def _segments(seq: PulseSequence) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Signs, lengths and midpoints of the free-evolution segments on [0, 1]."""
    edges = np.concatenate(([0.0], seq.fractions, [1.0]))
    lengths = np.diff(edges)
    mids = 0.5 * (edges[1:] + edges[:-1])
    signs = (-1.0) ** np.arange(len(lengths))
    return signs, lengths, mids


def switching_transform(seq: PulseSequence, x) -> np.ndarray:
    """``F(x) = int_0^1 s(u) exp(i x u) du`` for dimensionless ``x = w tau``.

    Written segment by segment as ``sum_k s_k L_k exp(i x m_k) sinc(x L_k / 2pi)``
    so the ``x -> 0`` limit needs no special casing.
    """
    x = np.asarray(x, dtype=float)
    signs, lengths, mids = _segments(seq)
    xs = x[..., None]
    terms = signs * lengths * np.exp(1j * xs * mids) * np.sinc(xs * lengths / (2 * np.pi))
    return terms.sum(axis=-1)


def pulse_phasor(seq: PulseSequence, x) -> np.ndarray:
    """``y(x) = 1 + (-1)^(N+1) e^{ix} + 2 sum_j (-1)^j e^{i x delta_j}``."""
    x = np.asarray(x, dtype=float)
    n = seq.n_pulses
    y = 1.0 + (-1.0) ** (n + 1) * np.exp(1j * x)
    for j, d in enumerate(seq.fractions, start=1):
        y = y + 2.0 * (-1.0) ** j * np.exp(1j * x * d)
    return y


def _phasor_coeffs(seq: PulseSequence) -> tuple[np.ndarray, np.ndarray]:
    n = seq.n_pulses
    t = np.concatenate(([0.0], seq.fractions, [1.0]))
    c = np.concatenate(([1.0], 2.0 * (-1.0) ** np.arange(1, n + 1), [(-1.0) ** (n + 1)]))
    return t, c


def filter_x(seq: PulseSequence, x) -> np.ndarray:
    """Filter function as a function of ``x = w tau``.

    Uses ``|y|^2 / x^2`` in real arithmetic for ``x >= _X_SMALL`` and the
    cancellation-free segment form below it.
    """
    x = np.asarray(x, dtype=float)
    small = x < _X_SMALL
    if small.all():
        f = switching_transform(seq, x)
        return f.real**2 + f.imag**2
    t, c = _phasor_coeffs(seq)
    xt = x[..., None] * t
    re = np.cos(xt) @ c
    im = np.sin(xt) @ c
    g = (re * re + im * im) / np.where(small, 1.0, x * x)
    if small.any():
        f = switching_transform(seq, x[small])
        g[small] = f.real**2 + f.imag**2
    return g


def filter_g(seq: PulseSequence, omega, tau: float):
    """Evaluate ``g_N(omega, tau)`` (dimensionless, >= 0).

    Parameters
    ----------
    seq : PulseSequence
    omega : float or array_like
        Angular frequency in rad/s, ``omega >= 0``.
    tau : float
        Total free-evolution time in s.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau!r}")
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("omega must be non-negative")
    g = filter_x(seq, omega * tau)
    return float(g) if g.ndim == 0 else g


def dc_limit(seq: PulseSequence) -> float:
    """``g`` at zero frequency: the squared net free-evolution imbalance."""
    signs, lengths, _ = _segments(seq)
    return float(np.dot(signs, lengths)) ** 2


@dataclass(frozen=True)
class FilterSamples:
    omega: np.ndarray
    g: np.ndarray
    tau: float
    sequence: PulseSequence

    @property
    def omega_over_pi_tau(self) -> np.ndarray:
        return self.omega * self.tau / np.pi

    def argmax_omega(self) -> float:
        return float(self.omega[int(np.argmax(self.g))])


def sample_filter(
    seq: PulseSequence, tau: float, omega_min: float, omega_max: float, n_points: int
) -> FilterSamples:
    if not 0 <= omega_min < omega_max:
        raise ValueError(f"invalid frequency range [{omega_min}, {omega_max}]")
    if n_points < 2:
        raise ValueError("need at least 2 grid points")
    omega = np.linspace(omega_min, omega_max, int(n_points))
    return FilterSamples(omega, filter_g(seq, omega, tau), tau, seq)


def peak_x(seq: PulseSequence) -> float:
    """Location of the global filter maximum in units of ``w tau``."""
    n = seq.n_pulses
    if n == 0:
        raise ValueError("a Ramsey sequence peaks at DC; no pass band to locate")
    x_max = 4 * (n + 1) * np.pi
    x = np.linspace(0.0, x_max, int(4 * (n + 1) * PEAK_GRID_PER_PI) + 1)
    g = filter_x(seq, x)
    i = int(np.argmax(g))  # first occurrence, i.e. lowest frequency on ties
    if i == 0 or i == len(x) - 1:
        return float(x[i])
    neg = lambda u: -float(filter_x(seq, u))
    res = optimize.minimize_scalar(
        neg, bracket=(x[i - 1], x[i], x[i + 1]), method="golden", options={"xtol": 1e-12}
    )
    return float(res.x) if -res.fun >= g[i] else float(x[i])


def peak_frequency(seq: PulseSequence, tau: float) -> float:
    """Angular frequency (rad/s) of the filter pass-band maximum."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau!r}")
    return peak_x(seq) / tau


def lag_weights(seq: PulseSequence) -> tuple[np.ndarray, np.ndarray]:
    """Expand ``|y(x)|^2 = sum_l w_l cos(x lag_l)`` over distinct time lags."""
    t, c = _phasor_coeffs(seq)
    lag = np.abs(t[:, None] - t[None, :]).ravel()
    w = (c[:, None] * c[None, :]).ravel()
    key = np.round(lag, 13)
    uniq, inv = np.unique(key, return_inverse=True)
    return uniq, np.bincount(inv, weights=w)


def filter_area(seq: PulseSequence, tau: float, x_cut: float | None = None) -> float:
    """``int_0^inf g(w, tau) dw`` by piecewise quadrature plus an exact tail.

    Beyond ``x_cut`` the integrand is expanded over time lags and each
    ``int cos(a x) / x^2`` term is closed with sine/cosine integrals.
    """
    from .quadrature import integrate_panels

    n = seq.n_pulses
    if x_cut is None:
        x_cut = 200.0 * np.pi * (n + 1)
    edges = np.arange(0.0, x_cut + 0.5 * np.pi, np.pi)
    body = integrate_panels(lambda u: filter_x(seq, u), edges, rel_tol=1e-12).value
    lags, w = lag_weights(seq)
    tail = 0.0
    for a, wl in zip(lags, w):
        if a == 0.0:
            tail += wl / x_cut
        else:
            si, ci = special.sici(a * x_cut)
            # int_X^inf cos(a x)/x^2 dx = cos(aX)/X - a (pi/2 - Si(aX))
            tail += wl * (np.cos(a * x_cut) / x_cut - a * (0.5 * np.pi - si))
    return (body + tail) / tau
