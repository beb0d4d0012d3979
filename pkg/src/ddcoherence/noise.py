"""One-sided power spectral densities of the longitudinal frequency noise.

Convention: for a PSD ``S(w)`` (units rad/s, argument in rad/s) the noise
autocovariance is ``C(t) = (1/pi) int_0^inf S(w) cos(w t) dw``. White noise
of level ``S0`` then has ``C(t) = S0 delta(t)``, and a Ramsey sequence
accumulates ``chi = 2 S0 tau``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np
from scipy import optimize, special

TWO_PI = 2.0 * np.pi

# defaults of the heuristic trap-noise model
DEFAULT_ALPHA = 1.73
DEFAULT_TRAP_FREQ = TWO_PI * 12.0e3
DEFAULT_OMEGA_REF = TWO_PI * 1.0e3
DEFAULT_OMEGA_LO = TWO_PI * 10.0
DEFAULT_OMEGA_HI = TWO_PI * 1.0e6
# Gaussian terms are treated as zero beyond this many standard deviations
GAUSS_SPAN = 10.0

RB87_MASS = 86.909180527 * 1.66053906660e-27  # kg


@dataclass(frozen=True)
class PowerLawPsd:
    """``S = amplitude * (omega_ref / w)^alpha`` inside ``[omega_lo, omega_hi]``."""

    amplitude: float
    alpha: float = DEFAULT_ALPHA
    omega_ref: float = DEFAULT_OMEGA_REF
    omega_lo: float = DEFAULT_OMEGA_LO
    omega_hi: float = DEFAULT_OMEGA_HI

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not 0 < self.omega_lo < self.omega_hi:
            raise ValueError("need 0 < omega_lo < omega_hi")
        if self.amplitude < 0 or self.omega_ref <= 0:
            raise ValueError("amplitude must be >= 0 and omega_ref > 0")

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        inside = (w >= self.omega_lo) & (w <= self.omega_hi)
        safe = np.where(inside, w, self.omega_ref)
        return np.where(inside, self.amplitude * (self.omega_ref / safe) ** self.alpha, 0.0)

    def support(self) -> tuple[float, float]:
        return self.omega_lo, self.omega_hi

    def breakpoints(self) -> np.ndarray:
        # geometric panels so the power law is smooth on each one
        n = max(int(np.ceil(8 * np.log10(self.omega_hi / self.omega_lo))), 1)
        return np.geomspace(self.omega_lo, self.omega_hi, n + 1)

    def variance(self) -> float:
        """``(1/pi) int S dw`` in closed form."""
        a, lo, hi, r = self.alpha, self.omega_lo, self.omega_hi, self.omega_ref
        if abs(a - 1.0) < 1e-12:
            integral = self.amplitude * r * np.log(hi / lo)
        else:
            integral = self.amplitude * r**a * (hi ** (1 - a) - lo ** (1 - a)) / (1 - a)
        return integral / np.pi

    def scaled(self, k: float) -> PowerLawPsd:
        return replace(self, amplitude=self.amplitude * k)


@dataclass(frozen=True)
class GaussianPsd:
    """Gaussian peak of height ``amplitude`` and standard deviation ``width``."""

    center: float
    width: float
    amplitude: float

    def __post_init__(self):
        if self.center <= 0 or self.width <= 0 or self.amplitude < 0:
            raise ValueError("need center > 0, width > 0, amplitude >= 0")

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        return self.amplitude * np.exp(-0.5 * ((w - self.center) / self.width) ** 2)

    def support(self) -> tuple[float, float]:
        return max(self.center - GAUSS_SPAN * self.width, 0.0), self.center + GAUSS_SPAN * self.width

    def breakpoints(self) -> np.ndarray:
        k = np.arange(-GAUSS_SPAN, GAUSS_SPAN + 0.5, 0.5)
        pts = self.center + k * self.width
        return pts[pts >= 0]

    def variance(self) -> float:
        # one-sided: the part of the Gaussian below zero frequency is dropped
        z = self.center / (np.sqrt(2.0) * self.width)
        integral = self.amplitude * self.width * np.sqrt(np.pi / 2) * (1 + special.erf(z))
        return integral / np.pi

    def scaled(self, k: float) -> GaussianPsd:
        return replace(self, amplitude=self.amplitude * k)


Term = Union[PowerLawPsd, GaussianPsd]


@dataclass(frozen=True)
class CompositePsd:
    terms: tuple[Term, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        total = np.zeros_like(w)
        for t in self.terms:
            total = total + t(w)
        return total

    def active_terms(self) -> tuple[Term, ...]:
        return tuple(t for t in self.terms if t.amplitude > 0)

    @property
    def is_zero(self) -> bool:
        return not self.active_terms()

    def support(self) -> tuple[float, float]:
        terms = self.active_terms()
        if not terms:
            return 0.0, 0.0
        lo = min(t.support()[0] for t in terms)
        hi = max(t.support()[1] for t in terms)
        return lo, hi

    def breakpoints(self) -> np.ndarray:
        pts = [t.breakpoints() for t in self.active_terms()]
        return np.unique(np.concatenate(pts)) if pts else np.empty(0)

    def variance(self) -> float:
        return sum(t.variance() for t in self.terms)

    def scaled(self, k: float) -> CompositePsd:
        return CompositePsd(tuple(t.scaled(k) for t in self.terms))

    def __add__(self, other: CompositePsd) -> CompositePsd:
        return CompositePsd(self.terms + other.terms)


def psd_eval(model: CompositePsd, omega):
    """Total PSD at ``omega`` (rad/s); scalar in, scalar out."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("omega must be non-negative")
    s = model(w)
    return float(s) if s.ndim == 0 else s


def white(level: float, omega_lo: float, omega_hi: float) -> CompositePsd:
    return CompositePsd((PowerLawPsd(level, 0.0, 1.0, omega_lo, omega_hi),))


def heuristic_model(
    alpha: float = DEFAULT_ALPHA,
    floor_amp: float = 1.0,
    trap_freq: float = DEFAULT_TRAP_FREQ,
    peak_amp: float = 0.0,
    peak_width: float = TWO_PI * 1.0e3,
    omega_ref: float = DEFAULT_OMEGA_REF,
    omega_lo: float = DEFAULT_OMEGA_LO,
    omega_hi: float = DEFAULT_OMEGA_HI,
) -> CompositePsd:
    """Power-law floor plus a Gaussian motional peak at the trap frequency."""
    floor = PowerLawPsd(floor_amp, alpha, omega_ref, omega_lo, omega_hi)
    peak = GaussianPsd(trap_freq, peak_width, peak_amp)
    return CompositePsd((floor, peak))


def field_noise_to_psd(b_asd: float, sensitivity: float) -> float:
    """Flat ``S`` (rad/s) equivalent to a magnetic-field noise density.

    ``b_asd`` is a one-sided amplitude density in T/sqrt(Hz), ``sensitivity``
    the splitting shift in Hz/T. The half-splitting noise is
    ``beta_z = pi * sensitivity * B``; its one-sided per-Hz PSD ``P`` maps to
    ``S = P / 2`` under the ``C(t) = (1/pi) int S cos`` convention.
    """
    if b_asd < 0 or sensitivity < 0:
        raise ValueError("inputs must be non-negative")
    return 0.5 * (np.pi * sensitivity * b_asd) ** 2


def axial_trap_frequency(depth_U0: float, rayleigh_zR: float, mass: float = RB87_MASS) -> float:
    """``omega_z = sqrt(2 U0 / (m zR^2))`` in rad/s."""
    if depth_U0 <= 0 or rayleigh_zR <= 0 or mass <= 0:
        raise ValueError("depth, Rayleigh range and mass must all be positive")
    return float(np.sqrt(2.0 * depth_U0 / (mass * rayleigh_zR**2)))


# --- time-domain realizations -------------------------------------------------


@dataclass(frozen=True)
class NoiseModes:
    """Discrete cosine modes approximating a PSD: ``a_k cos(w_k t + phi_k)``."""

    omega: np.ndarray
    d_omega: np.ndarray
    amplitude: np.ndarray

    @property
    def variance(self) -> float:
        return float(0.5 * np.sum(self.amplitude**2))


def _hybrid_bins(lo: float, hi: float, n: int, max_spacing: float | None) -> np.ndarray:
    """Bin edges: geometric near ``lo`` then linear, spacing continuous at the join."""
    if hi / lo < 20 or n < 16:
        n_lin = n
        if max_spacing is not None:
            n_lin = max(n_lin, int(np.ceil((hi - lo) / max_spacing)))
        return np.linspace(lo, hi, n_lin + 1)
    n_log = n // 4
    n_lin = n - n_log

    def mismatch(wx):
        r = (wx / lo) ** (1.0 / n_log)
        return wx * (1 - 1 / r) - (hi - wx) / n_lin

    wx = optimize.brentq(mismatch, lo * (1 + 1e-9), hi * (1 - 1e-9))
    if max_spacing is not None and (hi - wx) / n_lin > max_spacing:
        n_lin = int(np.ceil((hi - wx) / max_spacing))
    return np.concatenate((np.geomspace(lo, wx, n_log + 1), np.linspace(wx, hi, n_lin + 1)[1:]))


def build_modes(
    model: CompositePsd, n_modes: int = 4096, max_spacing: float | None = None
) -> NoiseModes:
    """Discretize each PSD term on its own frequency bins.

    Each bin contributes one cosine of amplitude ``sqrt(2 S(w_k) dw_k / pi)`` so
    that the mode variances sum to ``(1/pi) int S dw`` (midpoint rule).
    ``n_modes`` is split evenly between active terms; ``max_spacing`` raises
    the count where a finer grid is needed.
    """
    if n_modes < 64:
        raise ValueError("need n_modes >= 64")
    terms = model.active_terms()
    omegas, widths = [], []
    for t in terms:
        lo, hi = t.support()
        per = max(n_modes // len(terms), 16)
        if isinstance(t, GaussianPsd):
            sp = t.width / 4 if max_spacing is None else min(max_spacing, t.width / 4)
            edges = np.linspace(lo, hi, max(per, int(np.ceil((hi - lo) / sp))) + 1)
        else:
            edges = _hybrid_bins(lo, hi, per, max_spacing)
        omegas.append(0.5 * (edges[1:] + edges[:-1]))
        widths.append(np.diff(edges))
    if not terms:
        return NoiseModes(np.array([1.0]), np.array([0.0]), np.array([0.0]))
    # each term's modes sample only that term, keeping terms independent
    amps = [np.sqrt(2.0 * t(w) * dw / np.pi) for t, w, dw in zip(terms, omegas, widths)]
    return NoiseModes(np.concatenate(omegas), np.concatenate(widths), np.concatenate(amps))


@dataclass(frozen=True)
class NoiseTrajectory:
    dt: float
    samples: np.ndarray
    seed: int

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(len(self.samples))


def sample_trajectory(
    model: CompositePsd,
    duration: float,
    dt: float,
    n_modes: int = 4096,
    seed: int = 0,
    max_spacing: float | None = None,
) -> NoiseTrajectory:
    """Random realization of ``beta_z(t)`` on ``t = 0, dt, ..., duration``.

    Sum of cosines with i.i.d. uniform phases; deterministic for a given seed.
    """
    if duration <= 0 or dt <= 0:
        raise ValueError("duration and dt must be positive")
    _, hi = model.support()
    if hi > 0 and dt > np.pi / hi:
        raise ValueError(f"dt = {dt:g} s does not resolve omega_hi = {hi:g} rad/s")
    modes = build_modes(model, n_modes, max_spacing)
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, TWO_PI, size=len(modes.omega))
    t = dt * np.arange(int(np.floor(duration / dt + 1e-9)) + 1)
    beta = np.zeros_like(t)
    for start in range(0, len(modes.omega), 512):
        sl = slice(start, start + 512)
        beta += np.cos(np.outer(t, modes.omega[sl]) + phases[sl]) @ modes.amplitude[sl]
    return NoiseTrajectory(dt, beta, seed)
