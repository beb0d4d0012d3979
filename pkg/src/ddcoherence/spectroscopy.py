"""Noise spectroscopy by scanning a decoupling filter across frequency.

Each coherence measurement at ``(N, tau)`` is assigned to the probe
frequency ``w_bar = N pi / tau`` and inverted as ``S_hat = pi chi / (2 tau^2 A)``.
With ``normalization="total"`` (default) ``A = pi / tau`` is the whole filter
area, which makes flat spectra come back exactly. With ``"main_lobe"`` ``A``
is the area of the lobe around ``w_bar`` only; that reads a narrow peak at
its true height but overestimates flat spectra by the inverse main-lobe
fraction (about 1.37 for CPMG).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Literal

import numpy as np

from .coherence import ChiEvaluator
from .filter_function import filter_x
from .noise import CompositePsd
from .quadrature import integrate_panels
from .sequences import make

Normalization = Literal["main_lobe", "total"]

# lobe-edge search resolution in units of pi (in w tau)
_EDGE_STEP = 1.0 / 512


class SpectroscopyError(ValueError):
    pass


@dataclass(frozen=True)
class SpectroscopyPoint:
    n_pulses: int
    tau: float
    w_measured: float


@dataclass(frozen=True)
class ReconstructedSpectrum:
    omega_bar: np.ndarray
    s_hat: np.ndarray

    def peak_omega(self) -> float:
        return float(self.omega_bar[int(np.argmax(self.s_hat))])

    def __len__(self) -> int:
        return len(self.omega_bar)


def probe_frequency(n_pulses: int, tau: float) -> float:
    return n_pulses * math.pi / tau


@lru_cache(maxsize=256)
def main_lobe(seq_kind: str, n_pulses: int) -> tuple[float, float, float]:
    """``(x_lo, x_hi, area)`` of the filter lobe containing ``x = N pi``.

    Lobe edges are the nearest local minima of ``g(x)`` on either side; the
    area is in units of ``x``, so ``A_main = area / tau``.
    """
    seq = make(seq_kind, n_pulses)
    xb = n_pulses * math.pi
    step = _EDGE_STEP * math.pi
    span = 4.0 * math.pi
    x = np.arange(max(xb - span, 0.0), xb + span + step, step)
    g = filter_x(seq, x)
    i = int(np.searchsorted(x, xb))
    lo = i
    while lo > 0 and not (g[lo] <= g[lo - 1] and g[lo] <= g[lo + 1]):
        lo -= 1
    hi = i
    while hi < len(x) - 1 and not (g[hi] <= g[hi - 1] and g[hi] <= g[hi + 1]):
        hi += 1
    edges = np.linspace(x[lo], x[hi], 33)
    area = integrate_panels(lambda u: filter_x(seq, u), edges, rel_tol=1e-10).value
    return float(x[lo]), float(x[hi]), float(area)


def _normalizing_area(seq_kind: str, n_pulses: int, tau: float, normalization: Normalization) -> float:
    if normalization == "total":
        return math.pi / tau
    if normalization == "main_lobe":
        return main_lobe(seq_kind, n_pulses)[2] / tau
    raise ValueError(f"unknown normalization {normalization!r}")


def invert_chi(chi_value: float, n_pulses: int, tau: float, seq_kind: str = "cpmg",
               normalization: Normalization = "total") -> tuple[float, float]:
    area = _normalizing_area(seq_kind, n_pulses, tau, normalization)
    return probe_frequency(n_pulses, tau), math.pi * chi_value / (2.0 * tau**2 * area)


def reconstruct_point(pt: SpectroscopyPoint, seq_kind: str = "cpmg",
                      normalization: Normalization = "total") -> tuple[float, float]:
    """``(omega_bar, S_hat)`` for one measured coherence."""
    if not 0 < pt.w_measured <= 1:
        raise SpectroscopyError(f"coherence {pt.w_measured!r} outside (0, 1]; chi undefined")
    if pt.n_pulses < 1 or not pt.tau > 0:
        raise SpectroscopyError("need n_pulses >= 1 and tau > 0")
    return invert_chi(-math.log(pt.w_measured), pt.n_pulses, pt.tau, seq_kind, normalization)


def _merge(pairs: list[tuple[float, float]]) -> ReconstructedSpectrum:
    pairs.sort()
    omega, s = [], []
    for w, v in pairs:
        if omega and math.isclose(w, omega[-1][0], rel_tol=1e-9):
            omega[-1].append(w)
            s[-1].append(v)
        else:
            omega.append([w])
            s.append([v])
    return ReconstructedSpectrum(
        np.array([g[0] for g in omega]), np.array([float(np.mean(v)) for v in s])
    )


def scan(points: Iterable[SpectroscopyPoint], seq_kind: str = "cpmg",
         normalization: Normalization = "total") -> ReconstructedSpectrum:
    """Reconstruct every usable point; duplicate probe frequencies are averaged."""
    points = list(points)
    pairs = [
        reconstruct_point(p, seq_kind, normalization)
        for p in points
        if 0 < p.w_measured <= 1 and p.n_pulses >= 1 and p.tau > 0
    ]
    if not pairs:
        raise SpectroscopyError("no usable spectroscopy points")
    return _merge(pairs)


def forward_points(model: CompositePsd, seq_kind: str, n_pulses: int, tau_grid) -> list[SpectroscopyPoint]:
    """Synthetic measurements ``W = exp(-chi)`` for each ``tau``."""
    seq = make(seq_kind, n_pulses)
    return [
        SpectroscopyPoint(n_pulses, float(t), math.exp(-ChiEvaluator(model, float(t)).chi(seq)))
        for t in tau_grid
    ]


def modulated_spectrum(model: CompositePsd, seq_kind: str, n_pulses: int, tau_grid,
                       normalization: Normalization = "total") -> ReconstructedSpectrum:
    """What a filter-scan reconstruction of ``model`` returns, harmonics included.

    Works from ``chi`` directly, so points with vanishing coherence still count.
    """
    seq = make(seq_kind, n_pulses)
    pairs = []
    for t in np.asarray(tau_grid, dtype=float):
        c = ChiEvaluator(model, float(t)).chi(seq)
        pairs.append(invert_chi(c, n_pulses, float(t), seq_kind, normalization))
    return _merge(pairs)


def tau_grid_for_band(n_pulses: int, omega_min: float, omega_max: float, n_points: int) -> np.ndarray:
    """Increasing tau values whose probe frequencies evenly cover a band."""
    omega = np.linspace(omega_min, omega_max, n_points)
    return np.sort(n_pulses * math.pi / omega)
