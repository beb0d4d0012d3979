"""State detection by thresholding photon-count histograms.

A shot with more than ``n_th`` counts is assigned "bright" (spin up). The
assignment errors are ``xi_up = P(n <= n_th | up)`` and
``xi_down = P(n > n_th | down)``, and the fidelity is
``F = 1 - (xi_up + xi_down) / 2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class DetectionHistogram:
    """Shot counts indexed by the number of detected photons."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 1 or len(c) == 0:
            raise ValueError("histogram must be a non-empty 1-D array")
        if np.any(c < 0):
            raise ValueError("histogram counts must be non-negative")
        if c.sum() <= 0:
            raise ValueError("histogram is empty")
        object.__setattr__(self, "counts", c)

    @classmethod
    def from_mapping(cls, counts: Mapping[int, float]) -> "DetectionHistogram":
        if not counts:
            raise ValueError("histogram is empty")
        if min(counts) < 0:
            raise ValueError("photon numbers must be non-negative")
        arr = np.zeros(max(counts) + 1)
        for n, c in counts.items():
            arr[int(n)] += c
        return cls(arr)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def n_max(self) -> int:
        return len(self.counts) - 1

    def cdf(self, n_th: int) -> float:
        """Fraction of shots with at most ``n_th`` counts."""
        if n_th < 0:
            return 0.0
        return float(self.counts[: n_th + 1].sum()) / self.total


def assignment_errors(up: DetectionHistogram, down: DetectionHistogram, n_th: int) -> tuple[float, float]:
    """``(xi_up, xi_down)`` for the threshold ``n_th``."""
    if n_th < 0:
        raise ValueError("threshold must be non-negative")
    return up.cdf(n_th), 1.0 - down.cdf(n_th)


def fidelity(up: DetectionHistogram, down: DetectionHistogram, n_th: int) -> float:
    xi_up, xi_down = assignment_errors(up, down, n_th)
    return 1.0 - 0.5 * (xi_up + xi_down)


@dataclass(frozen=True)
class ThresholdResult:
    n_th: int
    xi_up: float
    xi_down: float
    fidelity: float

    def to_dict(self) -> dict:
        return {"n_th": self.n_th, "xi_up": self.xi_up, "xi_down": self.xi_down,
                "fidelity": self.fidelity}


def optimal_threshold(up: DetectionHistogram, down: DetectionHistogram) -> ThresholdResult:
    """Threshold maximizing the fidelity; ties go to the smaller threshold."""
    n_top = max(up.n_max, down.n_max)
    cu = np.zeros(n_top + 1)
    cd = np.zeros(n_top + 1)
    cu[: up.n_max + 1] = np.cumsum(up.counts) / up.total
    cu[up.n_max + 1:] = 1.0
    cd[: down.n_max + 1] = np.cumsum(down.counts) / down.total
    cd[down.n_max + 1:] = 1.0
    err = cu + (1.0 - cd)
    i = int(np.argmin(err))  # first occurrence
    return ThresholdResult(i, float(cu[i]), float(1.0 - cd[i]), float(1.0 - 0.5 * err[i]))


def poisson_histograms(mean_up: float, mean_down: float, shots: int,
                       seed: Optional[int] = None, n_max: Optional[int] = None
                       ) -> tuple[DetectionHistogram, DetectionHistogram]:
    """Bright/dark histograms of Poisson photon counts.

    With ``seed=None`` the expected counts ``shots * pmf`` are returned;
    otherwise ``shots`` draws per state are binned.
    """
    if mean_up <= 0 or mean_down < 0 or shots < 1:
        raise ValueError("need mean_up > 0, mean_down >= 0 and shots >= 1")
    if n_max is None:
        n_max = int(stats.poisson.ppf(1 - 1e-12, mean_up)) + 1
    n = np.arange(n_max + 1)
    if seed is None:
        return (DetectionHistogram(shots * stats.poisson.pmf(n, mean_up)),
                DetectionHistogram(shots * stats.poisson.pmf(n, mean_down)))
    rng = np.random.default_rng(seed)
    draw_up = np.minimum(rng.poisson(mean_up, shots), n_max)
    draw_down = np.minimum(rng.poisson(mean_down, shots), n_max)
    return (DetectionHistogram(np.bincount(draw_up, minlength=n_max + 1).astype(float)),
            DetectionHistogram(np.bincount(draw_down, minlength=n_max + 1).astype(float)))
