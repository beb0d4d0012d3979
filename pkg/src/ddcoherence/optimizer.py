"""Grid search over symmetric five-pulse timings and protocol benchmarks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .coherence import ChiEvaluator, coherence_curve, extract_t2, T2Estimate
from .noise import CompositePsd
from .sequences import SymmetricFiveTiming, make, make_symmetric5


@dataclass
class TimingMap:
    """Coherence ``W`` on a (tau1, tau2) grid; NaN where ``tau0 <= 0``."""

    tau1: np.ndarray
    tau2: np.ndarray
    w: np.ndarray

    def feasible_points(self):
        i, j = np.nonzero(np.isfinite(self.w))
        return self.tau1[i], self.tau2[j], self.w[i, j]


@dataclass(frozen=True)
class OptimumResult:
    timing: SymmetricFiveTiming
    w_best: float
    map: TimingMap


def _grid(step: float) -> np.ndarray:
    n = int(math.floor(0.5 / step + 1e-9))
    return step * np.arange(1, n + 1)


def evaluate_timing(tau: float, model: CompositePsd, timing: SymmetricFiveTiming,
                    evaluator: Optional[ChiEvaluator] = None) -> float:
    ev = evaluator or ChiEvaluator(model, tau)
    return math.exp(-ev.chi(make_symmetric5(timing)))


def grid_search_sym5(
    tau: float,
    model: CompositePsd,
    step: float = 0.002,
    tau1_range: tuple[float, float] = (0.0, 0.5),
    tau2_range: tuple[float, float] = (0.0, 0.5),
) -> OptimumResult:
    """Exhaustive search of ``W(tau)`` over the feasible (tau1, tau2) simplex.

    Grid values are integer multiples of ``step``; the optional ranges
    restrict the scan to a sub-rectangle. Ties go to the lowest tau1, then the
    lowest tau2.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if not 0 < step <= 0.05:
        raise ValueError(f"grid step {step!r} outside (0, 0.05]")
    full = _grid(step)
    t1 = full[(full >= tau1_range[0] - 1e-12) & (full <= tau1_range[1] + 1e-12)]
    t2 = full[(full >= tau2_range[0] - 1e-12) & (full <= tau2_range[1] + 1e-12)]
    ev = ChiEvaluator(model, tau)
    w = np.full((len(t1), len(t2)), np.nan)
    for i, a in enumerate(t1):
        for j, b in enumerate(t2):
            t0 = 0.5 - a - b
            if t0 <= 1e-12:
                break
            w[i, j] = math.exp(-ev.chi(make_symmetric5(SymmetricFiveTiming(t0, a, b))))
    if not np.isfinite(w).any():
        raise ValueError("grid contains no feasible timing")
    # nanargmax returns the first maximum in row-major order: lowest tau1, then tau2
    i, j = np.unravel_index(int(np.nanargmax(w)), w.shape)
    best = SymmetricFiveTiming.from_inner(float(t1[i]), float(t2[j]))
    return OptimumResult(best, float(w[i, j]), TimingMap(t1, t2, w))


@dataclass(frozen=True)
class ProtocolT2:
    protocol: str
    n_pulses: int
    t2: T2Estimate


def compare_protocols(
    n: int,
    tau_grid,
    model: CompositePsd,
    protocols: Iterable[str] = ("pdd", "udd", "cpmg"),
) -> list[ProtocolT2]:
    """T2 of each protocol with ``n`` pulses, read off a coherence curve."""
    rows = []
    for p in protocols:
        if p not in ("pdd", "udd", "cpmg"):
            raise ValueError(f"unknown protocol {p!r}")
        curve = coherence_curve(make(p, n), tau_grid, model)
        rows.append(ProtocolT2(p, n, extract_t2(curve)))
    return rows
