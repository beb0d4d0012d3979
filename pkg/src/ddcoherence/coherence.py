"""Coherence integral, coherence curves, T2 extraction and the Monte-Carlo oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .filter_function import filter_x
from .noise import CompositePsd, build_modes
from .quadrature import NODES, W_GAUSS, W_KRONROD, QuadratureError, integrate_panels
from .sequences import PulseSequence

INV_E = math.exp(-1.0)
# chi below this is indistinguishable from full coherence
CHI_ABS_TOL = 1e-13
# bound on nodes x segments held in memory at once
_CHUNK_ELEMS = 1_000_000


@dataclass(frozen=True)
class T1Envelope:
    t1: float = 1.0
    enabled: bool = False

    def __post_init__(self):
        if self.enabled and not self.t1 > 0:
            raise ValueError("t1 must be positive when the envelope is enabled")

    def factor(self, tau):
        if not self.enabled:
            return np.ones_like(np.asarray(tau, dtype=float))
        return np.exp(-np.asarray(tau, dtype=float) / (2.0 * self.t1))


def _panel_edges(model: CompositePsd, tau: float) -> np.ndarray:
    lo, hi = model.support()
    step = np.pi / tau
    k0 = math.ceil(lo / step)
    k1 = math.floor(hi / step)
    zeros = step * np.arange(k0, k1 + 1)
    edges = np.concatenate(([lo, hi], zeros, model.breakpoints()))
    for t in model.active_terms():
        edges = np.concatenate((edges, t.support()))
    edges = edges[(edges >= lo) & (edges <= hi)]
    return np.unique(edges)


class ChiEvaluator:
    """Quadrature rule for ``chi`` at fixed ``(model, tau)``, reusable across sequences.

    Panels are bounded by multiples of ``pi/tau`` and by the PSD's own
    breakpoints, so within a panel every filter term completes at most half an
    oscillation. Each evaluation reports the Kronrod/Gauss discrepancy; when
    it exceeds the tolerance, :func:`chi` falls back to adaptive refinement.
    """

    def __init__(self, model: CompositePsd, tau: float):
        if not tau > 0:
            raise ValueError(f"tau must be positive, got {tau!r}")
        self.model = model
        self.tau = tau
        self.zero = model.is_zero
        if self.zero:
            return
        self.edges = _panel_edges(model, tau)
        a, b = self.edges[:-1], self.edges[1:]
        half = 0.5 * (b - a)
        omega = 0.5 * (a + b)[:, None] + half[:, None] * NODES[None, :]
        # (2/pi) tau^2 S(w) folded into the weights
        s = (2.0 / np.pi) * tau**2 * model(omega)
        self._x = omega * tau
        self._wk = half[:, None] * W_KRONROD[None, :] * s
        self._wg = half[:, None] * W_GAUSS[None, :] * s

    def integrand(self, seq: PulseSequence):
        tau = self.tau
        model = self.model
        return lambda w: (2.0 / np.pi) * tau**2 * model(w) * filter_x(seq, w * tau)

    def evaluate(self, seq: PulseSequence) -> tuple[float, float]:
        """Return ``(chi, error_estimate)`` on the fixed panel set."""
        if self.zero:
            return 0.0, 0.0
        rows = max(1, _CHUNK_ELEMS // (15 * (seq.n_pulses + 1)))
        val = err = 0.0
        for start in range(0, len(self._x), rows):
            sl = slice(start, start + rows)
            g = filter_x(seq, self._x[sl])
            k = np.sum(self._wk[sl] * g, axis=1)
            gg = np.sum(self._wg[sl] * g, axis=1)
            val += k.sum()
            err += np.abs(k - gg).sum()
        return float(val), float(err)

    def chi(self, seq: PulseSequence, rel_tol: float = 1e-6) -> float:
        val, err = self.evaluate(seq)
        if err <= max(rel_tol * abs(val), CHI_ABS_TOL):
            return max(val, 0.0)
        res = integrate_panels(self.integrand(seq), self.edges, rel_tol=rel_tol, abs_tol=CHI_ABS_TOL)
        if not res.converged:
            raise QuadratureError("chi quadrature did not converge", res.value, res.error)
        return max(res.value, 0.0)


def chi(seq: PulseSequence, tau: float, model: CompositePsd, rel_tol: float = 1e-6) -> float:
    """Coherence integral ``(2/pi) tau^2 int_0^inf S(w) g(w, tau) dw``.

    Raises
    ------
    QuadratureError
        If the adaptive refinement cannot meet ``rel_tol``; carries the
        achieved value and error estimate.
    """
    return ChiEvaluator(model, tau).chi(seq, rel_tol)


def coherence_w(
    seq: PulseSequence,
    tau: float,
    model: CompositePsd,
    t1env: Optional[T1Envelope] = None,
    rel_tol: float = 1e-6,
) -> float:
    """``W = exp(-chi)``, times ``exp(-tau / 2 T1)`` when the envelope is on."""
    w = math.exp(-chi(seq, tau, model, rel_tol))
    if t1env is not None:
        w *= float(t1env.factor(tau))
    return w


def population(w, visibility: float = 1.0):
    """F=2 population after the closing pi/2 pulse: ``(1 + V W) / 2``."""
    if not 0 <= visibility <= 1:
        raise ValueError("visibility must lie in [0, 1]")
    return 0.5 * (1.0 + visibility * np.asarray(w, dtype=float))


@dataclass
class CoherenceCurve:
    tau: np.ndarray
    w: np.ndarray
    p2: np.ndarray
    sequence: str = ""
    noise: str = ""
    p2_sampled: Optional[np.ndarray] = None
    stderr: Optional[np.ndarray] = None
    n_rep: Optional[int] = None
    meta: dict = field(default_factory=dict)


def coherence_curve(
    seq: PulseSequence,
    tau_grid,
    model: CompositePsd,
    t1env: Optional[T1Envelope] = None,
    visibility: float = 1.0,
    n_rep: Optional[int] = None,
    seed: Optional[int] = None,
    rel_tol: float = 1e-6,
) -> CoherenceCurve:
    """Coherence and population on a grid of free-evolution times.

    With ``n_rep`` set, each point is also binomially sampled from ``n_rep``
    repetitions (``seed`` is then mandatory).
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    if tau_grid.ndim != 1 or len(tau_grid) < 1 or np.any(np.diff(tau_grid) <= 0):
        raise ValueError("tau grid must be strictly increasing")
    chis = np.array([chi(seq, t, model, rel_tol) for t in tau_grid])
    w = np.exp(-chis)
    if t1env is not None:
        w = w * t1env.factor(tau_grid)
    p2 = population(w, visibility)
    curve = CoherenceCurve(tau_grid, w, p2, sequence=f"{seq.kind}({seq.n_pulses})")
    if n_rep is not None:
        if seed is None:
            raise ValueError("binomial sampling needs an explicit seed")
        rng = np.random.default_rng(seed)
        k = rng.binomial(int(n_rep), np.clip(p2, 0.0, 1.0))
        ps = k / n_rep
        curve.p2_sampled = ps
        curve.stderr = np.sqrt(ps * (1 - ps) / n_rep)
        curve.n_rep = int(n_rep)
    return curve


@dataclass(frozen=True)
class T2Estimate:
    """Outcome of a 1/e crossing search; ``t2`` is None when not reached."""

    t2: Optional[float]
    final_w: float

    @property
    def reached(self) -> bool:
        return self.t2 is not None


def extract_t2(curve: CoherenceCurve | tuple) -> T2Estimate:
    """First downward crossing of ``W = 1/e``, linearly interpolated."""
    if isinstance(curve, CoherenceCurve):
        tau, w = curve.tau, curve.w
    else:
        tau, w = (np.asarray(v, dtype=float) for v in curve)
    below = np.nonzero(w <= INV_E)[0]
    if len(below) == 0:
        return T2Estimate(None, float(w[-1]))
    i = int(below[0])
    if i == 0:
        return T2Estimate(float(tau[0]), float(w[-1]))
    t0, t1 = tau[i - 1], tau[i]
    w0, w1 = w[i - 1], w[i]
    return T2Estimate(float(t0 + (w0 - INV_E) * (t1 - t0) / (w0 - w1)), float(w[-1]))


def t2_time(
    seq: PulseSequence,
    model: CompositePsd,
    tau_max: float,
    n_grid: int = 200,
    tau_min: float | None = None,
    refine: bool = True,
) -> T2Estimate:
    """T2 from a log-spaced curve, optionally polished by root finding on chi = 1."""
    from scipy.optimize import brentq

    tau_min = tau_max / 1e3 if tau_min is None else tau_min
    grid = np.geomspace(tau_min, tau_max, n_grid)
    est = extract_t2(coherence_curve(seq, grid, model))
    if not est.reached or not refine or est.t2 <= grid[0]:
        return est
    i = int(np.searchsorted(grid, est.t2))
    lo, hi = grid[max(i - 1, 0)], grid[min(i, len(grid) - 1)]
    if lo == hi:
        return est
    root = brentq(lambda t: chi(seq, t, model) - 1.0, lo, hi, xtol=1e-12, rtol=1e-10)
    return T2Estimate(float(root), est.final_w)


# --- Monte-Carlo oracle ------------------------------------------------------------


def _segment_integrals(seq: PulseSequence, tau: float, omega: np.ndarray, dt: float):
    """Trapezoid rule for ``int_0^tau s(t) cos(w t) dt`` and the sine partner.

    Each free-evolution segment gets its own uniform sub-grid so the sign
    flips of ``s(t)`` fall exactly on grid points.
    """
    edges = tau * np.concatenate(([0.0], seq.fractions, [1.0]))
    c = np.zeros(len(omega))
    s = np.zeros(len(omega))
    for k, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        n = max(int(math.ceil((b - a) / dt)), 1)
        t = np.linspace(a, b, n + 1)
        wt = np.ones(n + 1) * (b - a) / n
        wt[0] *= 0.5
        wt[-1] *= 0.5
        sign = -1.0 if k % 2 else 1.0
        for start in range(0, len(omega), 256):
            sl = slice(start, start + 256)
            arg = np.outer(omega[sl], t)
            c[sl] += sign * (np.cos(arg) @ wt)
            s[sl] += sign * (np.sin(arg) @ wt)
    return c, s


def mode_spacing(tau: float) -> float:
    """Largest mode spacing that still resolves filter structure at ``tau``."""
    return np.pi / (4.0 * tau)


def mc_phases(
    seq: PulseSequence,
    tau: float,
    model: CompositePsd,
    n_traj: int,
    n_modes: int = 4096,
    seed: int = 0,
    dt: float | None = None,
) -> np.ndarray:
    """Accumulated relative phase ``2 int_0^tau s(t) beta_z(t) dt`` per trajectory.

    Trajectory ``i`` uses the same mode set and the ``i``-th row of phase
    draws, so trajectory 0 coincides with ``sample_trajectory(seed=seed)``
    built with ``max_spacing=mode_spacing(tau)``.
    """
    _, hi = model.support()
    if dt is None:
        dt = np.pi / (10.0 * hi) if hi > 0 else tau
    elif hi > 0 and dt > np.pi / (10.0 * hi):
        raise ValueError(f"dt = {dt:g} s too coarse for omega_hi = {hi:g} rad/s")
    if model.is_zero:
        return np.zeros(n_traj)
    modes = build_modes(model, n_modes, max_spacing=mode_spacing(tau))
    ck, sk = _segment_integrals(seq, tau, modes.omega, dt)
    ac = 2.0 * modes.amplitude * ck
    as_ = 2.0 * modes.amplitude * sk
    rng = np.random.default_rng(seed)
    phi = np.empty(n_traj)
    chunk = max(1, 2_000_000 // len(modes.omega))
    for start in range(0, n_traj, chunk):
        m = min(chunk, n_traj - start)
        theta = rng.uniform(0.0, 2.0 * np.pi, size=(m, len(modes.omega)))
        # cos(w t + th) = cos(w t) cos th - sin(w t) sin th
        phi[start:start + m] = np.cos(theta) @ ac - np.sin(theta) @ as_
    return phi


def mc_coherence(
    seq: PulseSequence,
    tau: float,
    model: CompositePsd,
    n_traj: int = 10_000,
    n_modes: int = 4096,
    seed: int = 0,
    dt: float | None = None,
) -> tuple[float, float]:
    """Direct-simulation estimate of ``W = |<exp(i phi)>|`` and its standard error."""
    if n_traj < 100:
        raise ValueError("need at least 100 trajectories")
    phi = mc_phases(seq, tau, model, n_traj, n_modes, seed, dt)
    z = np.exp(1j * phi)
    m = z.mean()
    w = abs(m)
    if w == 0:
        return 0.0, float(np.std(z.real) / math.sqrt(n_traj))
    proj = (z * np.conj(m) / w).real
    return float(w), float(proj.std(ddof=1) / math.sqrt(n_traj))
