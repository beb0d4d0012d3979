"""Least-squares fits of decay envelopes and damped Rabi oscillations.

Fits run a Nelder-Mead simplex from several starting points. Linear
parameters are profiled out when generating the starts. One-sigma
uncertainties come from the residual-scaled Gauss-Newton covariance at
the optimum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize, signal


class FitError(ValueError):
    """The data do not meet a fit's preconditions."""


class NoOscillation(FitError):
    """No oscillation stands out of the noise."""


@dataclass
class FitResult:
    model: str
    params: dict[str, float] = field(default_factory=dict)
    errors: dict[str, float] = field(default_factory=dict)
    rss: float = float("nan")
    converged: bool = False
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "converged": self.converged,
            "params": self.params,
            "errors": self.errors,
            "rss": self.rss,
            "message": self.message,
        }


def decay_model(t, y_inf, amp, t_decay, power):
    return y_inf + amp * np.exp(-(np.asarray(t) / t_decay) ** power)


def rabi_model(t, omega, visibility, t_decay):
    t = np.asarray(t)
    return 0.5 * (1.0 + visibility * np.cos(omega * t) * np.exp(-t / t_decay))


def _covariance(fun: Callable[[np.ndarray], np.ndarray], p: np.ndarray, resid: np.ndarray,
                sigma: Optional[np.ndarray]) -> np.ndarray:
    """Gauss-Newton covariance with central-difference Jacobian."""
    n, k = len(resid), len(p)
    jac = np.empty((n, k))
    for i in range(k):
        h = 1e-6 * max(abs(p[i]), 1e-8)
        dp = np.zeros(k)
        dp[i] = h
        jac[:, i] = (fun(p + dp) - fun(p - dp)) / (2 * h)
    if sigma is not None:
        jac = jac / sigma[:, None]
    dof = max(n - k, 1)
    s2 = float(resid @ resid) / dof
    if sigma is not None:
        # absolute weights: do not rescale by the reduced chi-square
        s2 = 1.0
    return s2 * np.linalg.pinv(jac.T @ jac)


def _nelder_mead(obj, x0, max_iter):
    opts = {"xatol": 1e-11, "fatol": 1e-14, "maxiter": max_iter, "maxfev": 2 * max_iter}
    res = optimize.minimize(obj, x0, method="Nelder-Mead", options=opts)
    # a restart from the optimum shakes off a collapsed simplex
    res2 = optimize.minimize(obj, res.x, method="Nelder-Mead", options=opts)
    best = res2 if res2.fun <= res.fun else res
    best.success = bool(res.success and res2.success)
    return best


def _linear_solve(basis: np.ndarray, y: np.ndarray, wts: np.ndarray) -> tuple[np.ndarray, float]:
    coef, *_ = np.linalg.lstsq(basis * wts[:, None], y * wts, rcond=None)
    r = (basis @ coef - y) * wts
    return coef, float(r @ r)


SHAPES = {"exponential": 1.0, "gaussian": 2.0, "stretched": None}


def fit_decay(t, y, shape: str = "exponential", sigma=None, max_iter: int = 4000) -> FitResult:
    """Fit ``y = y_inf + amp * exp(-(t / T)^p)``.

    ``shape`` fixes ``p`` to 1 (``exponential``) or 2 (``gaussian``), or
    leaves it free (``stretched``). The simplex searches ``log T`` (and
    ``log p``); ``y_inf`` and ``amp`` are solved exactly at every step.
    """
    if shape not in SHAPES:
        raise ValueError(f"unknown decay shape {shape!r}")
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    sig = None if sigma is None else np.asarray(sigma, dtype=float)
    p_fixed = SHAPES[shape]
    n_par = 3 if p_fixed is not None else 4
    if len(t) < 3 * n_par:
        raise FitError(f"need at least {3 * n_par} points for a {shape} fit")
    t_scale = float(np.max(np.abs(t))) or 1.0
    ts = t / t_scale
    wts = np.ones_like(y) if sig is None else 1.0 / sig

    def unpack(x):
        return math.exp(x[0]), (p_fixed if p_fixed else math.exp(x[1]))

    def profile(x):
        T, p = unpack(x)
        basis = np.column_stack((np.ones_like(ts), np.exp(-(ts / T) ** p)))
        return _linear_solve(basis, y, wts)

    def obj(x):
        return profile(x)[1]

    # coarse grid over the nonlinear parameters seeds the simplex
    starts = [[math.log(T)] + ([] if p_fixed else [math.log(p)])
              for T in np.geomspace(0.02, 3.0, 16)
              for p in ([p_fixed] if p_fixed else [0.7, 1.0, 1.5, 2.0])]
    starts.sort(key=lambda x: obj(x))
    best = None
    for x0 in starts[:3]:
        res = _nelder_mead(obj, np.array(x0), max_iter)
        if best is None or res.fun < best.fun:
            best = res
    T, p = unpack(best.x)
    (yi, a), _ = profile(best.x)
    rss = float(np.sum((decay_model(ts, yi, a, T, p) - y) ** 2))
    result = FitResult(model=shape, rss=rss)
    if not best.success:
        result.message = "simplex did not converge"
        return result

    names = ["y_inf", "amp", "t_decay"] + ([] if p_fixed else ["power"])
    values = np.array([yi, a, T * t_scale] + ([] if p_fixed else [p]))

    def physical(v):
        return (decay_model(t, v[0], v[1], v[2], p_fixed if p_fixed else v[3]) - y) * wts

    cov = _covariance(physical, values, physical(values), sig)
    errs = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    scale = float(np.max(np.abs(y))) or 1.0
    if (not np.all(np.isfinite(errs)) or abs(a) <= max(3.0 * errs[1], 1e-9 * scale)
            or errs[2] >= values[2]):
        result.message = "decay amplitude consistent with zero; decay time unidentifiable"
        return result
    result.params = dict(zip(names, map(float, values)))
    result.errors = dict(zip(names, map(float, errs)))
    result.converged = True
    return result


# false-alarm probability below which a periodogram line counts as an oscillation
FALSE_ALARM = 1e-3


def _initial_frequency(t: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Angular frequency of the strongest periodogram line and its false-alarm probability.

    For white noise the variance-normalized power at one frequency is
    exponentially distributed; about ``len(t)`` frequencies are independent.
    """
    span = t.max() - t.min()
    dt = np.min(np.diff(np.sort(t)))
    w_max = math.pi / dt
    w = np.linspace(2 * math.pi / span * 0.25, w_max, 8 * len(t) + 64)
    yc = y - y.mean()
    power = signal.lombscargle(t, yc, w, precenter=False)
    i = int(np.argmax(power))
    z = float(power[i] / yc.var())
    fap = -math.expm1(len(t) * math.log1p(-math.exp(-z)))
    return float(w[i]), fap


def fit_rabi(t, p, sigma=None, max_iter: int = 4000) -> FitResult:
    """Fit ``p = (1 + V cos(Omega t) exp(-t / T)) / 2``.

    Raises
    ------
    FitError
        If there are too few points, the record spans under 1.5 periods,
        or no oscillation stands out of the noise.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(p, dtype=float)
    if len(t) < 12:
        raise FitError("need at least 12 points")
    if np.ptp(y) == 0:
        raise NoOscillation("no detectable oscillation: data are constant")
    w0, fap = _initial_frequency(t, y)
    if fap > FALSE_ALARM:
        raise NoOscillation(f"no detectable oscillation: false-alarm probability {fap:.3g}")
    span = t.max() - t.min()
    if w0 * span < 1.5 * 2 * math.pi:
        raise FitError("record spans fewer than 1.5 oscillation periods")
    t_scale = span
    ts = t / t_scale
    wts = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)

    # simplex over x = (omega * t_scale, decay rate * t_scale); V is solved exactly.
    # The rate enters as |x[1]| so a decay-free record is reachable.
    def profile(x):
        env = np.cos(x[0] * ts) * np.exp(-abs(x[1]) * ts)
        v = float(np.dot(env * wts, (2.0 * y - 1.0) * wts) / max(np.dot(env * wts, env * wts), 1e-300))
        r = (0.5 * (1.0 + v * env) - y) * wts
        return v, float(r @ r)

    def obj(x):
        return profile(x)[1]

    best = None
    dw = 2 * math.pi / span
    for wi in (w0 - 0.25 * dw, w0, w0 + 0.25 * dw):
        for rate in (0.0, 1.0):
            res = _nelder_mead(obj, np.array([wi * t_scale, rate]), max_iter)
            if best is None or res.fun < best.fun:
                best = res
    vis, _ = profile(best.x)
    omega, rate = best.x[0] / t_scale, abs(best.x[1]) / t_scale
    if vis < 0:
        # cos(Omega t) with V < 0 would be a half-period shift; the model keeps V >= 0
        raise NoOscillation("no detectable oscillation: fitted visibility is negative")
    t_decay = 1.0 / rate if rate > 0 else np.inf
    result = FitResult(model="rabi", rss=float(np.sum((rabi_model(t, omega, vis, t_decay) - y) ** 2)))
    if not best.success:
        result.message = "simplex did not converge"
        return result

    def physical(v):
        return (0.5 * (1.0 + v[1] * np.cos(v[0] * t) * np.exp(-v[2] * t)) - y) * wts

    vals = np.array([omega, vis, rate])
    cov = _covariance(physical, vals, physical(vals), None if sigma is None else np.asarray(sigma))
    errs = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    if vis <= 3.0 * errs[1]:
        raise NoOscillation("no detectable oscillation: visibility within noise")
    result.params = {"omega": float(omega), "visibility": float(vis), "decay_rate": float(rate),
                     "t_decay": float(t_decay)}
    result.errors = {"omega": float(errs[0]), "visibility": float(errs[1]), "decay_rate": float(errs[2])}
    result.converged = True
    result.message = f"periodogram false-alarm probability {fap:.3g}"
    return result
