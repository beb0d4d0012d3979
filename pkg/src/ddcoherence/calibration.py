"""Calibration of the heuristic noise model against measured coherence times.

Absolute noise levels are not known a priori, so the free amplitudes are
fixed by matching:

* the Ramsey 1/e time (sets the power-law floor amplitude),
* the spin-echo 1/e time (sets the floor's infrared cutoff; the Gaussian
  peak contributes little at the echo time),
* a target depth for the motional collapse in PDD(3) (sets the Gaussian
  peak amplitude at a chosen width).

Each inner solve re-matches both coherence times so the targets hold
exactly for the final model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .coherence import chi
from .noise import (
    DEFAULT_ALPHA,
    DEFAULT_OMEGA_HI,
    DEFAULT_OMEGA_REF,
    DEFAULT_TRAP_FREQ,
    TWO_PI,
    CompositePsd,
    heuristic_model,
)
from .sequences import make_echo, make_pdd, make_ramsey


@dataclass(frozen=True)
class CalibrationTargets:
    ramsey_t2: float = 38e-6
    echo_t2: float = 480e-6
    collapse_depth: float = 0.08
    collapse_n: int = 3


def crossing_time(seq, model: CompositePsd, lo: float = 1e-6, hi: float = 20e-3) -> float:
    """Free-evolution time where ``chi = 1``, assuming a single crossing in [lo, hi]."""
    return brentq(lambda t: chi(seq, t, model) - 1.0, lo, hi, xtol=1e-12, rtol=1e-10)


def collapse_profile(model: CompositePsd, n: int, n_grid: int = 111):
    """PDD(n) coherence around the motional collapse at ``(n + 1) pi / w0``."""
    center = model.terms[1].center
    tc = (n + 1) * math.pi / center
    grid = np.linspace(0.5 * tc, 1.6 * tc, n_grid)
    seq = make_pdd(n)
    w = np.exp(-np.array([chi(seq, t, model) for t in grid]))
    return grid, w


def collapse_depth(model: CompositePsd, n: int) -> tuple[float, float]:
    """``(tau_min, recovery)``: position of the deepest interior local minimum
    of the PDD(n) coherence and how far ``W`` climbs back afterwards."""
    grid, w = collapse_profile(model, n)
    interior = np.nonzero((w[1:-1] < w[:-2]) & (w[1:-1] < w[2:]))[0] + 1
    if len(interior) == 0:
        return float("nan"), 0.0
    i = int(interior[np.argmin(w[interior])])
    return float(grid[i]), float(w[i:].max() - w[i])


def _model(floor_amp, omega_lo, peak_amp, peak_width, alpha, center):
    return heuristic_model(alpha, floor_amp, center, peak_amp, peak_width,
                           DEFAULT_OMEGA_REF, omega_lo, DEFAULT_OMEGA_HI)


def match_floor(peak_amp: float, peak_width: float, targets: CalibrationTargets,
                alpha: float = DEFAULT_ALPHA, center: float = DEFAULT_TRAP_FREQ) -> CompositePsd:
    """Floor amplitude and cutoff reproducing both the Ramsey and echo times."""
    ramsey, echo = make_ramsey(), make_echo()
    tr = targets.ramsey_t2

    def at_cutoff(omega_lo: float) -> CompositePsd:
        # chi is linear in the floor amplitude, so one ratio fixes it
        unit = _model(1.0, omega_lo, 0.0, peak_width, alpha, center)
        peak_only = _model(0.0, omega_lo, peak_amp, peak_width, alpha, center)
        rest = chi(ramsey, tr, peak_only) if peak_amp > 0 else 0.0
        if rest >= 1.0:
            raise ValueError("Gaussian peak alone exceeds the Ramsey target")
        amp = (1.0 - rest) / chi(ramsey, tr, unit)
        return _model(amp, omega_lo, peak_amp, peak_width, alpha, center)

    def mismatch(log_lo: float) -> float:
        return crossing_time(echo, at_cutoff(math.exp(log_lo))) - targets.echo_t2

    log_lo = brentq(mismatch, math.log(TWO_PI * 0.01), math.log(TWO_PI * 100.0), xtol=1e-8)
    return at_cutoff(math.exp(log_lo))


def calibrate(targets: CalibrationTargets = CalibrationTargets(),
              peak_width: float = TWO_PI * 1.0e3,
              alpha: float = DEFAULT_ALPHA,
              center: float = DEFAULT_TRAP_FREQ) -> CompositePsd:
    """Full calibration; returns the heuristic model meeting all targets."""

    def depth_gap(log_area: float) -> float:
        m = match_floor(math.exp(log_area) / peak_width, peak_width, targets, alpha, center)
        return collapse_depth(m, targets.collapse_n)[1] - targets.collapse_depth

    log_area = brentq(depth_gap, math.log(1e6), math.log(5e7), xtol=1e-4)
    return match_floor(math.exp(log_area) / peak_width, peak_width, targets, alpha, center)


def _hz(omega: float) -> str:
    return f"{format(omega / TWO_PI, '.15g')} Hz"


def calibration_document(model: CompositePsd, targets: CalibrationTargets) -> dict:
    """Config-ready noise section plus the targets and the diagnostics it meets."""
    floor, peak = model.terms
    ramsey, echo = make_ramsey(), make_echo()
    t_min, depth = collapse_depth(model, targets.collapse_n)
    return {
        "noise": {
            "model": "heuristic",
            "alpha": float(floor.alpha),
            "center": _hz(peak.center),
            "width": _hz(peak.width),
            "floor_amplitude": f"{float(floor.amplitude)!r} rad/s",
            "peak_amplitude": f"{float(peak.amplitude)!r} rad/s",
            "f_ref": _hz(floor.omega_ref),
            "f_lo": _hz(floor.omega_lo),
            "f_hi": _hz(floor.omega_hi),
        },
        "targets": {
            "ramsey_t2_us": targets.ramsey_t2 * 1e6,
            "echo_t2_us": targets.echo_t2 * 1e6,
            "collapse_depth": targets.collapse_depth,
            "collapse_n": targets.collapse_n,
        },
        "achieved": {
            "ramsey_t2_us": crossing_time(ramsey, model) * 1e6,
            "echo_t2_us": crossing_time(echo, model) * 1e6,
            "collapse_tau_us": t_min * 1e6,
            "collapse_depth": depth,
        },
    }


def main(argv=None) -> int:
    import argparse
    from pathlib import Path

    import yaml

    ap = argparse.ArgumentParser(description="Re-run the noise-model calibration and write the YAML file.")
    ap.add_argument("--output", default=str(Path(__file__).with_name("data") / "calibrated.yaml"))
    args = ap.parse_args(argv)
    targets = CalibrationTargets()
    doc = calibration_document(calibrate(targets), targets)
    head = ("# Calibrated heuristic noise model. Regenerate with\n"
            "#   python3 -m ddcoherence.calibration\n")
    Path(args.output).write_text(head + yaml.safe_dump(doc, sort_keys=False))
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
