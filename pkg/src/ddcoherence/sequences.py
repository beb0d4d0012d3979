"""Pulse-timing patterns for dynamical decoupling.

Every sequence is stored as the normalized positions of instantaneous
pi-pulses inside a free-evolution window of unit length. The physical
pulse time of pulse ``j`` is ``fractions[j] * tau``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

_SUM_TOL = 1e-12


class SequenceError(ValueError):
    """Raised for invalid pulse timings."""


@dataclass(frozen=True)
class PulseSequence:
    fractions: tuple[float, ...]
    kind: str = "custom"

    def __post_init__(self) -> None:
        fr = tuple(float(x) for x in self.fractions)
        object.__setattr__(self, "fractions", fr)
        for x in fr:
            if not 0.0 < x < 1.0:
                raise SequenceError(f"pulse fraction {x!r} outside (0, 1)")
        if any(b <= a for a, b in zip(fr, fr[1:])):
            raise SequenceError("pulse fractions must be strictly increasing")

    @property
    def n_pulses(self) -> int:
        return len(self.fractions)

    def reversed(self) -> PulseSequence:
        """Mirror image in time, ``delta_j -> 1 - delta_{n+1-j}``."""
        return PulseSequence(tuple(1.0 - x for x in reversed(self.fractions)), self.kind)

    def to_record(self) -> dict[str, Any]:
        return {"type": self.kind, "n": self.n_pulses, "fractions": list(self.fractions)}

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> PulseSequence:
        kind = rec.get("type", "custom")
        if kind in CONSTRUCTORS or kind in ("ramsey", "echo"):
            seq = make(kind, int(rec.get("n", 0 if kind == "ramsey" else 1)))
            if "fractions" in rec and not np.allclose(rec["fractions"], seq.fractions, atol=1e-12):
                raise SequenceError(f"fractions do not match a {kind} sequence")
            return seq
        return cls(tuple(rec["fractions"]), kind)


@dataclass(frozen=True)
class SymmetricFiveTiming:
    """Interval fractions of a mirror-symmetric five-pulse sequence.

    ``tau0`` is the first free-evolution interval, ``tau1`` the second and
    ``tau2`` the third, which ends on the central pulse. Reflection symmetry
    pins ``tau0 + tau1 + tau2 = 1/2``.
    """

    tau0_frac: float
    tau1_frac: float
    tau2_frac: float = field(default=float("nan"))

    def __post_init__(self) -> None:
        if np.isnan(self.tau2_frac):
            object.__setattr__(self, "tau2_frac", 0.5 - self.tau0_frac - self.tau1_frac)
        parts = (self.tau0_frac, self.tau1_frac, self.tau2_frac)
        if any(p <= 0 for p in parts):
            raise SequenceError(f"interval fractions must be positive, got {parts}")
        if abs(sum(parts) - 0.5) > _SUM_TOL:
            raise SequenceError(f"interval fractions must sum to 0.5, got {sum(parts)!r}")

    @classmethod
    def from_inner(cls, tau1_frac: float, tau2_frac: float) -> SymmetricFiveTiming:
        """Build from the two free parameters; ``tau0`` takes up the rest."""
        return cls(0.5 - tau1_frac - tau2_frac, tau1_frac, tau2_frac)


def _check_n(n: int) -> int:
    if int(n) != n or n < 1:
        raise SequenceError(f"need n >= 1 pulses, got {n!r} (use make_ramsey for n = 0)")
    return int(n)


def make_ramsey() -> PulseSequence:
    return PulseSequence((), "ramsey")


def make_echo() -> PulseSequence:
    return PulseSequence((0.5,), "echo")


def make_udd(n: int) -> PulseSequence:
    """Uhrig sequence, pulse ``j`` at ``sin^2(pi j / (2n + 2))``."""
    n = _check_n(n)
    # first half from the formula, second half mirrored, so the symmetry is exact
    half = [float(np.sin(np.pi * j / (2 * n + 2)) ** 2) for j in range(1, (n + 1) // 2 + 1)]
    if n % 2:
        half[-1] = 0.5
        return PulseSequence(tuple(half + [1.0 - x for x in reversed(half[:-1])]), "udd")
    return PulseSequence(tuple(half + [1.0 - x for x in reversed(half)]), "udd")


def make_pdd(n: int) -> PulseSequence:
    """Periodic sequence with ``n + 1`` equal free-evolution intervals."""
    n = _check_n(n)
    return PulseSequence(tuple(j / (n + 1) for j in range(1, n + 1)), "pdd")


def make_cpmg(n: int) -> PulseSequence:
    """CPMG: equal interpulse spacing, half-length first and last intervals."""
    n = _check_n(n)
    return PulseSequence(tuple((2 * j - 1) / (2 * n) for j in range(1, n + 1)), "cpmg")


def make_symmetric5(t: SymmetricFiveTiming) -> PulseSequence:
    t0, t1, t2 = t.tau0_frac, t.tau1_frac, t.tau2_frac
    fr = (t0, t0 + t1, t0 + t1 + t2, 1.0 - t0 - t1, 1.0 - t0)
    try:
        return PulseSequence(fr, "sym5")
    except SequenceError as exc:
        raise SequenceError(f"timing {t} gives invalid pulse positions: {exc}") from None


def intervals(seq: PulseSequence) -> np.ndarray:
    """Free-evolution gaps ``[d1, d2 - d1, ..., 1 - dn]`` as fractions of tau."""
    edges = np.concatenate(([0.0], seq.fractions, [1.0]))
    return np.diff(edges)


def custom(fractions: Sequence[float]) -> PulseSequence:
    return PulseSequence(tuple(fractions), "custom")


CONSTRUCTORS: dict[str, Callable[[int], PulseSequence]] = {
    "udd": make_udd,
    "pdd": make_pdd,
    "cpmg": make_cpmg,
}


def make(kind: str, n: int) -> PulseSequence:
    """Construct a sequence family member by name.

    ``ramsey`` and ``echo`` ignore ``n`` apart from a consistency check.
    """
    kind = kind.lower()
    if kind == "ramsey":
        if n != 0:
            raise SequenceError("ramsey has no pulses")
        return make_ramsey()
    if kind == "echo":
        if n != 1:
            raise SequenceError("echo has exactly one pulse")
        return make_echo()
    if kind not in CONSTRUCTORS:
        raise SequenceError(f"unknown sequence kind {kind!r}")
    return CONSTRUCTORS[kind](n)
