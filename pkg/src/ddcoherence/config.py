"""Run configuration: YAML parsing, unit handling and validation.

Dimensioned values are strings with a unit suffix, e.g. ``"12 kHz"``,
``"480 us"`` or ``"1500 rad/s"``. Frequencies are ordinary frequencies
and become angular frequencies here, once. Errors name the offending key
in dotted form (``scan.start``).
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Any, Optional

import yaml

from .coherence import T1Envelope
from .noise import CompositePsd, GaussianPsd, PowerLawPsd
from .sequences import PulseSequence, SequenceError, SymmetricFiveTiming, custom, make, make_symmetric5

TWO_PI = 2.0 * math.pi

_FREQ = {"hz": 1.0, "khz": 1e3, "mhz": 1e6}
_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9}
_RATE = {"rad/s": 1.0}
_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s\d].*?)\s*$")


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending key."""

    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


def _quantity(value: Any, key: str, units: dict[str, float], kind: str) -> float:
    if isinstance(value, bool) or not isinstance(value, str):
        raise ConfigError(key, f"{kind} needs a unit suffix ({', '.join(units)}), got {value!r}")
    m = _QTY.match(value)
    if not m:
        raise ConfigError(key, f"cannot parse {value!r} as a {kind}")
    unit = m.group(2).lower()
    if unit not in units:
        raise ConfigError(key, f"unit {m.group(2)!r} not allowed for a {kind}; use one of {', '.join(units)}")
    return float(m.group(1)) * units[unit]


def angular(value: Any, key: str) -> float:
    """Ordinary frequency with unit -> angular frequency in rad/s."""
    return TWO_PI * _quantity(value, key, _FREQ, "frequency")


def seconds(value: Any, key: str) -> float:
    return _quantity(value, key, _TIME, "time")


def rate(value: Any, key: str) -> float:
    return _quantity(value, key, _RATE, "spectral density")


def _positive(x: float, key: str) -> float:
    if not (math.isfinite(x) and x > 0):
        raise ConfigError(key, f"must be positive, got {x!r}")
    return x


def _number(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    return float(value)


def _integer(value: Any, key: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(key, f"must be >= {minimum}, got {value}")
    return value


def _choice(value: Any, key: str, options) -> str:
    if value not in options:
        raise ConfigError(key, f"expected one of {', '.join(options)}, got {value!r}")
    return value


# ---------------------------------------------------------------- defaults

def calibrated_document() -> dict:
    """Frozen calibrated noise parameters shipped with the package."""
    text = resources.files(__package__).joinpath("data/calibrated.yaml").read_text()
    return yaml.safe_load(text)


DEFAULTS: dict[str, dict[str, Any]] = {
    "sequence": {"kind": "pdd", "n": 3, "fractions": None, "timing": None},
    "noise": {},  # filled from the calibrated document
    "scan": {"start": "10 us", "stop": "3000 us", "points": 100, "spacing": "linear"},
    "simulation": {"visibility": 0.837, "t1": None, "n_rep": None, "seed": None},
    "output": {"path": None, "format": "csv"},
    "filter": {"tau": "100 us", "f_max": "100 kHz", "points": 1001},
    "t2scan": {"kind": "pdd", "n_values": [1, 3, 5, 9, 13], "tau_max": "20 ms"},
    "mc": {"tau": "200 us", "n_traj": 10000, "n_modes": 4096},
    "spectroscopy": {"kind": "cpmg", "n": 9, "f_min": "6 kHz", "f_max": "30 kHz", "points": 121,
                     "normalization": "total", "input": None},
    "optimize": {"tau": "1500 us", "step": 0.002},
    "fit": {"model": "exponential", "input": None},
    "threshold": {"up": None, "down": None},
}

NOISE_KEYS = {
    "heuristic": {"model", "alpha", "center", "width", "floor_amplitude", "peak_amplitude",
                  "f_ref", "f_lo", "f_hi"},
    "white": {"model", "level", "f_lo", "f_hi"},
}
TERM_KEYS = {
    "powerlaw": {"kind", "amplitude", "alpha", "f_ref", "f_lo", "f_hi"},
    "gaussian": {"kind", "center", "width", "amplitude"},
}


# ---------------------------------------------------------------- typed config

@dataclass(frozen=True)
class SequenceSpec:
    kind: str
    n: Optional[int] = None
    fractions: Optional[tuple[float, ...]] = None
    timing: Optional[tuple[float, float, float]] = None

    def build(self) -> PulseSequence:
        if self.kind == "custom":
            return custom(self.fractions)
        if self.kind == "sym5":
            return make_symmetric5(SymmetricFiveTiming(*self.timing))
        return make(self.kind, self.n)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise terms as ``(kind, ((param, value), ...))`` pairs in SI units."""

    terms: tuple

    def build(self) -> CompositePsd:
        built = []
        for kind, params in self.terms:
            cls = PowerLawPsd if kind == "powerlaw" else GaussianPsd
            built.append(cls(**dict(params)))
        return CompositePsd(tuple(built))


@dataclass(frozen=True)
class ScanSpec:
    start: float
    stop: float
    points: int
    spacing: str

    def grid(self):
        import numpy as np

        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class RunConfig:
    sequence: SequenceSpec
    noise: NoiseSpec
    scan: ScanSpec
    visibility: float
    t1: Optional[float]
    n_rep: Optional[int]
    seed: Optional[int]
    output_path: Optional[str]
    output_format: str
    extra: dict = field(default_factory=dict)

    @property
    def t1_envelope(self) -> T1Envelope:
        return T1Envelope(self.t1, True) if self.t1 else T1Envelope()

    def canonical(self) -> dict:
        """Resolved values only; the output path does not affect results."""
        d = asdict(self)
        d.pop("output_path")
        return d

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, default=list)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------- parsing

def _merge(doc: dict) -> dict:
    raw = copy.deepcopy(DEFAULTS)
    raw["noise"] = dict(calibrated_document()["noise"])
    if doc is None:
        return raw
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "configuration must be a mapping of sections")
    for section, body in doc.items():
        if section not in raw:
            raise ConfigError(section, "unknown section")
        if body is None:
            continue
        if section == "noise" and isinstance(body, list):
            raw["noise"] = body
            continue
        if not isinstance(body, dict):
            raise ConfigError(section, "section must be a mapping")
        if section == "noise" and (not isinstance(raw["noise"], dict)
                                   or body.get("model", raw["noise"].get("model")) != raw["noise"].get("model")):
            raw["noise"] = {}
        if section == "sequence" and ("fractions" in body or "timing" in body or "kind" in body):
            raw["sequence"] = {"kind": None, "n": None, "fractions": None, "timing": None}
        for key, value in body.items():
            if section != "noise" and key not in raw[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
            raw[section][key] = value
    return raw


def _sequence(s: dict) -> SequenceSpec:
    kinds = ("ramsey", "echo", "pdd", "udd", "cpmg", "sym5", "custom")
    kind = _choice(s.get("kind"), "sequence.kind", kinds)
    try:
        if kind == "custom":
            if s.get("fractions") is None:
                raise ConfigError("sequence.fractions", "required for a custom sequence")
            fr = tuple(_number(v, f"sequence.fractions[{i}]") for i, v in enumerate(s["fractions"]))
            spec = SequenceSpec(kind, len(fr), fractions=fr)
        elif kind == "sym5":
            t = s.get("timing")
            if not isinstance(t, dict):
                raise ConfigError("sequence.timing", "sym5 needs a mapping with tau0, tau1[, tau2]")
            unknown = set(t) - {"tau0", "tau1", "tau2"}
            if unknown:
                raise ConfigError(f"sequence.timing.{sorted(unknown)[0]}", "unknown key")
            vals = [_number(t.get(k), f"sequence.timing.{k}") for k in ("tau0", "tau1")]
            vals.append(_number(t["tau2"], "sequence.timing.tau2") if "tau2" in t else float("nan"))
            timing = SymmetricFiveTiming(*vals)
            spec = SequenceSpec(kind, 5, timing=(timing.tau0_frac, timing.tau1_frac, timing.tau2_frac))
        else:
            n = s.get("n")
            if n is None:
                n = {"ramsey": 0, "echo": 1}.get(kind)
            n = _integer(n, "sequence.n")
            spec = SequenceSpec(kind, n)
        spec.build()
    except SequenceError as exc:
        raise ConfigError("sequence", str(exc)) from None
    return spec


def _check_keys(body: dict, allowed: set, prefix: str) -> None:
    for key in body:
        if key not in allowed:
            raise ConfigError(f"{prefix}.{key}", "unknown key")
    for key in sorted(allowed):
        if body.get(key) is None:
            raise ConfigError(f"{prefix}.{key}", "missing")


def _band(body: dict, prefix: str) -> tuple[float, float]:
    lo = _positive(angular(body["f_lo"], f"{prefix}.f_lo"), f"{prefix}.f_lo")
    hi = _positive(angular(body["f_hi"], f"{prefix}.f_hi"), f"{prefix}.f_hi")
    if hi <= lo:
        raise ConfigError(f"{prefix}.f_hi", f"must exceed {prefix}.f_lo")
    return lo, hi


def _amplitude(value, key: str) -> float:
    a = rate(value, key)
    if not (math.isfinite(a) and a >= 0):
        raise ConfigError(key, "must be non-negative")
    return a


def _powerlaw(amp, alpha, f_ref, band) -> tuple:
    return ("powerlaw", (("amplitude", amp), ("alpha", alpha), ("omega_ref", f_ref),
                         ("omega_lo", band[0]), ("omega_hi", band[1])))


def _gaussian(center, width, amp) -> tuple:
    return ("gaussian", (("center", center), ("width", width), ("amplitude", amp)))


def _term(body: Any, prefix: str) -> tuple:
    if not isinstance(body, dict):
        raise ConfigError(prefix, "noise term must be a mapping")
    kind = _choice(body.get("kind"), f"{prefix}.kind", tuple(TERM_KEYS))
    _check_keys(body, TERM_KEYS[kind], prefix)
    if kind == "powerlaw":
        alpha = _number(body["alpha"], f"{prefix}.alpha")
        if alpha < 0:
            raise ConfigError(f"{prefix}.alpha", "must be non-negative")
        f_ref = _positive(angular(body["f_ref"], f"{prefix}.f_ref"), f"{prefix}.f_ref")
        return _powerlaw(_amplitude(body["amplitude"], f"{prefix}.amplitude"), alpha, f_ref,
                         _band(body, prefix))
    return _gaussian(_positive(angular(body["center"], f"{prefix}.center"), f"{prefix}.center"),
                     _positive(angular(body["width"], f"{prefix}.width"), f"{prefix}.width"),
                     _amplitude(body["amplitude"], f"{prefix}.amplitude"))


def _noise(s: Any) -> NoiseSpec:
    """Either a preset mapping (``model: heuristic|white``) or a list of terms."""
    if isinstance(s, list):
        if not s:
            raise ConfigError("noise", "term list is empty")
        return NoiseSpec(tuple(_term(t, f"noise[{i}]") for i, t in enumerate(s)))
    model = _choice(s.get("model"), "noise.model", tuple(NOISE_KEYS))
    _check_keys(s, NOISE_KEYS[model], "noise")
    band = _band(s, "noise")
    if model == "white":
        return NoiseSpec((_powerlaw(_amplitude(s["level"], "noise.level"), 0.0, band[0], band),))
    alpha = _number(s["alpha"], "noise.alpha")
    if alpha < 0:
        raise ConfigError("noise.alpha", "must be non-negative")
    f_ref = _positive(angular(s["f_ref"], "noise.f_ref"), "noise.f_ref")
    floor = _powerlaw(_amplitude(s["floor_amplitude"], "noise.floor_amplitude"), alpha, f_ref, band)
    peak = _gaussian(_positive(angular(s["center"], "noise.center"), "noise.center"),
                     _positive(angular(s["width"], "noise.width"), "noise.width"),
                     _amplitude(s["peak_amplitude"], "noise.peak_amplitude"))
    return NoiseSpec((floor, peak))


def _scan(s: dict) -> ScanSpec:
    start = _positive(seconds(s["start"], "scan.start"), "scan.start")
    stop = _positive(seconds(s["stop"], "scan.stop"), "scan.stop")
    if stop <= start:
        raise ConfigError("scan.stop", "must exceed scan.start")
    points = _integer(s["points"], "scan.points", minimum=2)
    spacing = _choice(s["spacing"], "scan.spacing", ("linear", "log"))
    return ScanSpec(start, stop, points, spacing)


def _extra(raw: dict) -> dict:
    """Subcommand sections, with units resolved."""
    f, t2, mc, sp, op, fit, th = (raw[k] for k in
                                  ("filter", "t2scan", "mc", "spectroscopy", "optimize", "fit", "threshold"))
    out = {
        "filter": {
            "tau": _positive(seconds(f["tau"], "filter.tau"), "filter.tau"),
            "omega_max": _positive(angular(f["f_max"], "filter.f_max"), "filter.f_max"),
            "points": _integer(f["points"], "filter.points", minimum=2),
        },
        "t2scan": {
            "kind": _choice(t2["kind"], "t2scan.kind", ("pdd", "udd", "cpmg")),
            "n_values": [_integer(n, f"t2scan.n_values[{i}]", minimum=1)
                         for i, n in enumerate(t2["n_values"] or [])],
            "tau_max": _positive(seconds(t2["tau_max"], "t2scan.tau_max"), "t2scan.tau_max"),
        },
        "mc": {
            "tau": _positive(seconds(mc["tau"], "mc.tau"), "mc.tau"),
            "n_traj": _integer(mc["n_traj"], "mc.n_traj", minimum=100),
            "n_modes": _integer(mc["n_modes"], "mc.n_modes", minimum=16),
        },
        "spectroscopy": {
            "kind": _choice(sp["kind"], "spectroscopy.kind", ("cpmg", "pdd", "udd")),
            "n": _integer(sp["n"], "spectroscopy.n", minimum=1),
            "omega_min": _positive(angular(sp["f_min"], "spectroscopy.f_min"), "spectroscopy.f_min"),
            "omega_max": _positive(angular(sp["f_max"], "spectroscopy.f_max"), "spectroscopy.f_max"),
            "points": _integer(sp["points"], "spectroscopy.points", minimum=2),
            "normalization": _choice(sp["normalization"], "spectroscopy.normalization",
                                     ("main_lobe", "total")),
            "input": sp["input"],
        },
        "optimize": {
            "tau": _positive(seconds(op["tau"], "optimize.tau"), "optimize.tau"),
            "step": _positive(_number(op["step"], "optimize.step"), "optimize.step"),
        },
        "fit": {
            "model": _choice(fit["model"], "fit.model", ("exponential", "gaussian", "stretched", "rabi")),
            "input": fit["input"],
        },
        "threshold": {"up": th["up"], "down": th["down"]},
    }
    if not t2["n_values"]:
        raise ConfigError("t2scan.n_values", "must list at least one pulse number")
    if out["spectroscopy"]["omega_max"] <= out["spectroscopy"]["omega_min"]:
        raise ConfigError("spectroscopy.f_max", "must exceed spectroscopy.f_min")
    if out["optimize"]["step"] > 0.05:
        raise ConfigError("optimize.step", "must be at most 0.05")
    return out


def build_config(doc: Optional[dict]) -> RunConfig:
    raw = _merge(doc)
    sim = raw["simulation"]
    vis = _number(sim["visibility"], "simulation.visibility")
    if not 0 <= vis <= 1:
        raise ConfigError("simulation.visibility", "must lie in [0, 1]")
    t1 = None if sim["t1"] is None else _positive(seconds(sim["t1"], "simulation.t1"), "simulation.t1")
    n_rep = None if sim["n_rep"] is None else _integer(sim["n_rep"], "simulation.n_rep", minimum=1)
    seed = None if sim["seed"] is None else _integer(sim["seed"], "simulation.seed")
    if n_rep is not None and seed is None:
        raise ConfigError("simulation.seed", "required when simulation.n_rep is set")
    out = raw["output"]
    fmt = _choice(out["format"], "output.format", ("csv", "json"))
    path = out["path"]
    if path is not None and not isinstance(path, str):
        raise ConfigError("output.path", "must be a string")
    return RunConfig(
        sequence=_sequence(raw["sequence"]),
        noise=_noise(raw["noise"]),
        scan=_scan(raw["scan"]),
        visibility=vis,
        t1=t1,
        n_rep=n_rep,
        seed=seed,
        output_path=path,
        output_format=fmt,
        extra=_extra(raw),
    )


def apply_overrides(doc: Optional[dict], overrides: list[str]) -> dict:
    """Apply ``section.key=value`` overrides; values are parsed as YAML.

    A bare ``section=value`` replaces the whole section.
    """
    doc = copy.deepcopy(doc) if doc else {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like section.key=value")
        path, value = item.split("=", 1)
        parts = path.strip().split(".")
        if not all(parts):
            raise ConfigError(path, "malformed override key")
        node = doc
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(path, "cannot descend into a scalar")
        node[parts[-1]] = yaml.safe_load(value)
    return doc


def parse_config(text: str = "", overrides: Optional[list[str]] = None) -> RunConfig:
    """Parse a YAML document (possibly empty) and validate it."""
    try:
        doc = yaml.safe_load(text) if text else None
    except yaml.YAMLError as exc:
        raise ConfigError("<document>", f"invalid YAML: {exc}") from None
    if overrides:
        doc = apply_overrides(doc, overrides)
    return build_config(doc)
