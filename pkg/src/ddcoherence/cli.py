"""Command-line front end.

Usage::

    ddcoherence SUBCOMMAND [--config FILE] [--set section.key=value ...] [--output PATH]

Exit status is 0 on success, 1 on invalid input and 2 when a numerical
step fails to converge.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .coherence import ChiEvaluator, coherence_curve, mc_coherence, t2_time
from .config import ConfigError, RunConfig, parse_config
from .detection import DetectionHistogram, optimal_threshold
from .filter_function import sample_filter
from .fitting import FitError, NoOscillation, fit_decay, fit_rabi
from .optimizer import grid_search_sym5
from .quadrature import QuadratureError
from .sequences import SequenceError, make
from .spectroscopy import SpectroscopyError, SpectroscopyPoint, forward_points, scan, tau_grid_for_band

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 1, 2
SUBCOMMANDS = ("filter", "simulate", "t2scan", "mc", "spectroscopy", "optimize", "fit", "threshold")

TWO_PI = 2.0 * math.pi


class NonConvergence(RuntimeError):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "nan" if math.isnan(x) else format(x, ".12g")


def _header(cfg: RunConfig, command: str) -> str:
    seed = "none" if cfg.seed is None else str(cfg.seed)
    return f"# ddcoherence {__version__} {command} seed={seed} config_sha256={cfg.digest()}\n"


def render_csv(cfg: RunConfig, command: str, columns: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(_header(cfg, command))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def render_json(cfg: RunConfig, command: str, payload: dict) -> str:
    doc = {"command": command, "seed": cfg.seed, "config_sha256": cfg.digest(), **payload}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _read_table(path: Optional[str], key: str, required: Sequence[str]) -> dict[str, np.ndarray]:
    if not path:
        raise ConfigError(key, "input file required")
    try:
        with open(path, newline="") as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise ConfigError(key, f"cannot read {path!r}: {exc.strerror}") from None
    reader = csv.DictReader(lines)
    cols = [c.strip() for c in (reader.fieldnames or [])]
    missing = [c for c in required if c not in cols]
    if missing:
        raise ConfigError(key, f"{path!r} lacks column(s) {', '.join(missing)}")
    data: dict[str, list] = {c: [] for c in cols}
    for lineno, row in enumerate(reader, start=2):
        for c, v in row.items():
            try:
                data[c.strip()].append(float(v))
            except (TypeError, ValueError):
                raise ConfigError(key, f"{path!r} row {lineno}: bad value {v!r} in {c}") from None
    return {c: np.asarray(v) for c, v in data.items()}


# ---------------------------------------------------------------- subcommands

def cmd_filter(cfg: RunConfig) -> str:
    p = cfg.extra["filter"]
    seq = cfg.sequence.build()
    fs = sample_filter(seq, p["tau"], 0.0, p["omega_max"], p["points"])
    rows = zip(fs.omega, fs.omega_over_pi_tau, fs.g)
    return render_csv(cfg, "filter", ["omega_rad_s", "omega_over_pi_tau", "g"], rows)


def cmd_simulate(cfg: RunConfig) -> str:
    curve = coherence_curve(cfg.sequence.build(), cfg.scan.grid(), cfg.noise.build(), cfg.t1_envelope,
                            cfg.visibility, cfg.n_rep, cfg.seed)
    cols = ["tau_us", "w", "p2"]
    data = [curve.tau * 1e6, curve.w, curve.p2]
    if curve.p2_sampled is not None:
        cols += ["p2_sampled", "stderr"]
        data += [curve.p2_sampled, curve.stderr]
    return render_csv(cfg, "simulate", cols, zip(*data))


def cmd_t2scan(cfg: RunConfig) -> str:
    p = cfg.extra["t2scan"]
    model = cfg.noise.build()
    rows = []
    for n in p["n_values"]:
        est = t2_time(make(p["kind"], n), model, p["tau_max"])
        rows.append((n, est.t2 * 1e6 if est.reached else float("nan"), est.final_w))
    return render_csv(cfg, "t2scan", ["n_pulses", "t2_us", "w_at_tau_max"], rows)


def cmd_mc(cfg: RunConfig) -> str:
    if cfg.seed is None:
        raise ConfigError("simulation.seed", "required for Monte-Carlo runs")
    p = cfg.extra["mc"]
    seq, model = cfg.sequence.build(), cfg.noise.build()
    w_mc, err = mc_coherence(seq, p["tau"], model, p["n_traj"], p["n_modes"], cfg.seed)
    c = ChiEvaluator(model, p["tau"]).chi(seq)
    return render_json(cfg, "mc", {
        "sequence": f"{seq.kind}({seq.n_pulses})", "tau_us": p["tau"] * 1e6,
        "n_traj": p["n_traj"], "n_modes": p["n_modes"],
        "w_mc": w_mc, "w_mc_stderr": err, "chi": c, "w_filter": math.exp(-c),
    })


def cmd_spectroscopy(cfg: RunConfig) -> str:
    p = cfg.extra["spectroscopy"]
    if p["input"]:
        t = _read_table(p["input"], "spectroscopy.input", ("n_pulses", "tau_us", "w"))
        pts = [SpectroscopyPoint(int(n), tau * 1e-6, w) for n, tau, w in zip(t["n_pulses"], t["tau_us"], t["w"])]
    else:
        grid = tau_grid_for_band(p["n"], p["omega_min"], p["omega_max"], p["points"])
        pts = forward_points(cfg.noise.build(), p["kind"], p["n"], grid)
    spec = scan(pts, p["kind"], p["normalization"])
    rows = zip(spec.omega_bar / TWO_PI / 1e3, spec.omega_bar, spec.s_hat)
    return render_csv(cfg, "spectroscopy", ["omega_bar_khz", "omega_bar_rad_s", "s_hat_rad_s"], rows)


def cmd_optimize(cfg: RunConfig) -> tuple[str, str]:
    p = cfg.extra["optimize"]
    res = grid_search_sym5(p["tau"], cfg.noise.build(), p["step"])
    t1, t2, w = res.map.feasible_points()
    table = render_csv(cfg, "optimize", ["tau1_frac", "tau2_frac", "tau0_frac", "w"],
                       zip(t1, t2, 0.5 - t1 - t2, w))
    tm = res.timing
    summary = render_json(cfg, "optimize", {
        "tau_us": p["tau"] * 1e6, "step": p["step"],
        "best_tau0": tm.tau0_frac, "best_tau1": tm.tau1_frac, "best_tau2": tm.tau2_frac,
        "w_best": res.w_best,
    })
    return table, summary


_FIT_UNITS = {
    "t_decay": ("t_decay_us", 1e6), "omega": ("omega_rad_s", 1.0),
    "decay_rate": ("decay_rate_per_s", 1.0),
}


def cmd_fit(cfg: RunConfig) -> str:
    p = cfg.extra["fit"]
    t = _read_table(p["input"], "fit.input", ("t_us", "y"))
    ts, y = t["t_us"] * 1e-6, t["y"]
    sigma = t.get("sigma")
    if p["model"] == "rabi":
        res = fit_rabi(ts, y, sigma)
        res.params.pop("t_decay", None)
    else:
        res = fit_decay(ts, y, p["model"], sigma)
    if not res.converged:
        raise NonConvergence(f"fit did not converge: {res.message}")
    params = {_FIT_UNITS.get(k, (k, 1.0))[0]: v * _FIT_UNITS.get(k, (k, 1.0))[1] for k, v in res.params.items()}
    errors = {_FIT_UNITS.get(k, (k, 1.0))[0]: v * _FIT_UNITS.get(k, (k, 1.0))[1] for k, v in res.errors.items()}
    if "omega_rad_s" in params:
        params["rabi_f_khz"] = params["omega_rad_s"] / TWO_PI / 1e3
        errors["rabi_f_khz"] = errors["omega_rad_s"] / TWO_PI / 1e3
    return render_json(cfg, "fit", {"model": res.model, "converged": res.converged, "params": params,
                                    "errors": errors, "rss": res.rss, "n_points": int(len(ts))})


def cmd_threshold(cfg: RunConfig) -> str:
    p = cfg.extra["threshold"]
    hists = []
    for key in ("up", "down"):
        t = _read_table(p[key], f"threshold.{key}", ("n", "count"))
        n = t["n"]
        if np.any(n < 0) or np.any(n != np.round(n)):
            raise ConfigError(f"threshold.{key}", "photon numbers must be non-negative integers")
        try:
            hists.append(DetectionHistogram.from_mapping(
                {int(k): 0.0 for k in n} | _sum_counts(n, t["count"])))
        except ValueError as exc:
            raise ConfigError(f"threshold.{key}", str(exc)) from None
    res = optimal_threshold(*hists)
    return render_json(cfg, "threshold", {"n_th": res.n_th, "xi_up": res.xi_up, "xi_down": res.xi_down,
                                          "F": res.fidelity})


def _sum_counts(n: np.ndarray, counts: np.ndarray) -> dict[int, float]:
    out: dict[int, float] = {}
    for k, c in zip(n.astype(int), counts):
        out[int(k)] = out.get(int(k), 0.0) + float(c)
    return out


COMMANDS: dict[str, Callable] = {
    "filter": cmd_filter, "simulate": cmd_simulate, "t2scan": cmd_t2scan, "mc": cmd_mc,
    "spectroscopy": cmd_spectroscopy, "optimize": cmd_optimize, "fit": cmd_fit, "threshold": cmd_threshold,
}


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ddcoherence", description="Dynamical-decoupling coherence toolkit.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("command", help=", ".join(SUBCOMMANDS))
    ap.add_argument("-c", "--config", help="YAML configuration file")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                    help="override a configuration value (repeatable)")
    ap.add_argument("-o", "--output", help="output file (default: stdout)")
    ap.add_argument("--seed", type=int, help="shorthand for --set simulation.seed=SEED")
    ap.add_argument("--input", help="input CSV for fit or spectroscopy")
    ap.add_argument("--model", help="fit model: exponential, gaussian, stretched or rabi")
    ap.add_argument("--up", help="bright-state histogram CSV (threshold)")
    ap.add_argument("--down", help="dark-state histogram CSV (threshold)")
    return ap


def _flag_overrides(args) -> list[str]:
    out = list(args.overrides)
    if args.seed is not None:
        out.append(f"simulation.seed={args.seed}")
    if args.output:
        out.append(f"output.path={json.dumps(args.output)}")
    if args.input:
        section = "spectroscopy" if args.command == "spectroscopy" else "fit"
        out.append(f"{section}.input={json.dumps(args.input)}")
    if args.model:
        out.append(f"fit.model={args.model}")
    if args.up:
        out.append(f"threshold.up={json.dumps(args.up)}")
    if args.down:
        out.append(f"threshold.down={json.dumps(args.down)}")
    return out


def _write(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    if args.command not in COMMANDS:
        print(f"error: unknown subcommand {args.command!r}; choose from {', '.join(SUBCOMMANDS)}",
              file=sys.stderr)
        return EXIT_INVALID
    try:
        text = ""
        if args.config:
            try:
                with open(args.config) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError("--config", f"cannot read {args.config!r}: {exc.strerror}") from None
        cfg = parse_config(text, _flag_overrides(args))
        result = COMMANDS[args.command](cfg)
        if isinstance(result, tuple):
            table, summary = result
            if cfg.output_path and cfg.output_path != "-":
                _write(table, cfg.output_path)
                _write(summary, None)
            else:
                _write(summary if cfg.output_format == "json" else table, None)
        else:
            _write(result, cfg.output_path)
    except (QuadratureError, NonConvergence, NoOscillation) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ConfigError, SequenceError, SpectroscopyError, FitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
