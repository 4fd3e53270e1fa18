"""Experiment runner: config parsing, subcommands, and artifact emission.

A run is described by a single JSON document with nested blocks mapping to
module inputs. Artifacts (CSV/JSON) are written with fixed key order and no
wall-clock content so identical configs reproduce byte-identical files; the
run manifest (config echo, version, wall time) is the one non-deterministic
file.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, cauchy, dispersal, families, selection, supersol, waves
from .errors import (
    AssumptionViolationError,
    ConfigurationError,
    DomainError,
    FrontLabError,
    InconclusiveError,
    NonconvergenceError,
    RejectedParamsError,
    UnclassifiedDecayError,
)

COMMANDS = ("spectral", "simulate", "wave", "speed-curve", "threshold", "supersol-check")

_SCHEMA = {
    "output_dir": None,
    "deterministic": None,
    "family": {"kind", "coeffs", "gamma0"},
    "kernel": {"kind", "L", "samples_file"},
    "grid": {"x0", "dx", "n"},
    "time": {"T", "dt", "record_interval"},
    "simulate": {"s", "level", "window"},
    "spectral": set(),
    "wave": {"s", "c", "dx"},
    "speed_curve": {"s_list", "tol_c", "threads", "cross_validate"},
    "threshold": {"s_lo", "s_hi", "tol_s", "eps_c"},
    "supersol": {"s", "delta0", "tol_c", "dx"},
}


class ExperimentConfig:
    """Validated experiment description; unknown keys are rejected."""

    def __init__(self, data: dict, base_dir: Path):
        if not isinstance(data, dict):
            raise ConfigurationError("config root must be a JSON object")
        for key, sub in data.items():
            if key not in _SCHEMA:
                raise ConfigurationError(f"unknown config key {key!r}")
            allowed = _SCHEMA[key]
            if allowed is not None and isinstance(sub, dict):
                for k in sub:
                    if k not in allowed:
                        raise ConfigurationError(f"unknown key {key}.{k}")
        self.data = data
        self.base_dir = base_dir
        if data.get("deterministic", True) is not True:
            raise ConfigurationError("only deterministic runs are supported")

    def block(self, name: str, required: bool = True) -> dict:
        if name not in self.data:
            if required:
                raise ConfigurationError(f"config block {name!r} is required")
            return {}
        return self.data[name]

    def family(self) -> families.FamilySpec:
        blk = self.block("family")
        kind = blk.get("kind")
        if kind == "HadelerRothe":
            return families.hadeler_rothe()
        if kind == "PolyAffine":
            return families.poly_affine(blk["coeffs"], float(blk.get("gamma0", 1.0)))
        raise ConfigurationError(f"unknown family kind {kind!r}")

    def kernel(self) -> dispersal.KernelSpec:
        blk = self.block("kernel")
        kind = blk.get("kind")
        if kind == "Local":
            return dispersal.local()
        if kind in ("Box", "Triangle", "CosineBump"):
            maker = {
                "Box": dispersal.box,
                "Triangle": dispersal.triangle,
                "CosineBump": dispersal.cosine_bump,
            }[kind]
            return maker(float(blk["L"]))
        if kind == "Tabulated":
            path = self.base_dir / blk["samples_file"]
            if not path.exists():
                raise ConfigurationError(f"kernel sample file {path} does not exist")
            raw = np.loadtxt(path)
            return dispersal.tabulated(raw[:, 0], raw[:, 1])
        raise ConfigurationError(f"unknown kernel kind {kind!r}")

    def grid(self) -> cauchy.Grid1D:
        blk = self.block("grid")
        return cauchy.Grid1D(float(blk["x0"]), float(blk["dx"]), int(blk["n"]))


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed config {path}: {exc}") from exc
    return ExperimentConfig(data, path.parent)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    with path.open("w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in row) + "\n")


def load_track_csv(path: str | Path) -> cauchy.FrontTrack:
    raw = np.loadtxt(path, delimiter=",", skiprows=1)
    return cauchy.FrontTrack(raw[:, 0], raw[:, 1], level=np.nan)


def load_profile_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    raw = np.loadtxt(path, delimiter=",", skiprows=1)
    return raw[:, 0], raw[:, 1]


def load_curve_csv(path: str | Path) -> list[dict]:
    out = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            cells = line.strip().split(",")
            row = dict(zip(header, cells))
            for k in ("s", "c_star", "lambda_hat", "A_hat", "B_hat"):
                row[k] = float(row[k])
            out.append(row)
    return out


def _fit_payload(fit: waves.DecayFit, label: str) -> dict:
    return {
        "lambda_hat": fit.lambda_hat,
        "A_hat": fit.A_hat,
        "B_hat": fit.B_hat,
        "class": label,
        "residual": fit.residual,
        "window": list(fit.window),
    }


def _cmd_spectral(cfg: ExperimentConfig, out: Path) -> int:
    kernel = cfg.kernel()
    fam = cfg.family()
    sp = dispersal.linear_speed(kernel, fam.gamma0)
    _write_json(
        out / "spectral.json",
        {
            "c0_star": sp.c0_star,
            "lambda0": sp.lambda0,
            "gamma0": sp.gamma0,
            "kernel": kernel.kind,
            "minimizer_tol": sp.minimizer_tol,
            "moment_certificate": sp.moment_certificate,
        },
    )
    return 0


def _cmd_simulate(cfg: ExperimentConfig, out: Path) -> int:
    fam = cfg.family()
    kernel = cfg.kernel()
    grid = cfg.grid()
    tblk = cfg.block("time")
    sblk = cfg.block("simulate")
    init = cauchy.step_datum(grid)
    final, track = cauchy.evolve(
        fam,
        float(sblk.get("s", 0.0)),
        kernel,
        init,
        T=float(tblk["T"]),
        dt=float(tblk["dt"]),
        level=float(sblk.get("level", 0.5)),
        record_interval=float(tblk.get("record_interval", 0.5)),
    )
    est = cauchy.estimate_speed(track, tuple(sblk["window"]))
    _write_csv(out / "track.csv", ["t", "x_front"], [track.times, track.positions])
    _write_json(
        out / "speed.json",
        {
            "c_hat": est.c_hat,
            "stderr": est.stderr,
            "window": list(est.window),
            "grid": {"x0": grid.x0, "dx": grid.dx, "n": grid.n},
            "level": track.level,
        },
    )
    return 0


def _cmd_wave(cfg: ExperimentConfig, out: Path) -> int:
    fam = cfg.family()
    kernel = cfg.kernel()
    blk = cfg.block("wave")
    s = float(blk["s"])
    c = float(blk["c"])
    if kernel.is_local:
        prof = waves.solve_wave_local(fam, s, c)
    else:
        prof = waves.solve_wave_nonlocal(fam, s, c, kernel, dx=float(blk.get("dx", 0.02)))
    if prof is None:
        print("no admissible traveling wave at this speed", file=sys.stderr)
        return 2
    sp = dispersal.linear_speed(kernel, fam.gamma0)
    try:
        fit, klass = waves.fit_decay(prof, sp)
        label = klass.label
    except UnclassifiedDecayError:
        fit = waves.tail_fit(prof)
        label = "Unclassified"
    _write_csv(out / "profile.csv", ["xi", "W"], [prof.xi, prof.W])
    payload = _fit_payload(fit, label)
    payload["c"] = prof.c
    payload["solver_residual"] = prof.residual
    _write_json(out / "fit.json", payload)
    return 0


def _cmd_speed_curve(cfg: ExperimentConfig, out: Path) -> int:
    fam = cfg.family()
    kernel = cfg.kernel()
    blk = cfg.block("speed_curve")
    curve = selection.speed_curve(
        fam,
        kernel,
        [float(s) for s in blk["s_list"]],
        tol_c=float(blk.get("tol_c", 1e-6)),
        threads=int(blk.get("threads", 1)),
        cross_validate=bool(blk.get("cross_validate", False)),
    )
    _write_csv(
        out / "curve.csv",
        ["s", "c_star", "class", "lambda_hat", "A_hat", "B_hat"],
        [
            np.array([cp.s for cp in curve]),
            np.array([cp.c_star for cp in curve]),
            [cp.front_class for cp in curve],
            np.array([cp.fit.lambda_hat for cp in curve]),
            np.array([cp.fit.A_hat for cp in curve]),
            np.array([cp.fit.B_hat for cp in curve]),
        ],
    )
    return 0


def _cmd_threshold(cfg: ExperimentConfig, out: Path) -> int:
    fam = cfg.family()
    kernel = cfg.kernel()
    blk = cfg.block("threshold")
    res = selection.find_threshold(
        fam,
        kernel,
        float(blk["s_lo"]),
        float(blk["s_hi"]),
        tol_s=float(blk.get("tol_s", 0.02)),
        eps_c=float(blk.get("eps_c", 5e-3)),
    )
    cert = selection.transition_certificate(res)
    _write_json(
        out / "threshold.json",
        {
            "s_star": res.s_star,
            "bracket": list(res.bracket),
            "initial_bracket": list(res.initial_bracket),
            "tol_s": res.tol_s,
            "eps_c": res.eps_c,
            "c_lin": res.c_lin,
            "class_at_star": res.transition_class,
            "transition_fit": _fit_payload(res.transition_fit, res.transition_class),
            "certificate": {
                "passed": cert.passed,
                "class_below": cert.class_below,
                "class_above": cert.class_above,
                "probe_below": cert.probe_below,
                "probe_above": cert.probe_above,
                "clamped": cert.clamped,
                "notes": cert.notes,
            },
        },
    )
    _write_csv(
        out / "threshold_curve.csv",
        ["s", "c_star", "class"],
        [
            np.array([cp.s for cp in res.curve]),
            np.array([cp.c_star for cp in res.curve]),
            [cp.front_class for cp in res.curve],
        ],
    )
    return 0


def _cmd_supersol(cfg: ExperimentConfig, out: Path) -> int:
    fam = cfg.family()
    kernel = cfg.kernel()
    blk = cfg.block("supersol")
    s = float(blk["s"])
    delta0 = float(blk.get("delta0", 1e-9))
    sp = dispersal.linear_speed(kernel, fam.gamma0)
    if kernel.is_local:
        _c, prof = waves.minimal_wave_local(fam, s, tol=float(blk.get("tol_c", 1e-6)))
    else:
        prof = waves.solve_wave_nonlocal(fam, s, sp.c0_star, kernel, dx=float(blk.get("dx", 0.01)))
        if prof is None:
            print("nonlocal minimal wave did not converge", file=sys.stderr)
            return 2
    params = supersol.auto_params(prof, sp, fam, s, delta0)
    bump = supersol.build_Rw(params)
    report = supersol.verify(prof, bump, fam, s, delta0)
    _write_json(out / "supersol_params.json", {k: v for k, v in params.__dict__.items()})
    _write_json(
        out / "supersol_report.json",
        {
            "passed": report.passed,
            "delta0": report.delta0,
            "delta0_max": report.delta0_max,
            "plateau_M": report.plateau_M,
            "tolerance": report.tolerance,
            "piece_max_residual": report.piece_max_residual,
            "corner_checks": {
                str(k): {"left": v[0], "right": v[1], "ok": v[2]}
                for k, v in report.corner_checks.items()
            },
            "checklist": report.checklist,
        },
    )
    R = bump.value(prof.xi)
    wbar = np.minimum(prof.W - R, 1.0)
    _write_csv(
        out / "supersol_curve.csv",
        ["xi", "W_star", "R_w", "W_bar"],
        [prof.xi, prof.W, R, wbar],
    )
    return 0


_DISPATCH = {
    "spectral": _cmd_spectral,
    "simulate": _cmd_simulate,
    "wave": _cmd_wave,
    "speed-curve": _cmd_speed_curve,
    "threshold": _cmd_threshold,
    "supersol-check": _cmd_supersol,
}


def run(command: str, cfg: ExperimentConfig, out_dir: str | Path) -> int:
    """Execute one subcommand; returns the process exit status."""
    if command not in _DISPATCH:
        raise ConfigurationError(f"unknown command {command!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    status = _DISPATCH[command](cfg, out)
    manifest = {
        "command": command,
        "config": cfg.data,
        "version": __version__,
        "wall_time_s": time.perf_counter() - t0,
        "exit_status": status,
    }
    _write_json(out / "manifest.json", manifest)
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="frontlab",
        description="speed-selection laboratory for monostable fronts",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--out", default=None, help="output directory (overrides config)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.threads > 1 and "speed_curve" in cfg.data:
            cfg.data["speed_curve"]["threads"] = args.threads
        out_dir = args.out or cfg.data.get("output_dir", "out")
        status = run(args.command, cfg, out_dir)
    except (
        ConfigurationError,
        DomainError,
        AssumptionViolationError,
        RejectedParamsError,
        UnclassifiedDecayError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NonconvergenceError, InconclusiveError) as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 2
    except FrontLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.verbose:
        print(f"wrote artifacts to {out_dir}")
    return status


if __name__ == "__main__":
    sys.exit(main())
