"""Command-line front end: sweeps, p_k scans, fits, LZ tables, MC checks.

Artifacts are plain CSV (header row, '.' decimals, 17 significant digits so
floats round-trip exactly) plus JSON metadata, designed to be diffable and
reproducible byte-for-byte given the same configuration.

Subcommands: sweep, pkscan, fit, lz, trajcheck.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (fit_alpha, fit_linear_rate, fit_power_law,
                       noise_induced_defects, optimal_quench_time)
from .errors import (BoundaryMinimumError, ConfigError, DegeneracyError,
                     DomainError, IntegrationError, InvariantViolation,
                     QuenchError, SchemaError)
from .evolve import (IntegratorConfig, NoiseConfig, average_trajectories,
                     evolve_master, sample_trajectories, trace_distance)
from .lzmap import impulse_region_check, lz_defect_estimate, lz_map
from .model import KGrid, Protocol, ProtocolSpec
from .observables import (ExcitationProfile, SweepResult, defect_density,
                          scan_excitations)

__all__ = [
    "ExperimentConfig",
    "DEFAULT_W_LIST",
    "cmd_sweep",
    "cmd_pkscan",
    "cmd_fit",
    "cmd_lz",
    "cmd_trajcheck",
    "main",
]

# Artifact defaults: W small enough that the smallest two stay in the
# linear-response regime over the default tau window, large enough that the
# anti-KZ minimum of the mid values falls inside ln tau in [3, 5.5].
DEFAULT_W_LIST = (0.005, 0.01, 0.02, 0.03, 0.045, 0.07)

SWEEP_HEADER = ["protocol", "tau", "w", "n_w"]
PK_HEADER = ["k", "p_k"]
LZ_HEADER = ["k", "v_lz", "t_scale", "t_offset",
             "window_lz_start", "window_lz_end", "complete_lzt"]


@dataclass
class ExperimentConfig:
    """Sweep configuration; file values are overridden by CLI flags."""

    protocol: Protocol = Protocol.TRANSVERSE
    n_k: int = 500
    tau_ln_min: float = 3.0
    tau_ln_max: float = 5.5
    tau_count: int = 24
    w_list: tuple[float, ...] = DEFAULT_W_LIST
    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    max_step: float | None = None
    traj_count: int = 10000
    traj_dt: float = 1e-3
    traj_seed: int = 12345
    out_dir: Path = field(default_factory=lambda: Path("."))

    def __post_init__(self):
        if self.n_k < 1:
            raise ConfigError(f"nk must be >= 1, got {self.n_k}")
        if self.tau_count < 3:
            raise ConfigError(f"tau_count must be >= 3, got {self.tau_count}")
        if not self.tau_ln_min < self.tau_ln_max:
            raise ConfigError("tau_ln_min must be < tau_ln_max")
        if any(w < 0 or not math.isfinite(w) for w in self.w_list):
            raise ConfigError(f"all W must be finite and >= 0, got {self.w_list}")
        if self.traj_count < 1 or self.traj_dt <= 0:
            raise ConfigError("trajectory count must be >= 1 and dt > 0")
        self.w_list = tuple(sorted(set(float(w) for w in self.w_list)))
        self.out_dir = Path(self.out_dir)

    def taus(self) -> np.ndarray:
        return np.exp(np.linspace(self.tau_ln_min, self.tau_ln_max,
                                  self.tau_count))

    def grid(self) -> KGrid:
        return KGrid(self.n_k)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol,
                                max_step=self.max_step)

    def as_dict(self) -> dict:
        return {
            "protocol": self.protocol.label,
            "n_k": self.n_k,
            "tau_ln_min": self.tau_ln_min,
            "tau_ln_max": self.tau_ln_max,
            "tau_count": self.tau_count,
            "w_list": list(self.w_list),
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "max_step": self.max_step,
            "traj_count": self.traj_count,
            "traj_dt": self.traj_dt,
            "traj_seed": self.traj_seed,
            "out_dir": str(self.out_dir),
        }


# ---------------------------------------------------------------------------
# config file + flag merging
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {
    "protocol", "nk", "tau_ln_min", "tau_ln_max", "tau_count", "w",
    "rel_tol", "abs_tol", "max_step", "traj_count", "traj_dt", "traj_seed",
    "out",
}


def load_config_file(path: str | Path) -> dict[str, str]:
    """Flat key = value text; '#' starts a comment."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _parse_w_list(text: str) -> tuple[float, ...]:
    parts = [p for chunk in text.split(",") for p in chunk.split()]
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"bad W list {text!r}") from exc


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Defaults, overridden by the config file, overridden by flags."""
    raw = load_config_file(args.config) if args.config else {}
    try:
        kwargs: dict = {}
        if "protocol" in raw:
            kwargs["protocol"] = Protocol.from_label(raw["protocol"])
        if "nk" in raw:
            kwargs["n_k"] = int(raw["nk"])
        for src, dst in [("tau_ln_min", "tau_ln_min"),
                         ("tau_ln_max", "tau_ln_max"),
                         ("rel_tol", "rel_tol"), ("abs_tol", "abs_tol"),
                         ("traj_dt", "traj_dt")]:
            if src in raw:
                kwargs[dst] = float(raw[src])
        for src, dst in [("tau_count", "tau_count"),
                         ("traj_count", "traj_count"),
                         ("traj_seed", "traj_seed")]:
            if src in raw:
                kwargs[dst] = int(raw[src])
        if "max_step" in raw:
            kwargs["max_step"] = (None if raw["max_step"].lower() == "none"
                                  else float(raw["max_step"]))
        if "w" in raw:
            kwargs["w_list"] = _parse_w_list(raw["w"])
        if "out" in raw:
            kwargs["out_dir"] = Path(raw["out"])

        if getattr(args, "protocol", None):
            kwargs["protocol"] = Protocol.from_label(args.protocol)
        if getattr(args, "nk", None) is not None:
            kwargs["n_k"] = args.nk
        if getattr(args, "tau_ln_min", None) is not None:
            kwargs["tau_ln_min"] = args.tau_ln_min
        if getattr(args, "tau_ln_max", None) is not None:
            kwargs["tau_ln_max"] = args.tau_ln_max
        if getattr(args, "tau_ln_count", None) is not None:
            kwargs["tau_count"] = args.tau_ln_count
        if getattr(args, "w", None):
            kwargs["w_list"] = tuple(args.w)
        if getattr(args, "tol", None) is not None:
            kwargs["rel_tol"] = args.tol
            kwargs["abs_tol"] = args.tol
        if getattr(args, "seed", None) is not None:
            kwargs["traj_seed"] = args.seed
        if getattr(args, "out", None) is not None:
            kwargs["out_dir"] = Path(args.out)
        return ExperimentConfig(**kwargs)
    except (ValueError, DomainError) as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# CSV / JSON helpers
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def read_csv(path: str | Path, expected_header: list[str]) -> list[list[str]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != expected_header:
                raise SchemaError(f"{path}: header {header} != {expected_header}")
            return [row for row in reader if row]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_sweep(config: ExperimentConfig) -> SweepResult:
    """Defect-density sweep over (tau, W); writes sweep.csv + sweep_meta.json.

    On an integration failure the rows computed so far go to
    sweep_partial.csv and the error is re-raised.
    """
    t_wall = time.perf_counter()
    grid = config.grid()
    cfg = config.integrator()
    taus = config.taus()
    rows: list[tuple[str, str, str, str]] = []
    n_matrix = np.empty((len(config.w_list), len(taus)))
    label = config.protocol.label
    try:
        for i, w in enumerate(config.w_list):
            noise = NoiseConfig(w=w)
            for j, tau in enumerate(taus):
                spec = ProtocolSpec.make(config.protocol, float(tau))
                n = defect_density(spec, grid, noise, cfg)
                n_matrix[i, j] = n
                rows.append((label, _fmt(tau), _fmt(w), _fmt(n)))
    except QuenchError:
        write_csv(config.out_dir / "sweep_partial.csv", SWEEP_HEADER, rows)
        raise
    write_csv(config.out_dir / "sweep.csv", SWEEP_HEADER, rows)
    write_json(config.out_dir / "sweep_meta.json", {
        "schema": "xyquench-sweep-meta-1",
        "version": __version__,
        "config": config.as_dict(),
        "wall_time_s": time.perf_counter() - t_wall,
    })
    return SweepResult(taus=taus, ws=np.array(config.w_list),
                       n_matrix=n_matrix, protocol=config.protocol)


def cmd_pkscan(config: ExperimentConfig, tau: float, w: float
               ) -> ExcitationProfile:
    """Per-k excitation profile at one (tau, W); writes pk_<...>.csv."""
    spec = ProtocolSpec.make(config.protocol, tau)
    profile = scan_excitations(spec, config.grid(), NoiseConfig(w=w),
                               config.integrator())
    name = f"pk_{config.protocol.label}_{tau:g}_{w:g}.csv"
    write_csv(config.out_dir / name, PK_HEADER,
              ((_fmt(k), _fmt(p)) for k, p in
               zip(profile.k_values, profile.p_values)))
    return profile


def cmd_fit(sweep_csv: str | Path, window: tuple[float, float] = (3.0, 5.5),
            out_path: Path | None = None) -> tuple[dict, bool]:
    """Fit report from a sweep CSV; returns (report, ok).

    ok is False when any per-W optimal-time search hit the grid boundary.
    """
    rows = read_csv(sweep_csv, SWEEP_HEADER)
    by_protocol: dict[str, dict[float, dict[float, float]]] = {}
    for label, tau_s, w_s, n_s in rows:
        Protocol.from_label(label)  # validates
        by_protocol.setdefault(label, {}).setdefault(
            float(w_s), {})[float(tau_s)] = float(n_s)

    report: dict = {"schema": "xyquench-fit-1",
                    "window_ln_tau": [window[0], window[1]]}
    ok = True
    for label in sorted(by_protocol):
        curves = by_protocol[label]
        if 0.0 not in curves:
            raise SchemaError(f"{sweep_csv}: no W=0 rows for {label}; "
                              "cannot fit the noise-free power law")
        taus0 = np.array(sorted(curves[0.0]))
        n0 = np.array([curves[0.0][t] for t in taus0])
        kz = fit_power_law(taus0, n0, window)
        report[f"{label}.beta"] = kz.beta
        report[f"{label}.c"] = kz.c
        report[f"{label}.r2_loglog"] = kz.r2
        alpha_points: list[tuple[float, float]] = []
        for w in sorted(curves):
            if w == 0.0:
                continue
            taus = np.array(sorted(curves[w]))
            n_w = np.array([curves[w][t] for t in taus])
            dn = noise_induced_defects(taus, n_w, kz)
            rate = fit_linear_rate(taus, dn)
            prefix = f"{label}.w={w:g}"
            report[f"{prefix}.r"] = rate.r
            report[f"{prefix}.intercept"] = rate.intercept
            report[f"{prefix}.r2"] = rate.r2
            try:
                tau_opt = optimal_quench_time(taus, n_w)
                report[f"{prefix}.tau_opt"] = tau_opt
                alpha_points.append((w, tau_opt))
            except BoundaryMinimumError as exc:
                report[f"{prefix}.tau_opt_error"] = str(exc)
                ok = False
        if len(alpha_points) >= 3:
            ws = np.array([p[0] for p in alpha_points])
            topts = np.array([p[1] for p in alpha_points])
            report[f"{label}.alpha_lnw2"] = fit_alpha(ws, topts, "lnw2").alpha
            report[f"{label}.alpha_lnw"] = fit_alpha(ws, topts, "lnw").alpha
    if out_path is not None:
        write_json(out_path, report)
    return report, ok


def cmd_lz(config: ExperimentConfig, tau: float) -> float:
    """Per-k LZ mapping table + the quadrature defect estimate.

    Writes lzmap_<protocol>.csv and prints the estimate next to the
    master-equation n_0 at the same tau.
    """
    spec = ProtocolSpec.make(config.protocol, tau)
    grid = config.grid()
    rows = []
    for k in grid.points:
        m = lz_map(spec, float(k))
        rows.append((_fmt(k), _fmt(m.v_lz), _fmt(m.t_scale), _fmt(m.t_offset),
                     _fmt(m.window_lz[0]), _fmt(m.window_lz[1]),
                     "1" if impulse_region_check(m) else "0"))
    write_csv(config.out_dir / f"lzmap_{config.protocol.label}.csv",
              LZ_HEADER, rows)
    estimate = lz_defect_estimate(spec, grid)
    n0 = defect_density(spec, grid, NoiseConfig(w=0.0), config.integrator())
    print(f"{config.protocol.label} tau={tau:g}: "
          f"lz_estimate={estimate:.6g} master_n0={n0:.6g} "
          f"rel_diff={(estimate - n0) / n0:+.3%}")
    return estimate


def cmd_trajcheck(config: ExperimentConfig, k: float, tau: float, w: float
                  ) -> dict:
    """Monte-Carlo oracle comparison: trajectory average vs master equation."""
    spec = ProtocolSpec.make(config.protocol, tau)
    noise = NoiseConfig(w=w)
    master = evolve_master(spec, k, noise, config.integrator())
    t0, t1 = spec.window
    n_steps = max(1, round((t1 - t0) / config.traj_dt))
    dt = (t1 - t0) / n_steps
    states = sample_trajectories(spec, k, noise, dt, config.traj_seed,
                                 config.traj_count)
    mean, stderr = average_trajectories(states)
    td = trace_distance(mean, master)
    delta = np.abs(mean.rho - master.rho).max()
    result = {
        "schema": "xyquench-trajcheck-1",
        "protocol": config.protocol.label,
        "k": k, "tau": tau, "w": w,
        "count": config.traj_count,
        "dt": dt,
        "seed": config.traj_seed,
        "trace_distance": td,
        "max_element_delta": float(delta),
        "max_element_stderr": stderr,
        "within_3_sigma": bool(delta <= 3.0 * stderr) if stderr > 0 else td == 0.0,
    }
    write_json(config.out_dir / "trajcheck.json", result)
    print(f"trajcheck {config.protocol.label} k={k:g} tau={tau:g} W={w:g}: "
          f"trace_distance={td:.3e} stderr={stderr:.3e} "
          f"3sigma={'ok' if result['within_3_sigma'] else 'EXCEEDED'}")
    return result


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--protocol",
                        choices=[p.label for p in Protocol])
    parser.add_argument("--nk", type=int, help="number of k modes")
    parser.add_argument("--tau-ln-min", dest="tau_ln_min", type=float)
    parser.add_argument("--tau-ln-max", dest="tau_ln_max", type=float)
    parser.add_argument("--tau-ln-count", dest="tau_ln_count", type=int)
    parser.add_argument("--w", type=float, action="append",
                        help="noise amplitude; repeat for several")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="trajectory base seed")
    parser.add_argument("--tol", type=float,
                        help="sets both rel and abs integrator tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xyquench",
        description="Quench-dynamics toolkit for the noisy transverse-field "
                    "XY chain")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="defect-density (tau, W) sweep")
    _add_common(p_sweep)

    p_pk = sub.add_parser("pkscan", help="per-k excitation profile")
    _add_common(p_pk)
    p_pk.add_argument("--tau", type=float, default=math.exp(3.0))
    p_pk.add_argument("--w-point", type=float, default=0.0,
                      help="noise amplitude of the scan point")

    p_fit = sub.add_parser("fit", help="fit report from a sweep CSV")
    p_fit.add_argument("sweep_csv")
    p_fit.add_argument("--report", default=None,
                       help="output JSON path (default: fit.json next to CSV)")
    p_fit.add_argument("--window", type=float, nargs=2, default=(3.0, 5.5),
                       metavar=("LN_MIN", "LN_MAX"))

    p_lz = sub.add_parser("lz", help="LZ mapping table + defect estimate")
    _add_common(p_lz)
    p_lz.add_argument("--tau", type=float, default=math.exp(4.25))

    p_tc = sub.add_parser("trajcheck",
                          help="stochastic-trajectory oracle comparison")
    _add_common(p_tc)
    p_tc.add_argument("--k", type=float, default=0.5)
    p_tc.add_argument("--tau", type=float, default=20.0)
    p_tc.add_argument("--w-point", type=float, default=0.05,
                      help="noise amplitude of the check")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "fit":
            out = Path(args.report) if args.report else \
                Path(args.sweep_csv).parent / "fit.json"
            report, ok = cmd_fit(args.sweep_csv, tuple(args.window), out)
            print(json.dumps(report, indent=2, sort_keys=True))
            return 0 if ok else 3
        config = build_config(args)
        if args.command == "sweep":
            cmd_sweep(config)
        elif args.command == "pkscan":
            cmd_pkscan(config, args.tau, args.w_point)
        elif args.command == "lz":
            cmd_lz(config, args.tau)
        elif args.command == "trajcheck":
            cmd_trajcheck(config, args.k, args.tau, args.w_point)
        return 0
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, InvariantViolation, BoundaryMinimumError,
            DegeneracyError, DomainError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
