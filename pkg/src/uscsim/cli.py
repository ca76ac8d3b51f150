"""Command-line harness: parse a strict-JSON config, dispatch pipelines,
emit CSV/JSON artifacts.

Commands
--------
derive     derived-parameter table (mode frequencies, couplings, Kerr, qubit)
simulate   flux-modulation master-equation run: CSV time series + JSON summary
sweep      grids: ``--axis drive_freq`` (photon generation vs drive frequency)
           or ``--axis c_q`` (coupling optimizer over the coupler capacitance)
readout    probe-mode homodyne SNR rows: ``--scheme continuous | pulsed``
optimize   single coupling maximization at fixed targets

Configuration is strict JSON: unknown keys are rejected, units are encoded in
the key names (``l_j_nH``, ``freq_GHz``, ...).  Every block is optional except
none at all -- an empty config runs the reference design.  Every emitted file
is accompanied by a ``<file>.meta.json`` sidecar carrying the fully resolved
configuration for provenance.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 integrator failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np

from .circuit import CircuitSpec, validate_spec
from .constants import GHZ, KHZ, MHZ, NS, US
from .dynamics import (DissipationRates, DynamicsEngine, FluxDrive,
                       IntegratorError, SolverConfig, SweepResult)
from .hamiltonian import HilbertConfig
from .modes import derive_parameters
from .optimize import (DEFAULT_BOUNDS, OptimizationProblem, optimize_coupling,
                       sweep_cq)
from .readout import ProbeConfig, continuous_snr, pulsed_snr_curve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_INTEGRATOR = 4


class ConfigError(ValueError):
    """Invalid or malformed run configuration."""


# ---------------------------------------------------------------------------
# configuration schema: block -> key -> default.  ``None`` defaults mean
# "derived at runtime"; list/dict defaults are copied per run.

_SCHEMA = {
    "circuit": {
        "n_junctions": 145,
        "l_j_nH": 1.5,
        "c_j_fF": 30.0,
        "c_0_fF": 0.1,
        "c_q_fF": 85.0,
        "c_s_fF": 63.0,
        "c_i_fF": 26.0,
        "c_e_fF": 72.0,
        "e_j_transmon_GHz": 15.0,
        "flux_bias_phi0": 0.0,
    },
    "rates": {
        "kappa_kHz": 50.0,
        "gamma_kHz": 50.0,
        "gamma_phi_kHz": 50.0,
        "dephasing_power": 2,
    },
    "drive": {
        "amplitude_phi0": 0.35,
        "freq_GHz": 1.5,
        "offset_phi0": 0.0,
        "t_end_ns": 100.0,
    },
    "truncation": {
        "fock_dim": 15,
        "qubit_levels": 5,
        "n_modes": 1,
    },
    "coupling": {
        # optional rescaling of the derived qubit-mode couplings so that
        # g_0 / w_0 hits a prescribed value (weak-coupling presets)
        "g0_over_w0": None,
    },
    "solver": {
        "rtol": 1e-8,
        "atol": 1e-10,
        "max_step_ns": None,
        "sample_dt_ns": None,
        "track_levels": 6,
    },
    "probe": {
        "epsilon_p_MHz": 2.0,
        "pulsed_epsilon_p_MHz": 0.09,
        "kappa2_MHz": 0.35,
        "k02_MHz": -0.54,
        "k22_MHz": -2.46,
        "t_m_us": None,              # default 1 / kappa2
        "tau_ns": 100.0,
        "efficiency": 1.0,
        "n0_mean": 0.5,
        "n0_reference": 0.0535,
        "n_at_quench": 0.5,
        "kappa0_kHz": 50.0,
        "pulsed_method": "quantum",
        "t_m_grid_us": [2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0, 16.0],
        "source_csv": None,          # simulate CSV supplying the n0 record
    },
    "sweep": {
        "freq_min_GHz": 0.5,
        "freq_max_GHz": 3.0,
        "n_points": 11,
        "window_frac": 1.0,
        "c_q_values_fF": [10.0, 25.0, 40.0, 55.0, 70.0, 85.0, 100.0],
        "c_0_values_fF": [0.1, 1.0, 10.0],
    },
    "optimize": {
        "omega0_target_GHz": 2.0,
        "e_c_target_GHz": 0.3,
        "ej_over_ec": 50.0,
        "restarts": 8,
        "n_sweep": 5,
        "penalty_weight": 100.0,
        "bounds": None,              # {"l_j": [lo, hi], ...}, defaults kept
    },
    "output": {
        "path": None,
        "format": None,
    },
}


def load_config(path: Optional[str]) -> dict:
    """Read, validate and default-expand a run configuration."""
    if path is None:
        raw = {}
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        except json.JSONDecodeError as err:
            raise ConfigError(f"config {path} is not valid JSON: {err}") \
                from err
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")

    unknown_blocks = set(raw) - set(_SCHEMA)
    if unknown_blocks:
        raise ConfigError(
            f"unknown config block(s): {sorted(unknown_blocks)}; "
            f"valid blocks: {sorted(_SCHEMA)}")

    resolved = {}
    for block, defaults in _SCHEMA.items():
        given = raw.get(block, {})
        if not isinstance(given, dict):
            raise ConfigError(f"config block {block!r} must be an object")
        unknown = set(given) - set(defaults)
        if unknown:
            raise ConfigError(
                f"unknown key(s) in {block!r}: {sorted(unknown)}; "
                f"valid keys: {sorted(defaults)}")
        merged = {}
        for key, default in defaults.items():
            if key in given:
                merged[key] = given[key]
            elif isinstance(default, (list, dict)):
                merged[key] = type(default)(default)
            else:
                merged[key] = default
        resolved[block] = merged
    return resolved


# -- config -> domain objects ----------------------------------------------


def _circuit_spec(cfg: dict) -> CircuitSpec:
    c = cfg["circuit"]
    try:
        return CircuitSpec(
            n_junctions=int(c["n_junctions"]), l_j=float(c["l_j_nH"]),
            c_j=float(c["c_j_fF"]), c_0=float(c["c_0_fF"]),
            c_q=float(c["c_q_fF"]), c_s=float(c["c_s_fF"]),
            c_i=float(c["c_i_fF"]), c_e=float(c["c_e_fF"]),
            e_j_transmon=float(c["e_j_transmon_GHz"]),
            flux_bias=float(c["flux_bias_phi0"]))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid circuit block: {err}") from err


def _rates(cfg: dict) -> DissipationRates:
    r = cfg["rates"]
    try:
        return DissipationRates(
            kappa=float(r["kappa_kHz"]) * KHZ,
            gamma=float(r["gamma_kHz"]) * KHZ,
            gamma_phi=float(r["gamma_phi_kHz"]) * KHZ,
            dephasing_power=int(r["dephasing_power"]))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid rates block: {err}") from err


def _truncation(cfg: dict) -> HilbertConfig:
    t = cfg["truncation"]
    try:
        return HilbertConfig(
            fock_dim=int(t["fock_dim"]),
            qubit_levels=int(t["qubit_levels"]),
            include_modes=tuple(range(int(t["n_modes"]))))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid truncation block: {err}") from err


def _solver(cfg: dict) -> SolverConfig:
    s = cfg["solver"]
    try:
        return SolverConfig(
            rtol=float(s["rtol"]), atol=float(s["atol"]),
            max_step=None if s["max_step_ns"] is None
            else float(s["max_step_ns"]) * NS,
            sample_dt=None if s["sample_dt_ns"] is None
            else float(s["sample_dt_ns"]) * NS,
            track_levels=int(s["track_levels"]))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid solver block: {err}") from err


def _drive(cfg: dict) -> FluxDrive:
    d = cfg["drive"]
    try:
        return FluxDrive(amplitude=float(d["amplitude_phi0"]),
                         frequency=float(d["freq_GHz"]) * GHZ,
                         offset=float(d["offset_phi0"]))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid drive block: {err}") from err


def _probe(cfg: dict, scheme: str) -> ProbeConfig:
    p = cfg["probe"]
    try:
        kappa2 = float(p["kappa2_MHz"]) * MHZ
        eps_key = "pulsed_epsilon_p_MHz" if scheme == "pulsed" \
            else "epsilon_p_MHz"
        return ProbeConfig(
            epsilon_p=float(p[eps_key]) * MHZ,
            kappa2=kappa2,
            k02=float(p["k02_MHz"]) * MHZ,
            k22=float(p["k22_MHz"]) * MHZ,
            t_m=(1.0 / kappa2 if p["t_m_us"] is None
                 else float(p["t_m_us"]) * US),
            tau=float(p["tau_ns"]) * NS,
            efficiency=float(p["efficiency"]))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid probe block: {err}") from err


def _derived_params(cfg: dict):
    spec = _circuit_spec(cfg)
    issues = [msg for msg in validate_spec(spec)
              if "decouples" not in msg]   # c_q = 0 is a legal degenerate run
    if issues:
        raise ConfigError("; ".join(issues))
    params = derive_parameters(spec)[3]
    target = cfg["coupling"]["g0_over_w0"]
    if target is not None:
        if params.coupling.size == 0 or params.coupling[0] == 0.0:
            raise ConfigError(
                "cannot rescale to a target g0/w0: the derived coupling "
                "is zero")
        scale = float(target) / (params.coupling[0] / params.mode_freq[0])
        params = dataclasses.replace(params,
                                     coupling=params.coupling * scale)
    return spec, params


# -- output helpers ---------------------------------------------------------


def _write_sidecar(path: str, cfg: dict, command: str, seed: int) -> None:
    meta = {"command": command, "seed": seed, "config": cfg}
    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve_out(cfg: dict, args, default_name: str) -> str:
    if args.out:
        return args.out
    if cfg["output"]["path"]:
        return cfg["output"]["path"]
    return default_name


def _resolve_format(cfg: dict, args, default: str) -> str:
    fmt = args.format or cfg["output"]["format"] or default
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown output format {fmt!r}")
    return fmt


# -- commands ---------------------------------------------------------------


def cmd_derive(cfg: dict, args) -> int:
    _, params = _derived_params(cfg)
    report = params.to_json_dict()
    out = _resolve_out(cfg, args, "derived_params.json")
    fmt = _resolve_format(cfg, args, "json")
    if fmt == "json":
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["quantity", "index", "value"])
            for key in sorted(report):
                val = report[key]
                if isinstance(val, list):
                    arr = np.asarray(val).ravel()
                    for i, x in enumerate(arr):
                        writer.writerow([key, i, f"{x:.12g}"])
                else:
                    writer.writerow([key, "", f"{val:.12g}"])
    _write_sidecar(out, cfg, "derive", args.seed)
    print(f"derived-parameter table written to {out}")
    return EXIT_OK


def cmd_simulate(cfg: dict, args) -> int:
    _, params = _derived_params(cfg)
    engine = DynamicsEngine(params, _truncation(cfg), _rates(cfg),
                            _solver(cfg))
    drive = _drive(cfg)
    t_end = float(cfg["drive"]["t_end_ns"]) * NS
    if t_end <= 0:
        raise ConfigError("drive.t_end_ns must be positive")
    result = engine.evolve(drive, t_end)
    out = _resolve_out(cfg, args, "simulation.csv")
    result.to_csv(out)
    summary = {
        "avg_photons": result.avg_photons(),
        "max_photons": result.max_photons(),
        "final_trace": float(result.trace[-1]),
        "t_end_ns": t_end / NS,
    }
    with open(out + ".summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_sidecar(out, cfg, "simulate", args.seed)
    print(f"time series written to {out}; summary: "
          f"max_n={summary['max_photons']:.4f} "
          f"avg_n={summary['avg_photons']:.4f}")
    return EXIT_OK


def _sweep_one_freq(arg):
    engine, freq, amplitude, t_end, window_frac = arg
    try:
        res = engine.evolve(FluxDrive(amplitude=amplitude, frequency=freq),
                            t_end)
        return freq, res.avg_photons(window_frac), res.max_photons(), None
    except (IntegratorError, ValueError, np.linalg.LinAlgError) as exc:
        return freq, math.nan, math.nan, str(exc)


def cmd_sweep(cfg: dict, args) -> int:
    axis = args.axis
    s = cfg["sweep"]
    out = _resolve_out(cfg, args, f"sweep_{axis}.csv")

    if axis == "drive_freq":
        n_points = int(s["n_points"])
        if n_points < 1:
            raise ConfigError("sweep.n_points must be >= 1")
        freqs = np.linspace(float(s["freq_min_GHz"]),
                            float(s["freq_max_GHz"]), n_points) * GHZ
        _, params = _derived_params(cfg)
        engine = DynamicsEngine(params, _truncation(cfg), _rates(cfg),
                                _solver(cfg))
        amplitude = float(cfg["drive"]["amplitude_phi0"])
        t_end = float(cfg["drive"]["t_end_ns"]) * NS
        tasks = [(engine, f, amplitude, t_end, float(s["window_frac"]))
                 for f in freqs]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                rows = list(pool.map(_sweep_one_freq, tasks))
        else:
            rows = [_sweep_one_freq(t) for t in tasks]
        failures = [(f, msg) for f, _, _, msg in rows if msg]
        for f, msg in failures:
            print(f"cell {f / GHZ:.3f} GHz failed: {msg}", file=sys.stderr)
        SweepResult(
            drive_freqs=np.array([r[0] for r in rows]),
            avg_photons=np.array([r[1] for r in rows]),
            max_photons=np.array([r[2] for r in rows])).to_csv(out)
        n_ok = len(rows) - len(failures)
        _write_sidecar(out, cfg, "sweep", args.seed)
        print(f"drive-frequency sweep written to {out} "
              f"({n_ok}/{len(rows)} cells)")
        return EXIT_OK if n_ok >= 0.9 * len(rows) else EXIT_NUMERIC

    # c_q axis: coupling optimizer over the coupler capacitance grid
    cq_values = [float(x) for x in s["c_q_values_fF"]]
    c0_values = [float(x) for x in s["c_0_values_fF"]]
    if not cq_values or not c0_values:
        raise ConfigError("sweep.c_q_values_fF / c_0_values_fF must be "
                          "nonempty")
    problem = _optimize_problem(cfg, args, c_q=cq_values[0],
                                c_0=c0_values[0])
    grid = sweep_cq(problem, cq_values, c0_values)
    grid.to_csv(out)
    obj = grid.objective_grid().ravel()
    n_ok = int(np.isfinite(obj).sum())
    _write_sidecar(out, cfg, "sweep", args.seed)
    print(f"coupler-capacitance sweep written to {out} "
          f"({n_ok}/{obj.size} cells)")
    return EXIT_OK if n_ok >= 0.9 * obj.size else EXIT_NUMERIC


def _load_photon_record(path: str):
    """Read (t [s], n_photons) from a simulate CSV."""
    times, photons = [], []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or \
                    "t_ns" not in reader.fieldnames or \
                    "n_photons" not in reader.fieldnames:
                raise ConfigError(
                    f"{path} lacks t_ns/n_photons columns")
            for row in reader:
                times.append(float(row["t_ns"]) * NS)
                photons.append(float(row["n_photons"]))
    except OSError as err:
        raise ConfigError(f"cannot read photon record {path}: {err}") from err
    if len(times) < 2:
        raise ConfigError(f"photon record {path} has fewer than two samples")
    return np.asarray(times), np.asarray(photons)


def cmd_readout(cfg: dict, args) -> int:
    scheme = args.scheme
    p = cfg["probe"]
    probe = _probe(cfg, scheme)
    out = _resolve_out(cfg, args, f"readout_{scheme}.csv")
    rows = []

    if scheme == "continuous":
        if p["source_csv"]:
            times, n0 = _load_photon_record(p["source_csv"])
        else:
            # stationary modulated population: the probe bandwidth kappa2 is
            # ~four orders below the modulation frequency, so only the mean
            # photon number is visible; model the switch-on as a rise from
            # the undriven reference population over the settling time tau.
            t_grid = np.linspace(0.0, probe.tau + probe.t_m, 4001)
            n_ref = float(p["n0_reference"])
            n0 = n_ref + (float(p["n0_mean"]) - n_ref) * np.clip(
                t_grid / max(probe.tau, 1e-12), 0.0, 1.0)
            times = t_grid
        rec = continuous_snr(times, n0, probe,
                             n0_reference=float(p["n0_reference"]))
        rows.append((scheme, probe.tau / NS, probe.t_m / US, rec.snr,
                     rec.mean_signal, rec.noise))
    else:
        t_m_grid = np.asarray([float(x) for x in p["t_m_grid_us"]]) * US
        if t_m_grid.size == 0:
            raise ConfigError("probe.t_m_grid_us must be nonempty")
        snrs = pulsed_snr_curve(
            n_at_quench=float(p["n_at_quench"]), cfg=probe,
            kappa0=float(p["kappa0_kHz"]) * KHZ,
            t_m_values=t_m_grid,
            n_reference=float(p["n0_reference"]),
            method=str(p["pulsed_method"]))
        for t_m, snr in zip(t_m_grid, snrs):
            noise = math.sqrt(2.0 * probe.kappa2 * t_m / probe.efficiency)
            rows.append((scheme, probe.tau / NS, t_m / US, snr,
                         snr * noise, noise))

    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scheme", "tau_ns", "t_m_us", "snr",
                         "mean_signal", "noise"])
        for row in rows:
            writer.writerow([row[0]] + [f"{x:.8g}" for x in row[1:]])
    _write_sidecar(out, cfg, "readout", args.seed)
    best = max(rows, key=lambda r: r[3])
    print(f"{scheme} readout written to {out}; "
          f"peak SNR {best[3]:.3f} at T_m = {best[2]:.3g} us")
    return EXIT_OK


def _optimize_problem(cfg: dict, args, c_q: Optional[float] = None,
                      c_0: Optional[float] = None) -> OptimizationProblem:
    o = cfg["optimize"]
    bounds = dict(DEFAULT_BOUNDS)
    if o["bounds"] is not None:
        if not isinstance(o["bounds"], dict):
            raise ConfigError("optimize.bounds must be an object")
        unknown = set(o["bounds"]) - set(DEFAULT_BOUNDS)
        if unknown:
            raise ConfigError(f"unknown bound key(s): {sorted(unknown)}")
        for key, pair in o["bounds"].items():
            if (not isinstance(pair, (list, tuple)) or len(pair) != 2):
                raise ConfigError(f"bound {key!r} must be [lo, hi]")
            bounds[key] = (float(pair[0]), float(pair[1]))
    c = cfg["circuit"]
    try:
        return OptimizationProblem(
            omega0_target=float(o["omega0_target_GHz"]) * GHZ,
            e_c_target=float(o["e_c_target_GHz"]) * GHZ,
            c_0=float(c["c_0_fF"]) if c_0 is None else c_0,
            c_q=float(c["c_q_fF"]) if c_q is None else c_q,
            ej_over_ec=float(o["ej_over_ec"]),
            bounds=bounds,
            penalty_weight=float(o["penalty_weight"]),
            restarts=int(o["restarts"]),
            seed=args.seed,
            n_sweep=int(o["n_sweep"]))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid optimize block: {err}") from err


def cmd_optimize(cfg: dict, args) -> int:
    problem = _optimize_problem(cfg, args)
    result = optimize_coupling(problem)
    out = _resolve_out(cfg, args, "optimized.json")
    fmt = _resolve_format(cfg, args, "json")
    row = result.to_row()
    if fmt == "json":
        payload = {"objective_g0_over_w0": result.objective,
                   "feasible": result.feasible,
                   "constraint_residuals": result.constraint_residuals,
                   "best_point": row,
                   "n_evaluations": len(result.trace)}
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            keys = list(row)
            writer.writerow(keys)
            writer.writerow([row[k] for k in keys])
    _write_sidecar(out, cfg, "optimize", args.seed)
    print(f"optimization result written to {out}; "
          f"g0/w0 = {result.objective:.4f} "
          f"({'feasible' if result.feasible else 'infeasible'})")
    return EXIT_OK


# -- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uscsim",
        description="Transmon + junction-array simulator: parameter "
                    "derivation, flux-drive dynamics, coupling optimization "
                    "and probe readout.")
    parser.add_argument("command",
                        choices=["derive", "simulate", "sweep", "readout",
                                 "optimize"])
    parser.add_argument("--config", help="strict-JSON run configuration")
    parser.add_argument("--out", help="output file path")
    parser.add_argument("--format", choices=["csv", "json"])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1,
                        help="max parallel workers for sweeps")
    parser.add_argument("--axis", choices=["drive_freq", "c_q"],
                        default="drive_freq",
                        help="sweep axis (sweep command only)")
    parser.add_argument("--scheme", choices=["continuous", "pulsed"],
                        default="continuous",
                        help="readout scheme (readout command only)")
    return parser


_DISPATCH = {
    "derive": cmd_derive,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "readout": cmd_readout,
    "optimize": cmd_optimize,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        return _DISPATCH[args.command](cfg, args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegratorError as err:
        print(f"integrator failure: {err}", file=sys.stderr)
        return EXIT_INTEGRATOR
    except (ValueError, np.linalg.LinAlgError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
