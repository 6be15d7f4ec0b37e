"""Command-line front end: scenario selection, configs, deterministic runs.

Every run writes its data, a JSON summary, and a manifest under a
directory named by the scenario, the config hash, and the seed.  Exit
codes: 0 when all numerical checks pass, 1 on failed convergence or
invariant checks, 2 on configuration errors.
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import experiments as xp
from . import runio
from .presets import PRESETS

ENV_OUT_DIR = "USCHARVEST_OUT"


def load_config(path):
    """Parse a JSON config file into {scenario, config} form."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise xp.ConfigError([f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"])
    if not isinstance(data, dict):
        raise xp.ConfigError([f"{path}: config must be a JSON object"])
    if "scenario" in data or "config" in data:
        return data.get("scenario"), dict(data.get("config", {}))
    return None, data


def _parse_override(text):
    key, sep, raw = text.partition("=")
    if not sep:
        raise xp.ConfigError([f"override {text!r} is not key=value"])
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _merge_config(args, scenario):
    mapping = {}
    if args.preset:
        if args.preset not in PRESETS:
            raise xp.ConfigError(
                [f"unknown preset {args.preset!r}; available: "
                 f"{', '.join(sorted(PRESETS))}"])
        preset = PRESETS[args.preset]
        if preset["scenario"] != scenario:
            raise xp.ConfigError(
                [f"preset {args.preset!r} belongs to scenario "
                 f"{preset['scenario']!r}, not {scenario!r}"])
        mapping.update(json.loads(json.dumps(preset["config"])))
    if args.config:
        file_scenario, file_cfg = load_config(args.config)
        if file_scenario and file_scenario != scenario:
            raise xp.ConfigError(
                [f"config file is for scenario {file_scenario!r}"])
        _deep_update(mapping, file_cfg)
    for text in args.set or []:
        key, value = _parse_override(text)
        target = mapping
        parts = key.split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
        target[parts[-1]] = value
    return mapping


def _deep_update(base, extra):
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value


def _field_names(cls):
    return {f.name for f in dataclasses.fields(cls)}


def _build(scenario, mapping, seed):
    """Construct the scenario config dataclass (nested where applicable)."""
    nested = {"sweep": xp.SweepConfig, "thermal": xp.ThermalScanConfig,
              "disorder": xp.DisorderConfig}
    flat = {"harvest": xp.GroundHarvestConfig, "singlet": xp.SingletConfig,
            "protect": xp.ProtectionConfig,
            "dissipative": xp.DissipativeConfig, "fluxmap": xp.FluxMapConfig,
            "fluxpath": xp.FluxPathConfig, "spectrum": xp.SpectrumConfig}
    mapping = dict(mapping)
    if scenario in nested:
        base_map = dict(mapping.pop("base", {}))
        if seed is not None and "seed" in _field_names(xp.GroundHarvestConfig):
            base_map.setdefault("seed", seed)
        base = xp.config_from_mapping(xp.GroundHarvestConfig, base_map)
        for key, value in mapping.items():
            if isinstance(value, list):
                mapping[key] = tuple(value)
        cls = nested[scenario]
        if seed is not None and "seed" in _field_names(cls):
            mapping.setdefault("seed", seed)
        return xp.config_from_mapping(cls, {**mapping, "base": base})
    cls = flat[scenario]
    for key, value in mapping.items():
        if isinstance(value, list):
            mapping[key] = tuple(value)
    if seed is not None and "seed" in _field_names(cls):
        mapping.setdefault("seed", seed)
    return xp.config_from_mapping(cls, mapping)


def _config_echo(cfg):
    return xp.config_to_mapping(cfg)


# ---------------------------------------------------------------------------
# per-scenario output writers


def _write_trajectory(run_dir, traj, name="trajectory.csv"):
    path = os.path.join(run_dir, name)
    traj.write_csv(path)
    return path


def _run_harvest(cfg, args, run_dir):
    result = xp.run_ground_harvest(cfg, workers=args.threads)
    outputs = [_write_trajectory(run_dir, result.trajectory)]
    return result.summary(), result.convergence, outputs


def _run_sweep(cfg, args, run_dir):
    result = xp.sweep_eef(cfg, workers=args.threads)
    path = os.path.join(run_dir, "sweep.csv")
    runio.write_csv(path, ("g_min", "t4", "eef"), result.rows())
    return result.summary(), result.convergence, [path]


def _run_thermal(cfg, args, run_dir):
    result = xp.thermal_scan(cfg, workers=args.threads)
    path = os.path.join(run_dir, "thermal.csv")
    runio.write_csv(path, ("temperature", "eef", "ground_manifold_pop"),
                    result.rows())
    return result.summary(), result.convergence, [path]


def _run_singlet(cfg, args, run_dir):
    result = xp.run_singlet_harvest(cfg, workers=args.threads)
    outputs = [_write_trajectory(run_dir, result.trajectory)]
    return result.summary(), result.convergence, outputs


def _run_protect(cfg, args, run_dir):
    result = xp.protection_scan(cfg, workers=args.threads)
    path = os.path.join(run_dir, "protection.csv")
    header = ("t",) + tuple(f"mean_s2_gf_{g}" for g in cfg.g_f_values)
    rows = zip(result.t, *(result.mean_s2[g] for g in cfg.g_f_values))
    runio.write_csv(path, header, rows)
    return result.summary(), result.convergence, [path]


def _run_disorder(cfg, args, run_dir):
    result = xp.disorder_monte_carlo(cfg, workers=args.threads)
    path = os.path.join(run_dir, "mean_trajectory.csv")
    names = ("t", "fidelity", "purity", "entropy_qubits",
             "entropy_single_qubit", "S2_expectation", "top_fock_population")
    rows = zip(result.t, *(result.mean_columns[c] for c in names[1:]))
    runio.write_csv(path, names, rows)
    return result.summary(), result.convergence, [path]


def _run_dissipative(cfg, args, run_dir):
    result = xp.dissipative_harvest(cfg, workers=args.threads)
    outputs = [_write_trajectory(run_dir, result.trajectory)]
    summary = result.summary()
    if result.trace_drift > 1e-6:
        summary["trace_check_passed"] = False
    return summary, result.convergence, outputs


def _run_fluxmap(cfg, args, run_dir):
    from .fluxqubit import write_landscape_csv
    result = xp.flux_map(cfg, workers=args.threads)
    path = os.path.join(run_dir, "landscape.csv")
    write_landscape_csv(path, result.f_alpha, result.f_beta,
                        result.omega_map, result.g_map)
    return result.summary(), result.convergence, [path]


def _run_fluxpath(cfg, args, run_dir):
    from .fluxqubit import write_path_csv
    result = xp.flux_path_harvest(cfg, workers=args.threads)
    path = os.path.join(run_dir, "path.csv")
    write_path_csv(path, result.columns)
    outputs = [path, _write_trajectory(run_dir, result.trajectory)]
    return result.summary(), result.convergence, outputs


def _run_spectrum(cfg, args, run_dir):
    result = xp.spectrum_scan(cfg, workers=args.threads)
    path = os.path.join(run_dir, "spectrum.csv")
    rows = [tuple("" if isinstance(v, float) and np.isnan(v) else v
                  for v in row) for row in result.rows]
    runio.write_csv(path, result.header, rows)
    return result.summary(), result.convergence, [path]


SCENARIOS = {
    "spectrum": _run_spectrum,
    "harvest": _run_harvest,
    "sweep": _run_sweep,
    "thermal": _run_thermal,
    "singlet": _run_singlet,
    "protect": _run_protect,
    "disorder": _run_disorder,
    "dissipative": _run_dissipative,
    "fluxmap": _run_fluxmap,
    "fluxpath": _run_fluxpath,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="uscharvest",
        description="Entanglement harvesting in strongly coupled "
                    "multiqubit circuit QED: simulation scenarios")
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in SCENARIOS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--preset", help="named preset (fig2b, fig3b, ...)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", default=None, help="output root directory")
        p.add_argument("--n-fock", type=int, default=None, dest="n_fock")
        p.add_argument("--n-qubits", type=int, default=None, dest="n_qubits")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any config field (dotted for nested)")
        p.add_argument("--no-convergence-check", action="store_true")
        if name == "spectrum":
            p.add_argument("--g-range", default=None,
                           help="start:stop:step coupling grid")
    val = sub.add_parser("validate")
    val.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.scenario == "validate":
        from .validation import run_all
        return 0 if run_all(verbose=True) else 1

    try:
        mapping = _merge_config(args, args.scenario)
        nested = args.scenario in ("sweep", "thermal", "disorder")
        sub = mapping.setdefault("base", {}) if nested else mapping
        if args.n_qubits is not None:
            sub["n_qubits"] = args.n_qubits
        if args.n_fock is not None:
            sub["n_fock"] = args.n_fock
        if args.no_convergence_check:
            sub["check_convergence"] = False
        if args.scenario == "spectrum" and args.g_range:
            try:
                start, stop, step = map(float, args.g_range.split(":"))
            except ValueError:
                raise xp.ConfigError(
                    [f"--g-range must be start:stop:step, got {args.g_range!r}"])
            mapping.update(g_start=start, g_stop=stop, g_step=step)
        cfg = _build(args.scenario, mapping, args.seed)
    except xp.ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2

    echo = _config_echo(cfg)
    seed = args.seed if args.seed is not None else echo.get("seed", 0)
    out_root = args.out or os.environ.get(ENV_OUT_DIR, "runs")
    run_dir = runio.run_directory(out_root, args.scenario, echo, seed)

    with runio.StopWatch() as watch:
        summary, convergence, outputs = SCENARIOS[args.scenario](
            cfg, args, run_dir)
    summary_path = os.path.join(run_dir, "summary.json")
    runio.write_json(summary_path, summary)
    outputs = outputs + [summary_path]
    runio.write_manifest(run_dir, args.scenario, echo, seed,
                         [os.path.basename(p) for p in outputs],
                         convergence, watch.elapsed)
    print(f"run directory: {run_dir}")
    print(json.dumps(summary, indent=1, sort_keys=True))

    failed = convergence.get("checked") and not convergence.get("passed", True)
    failed |= summary.get("trace_check_passed") is False
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
