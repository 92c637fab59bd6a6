"""Command-line entry point: each subcommand runs one pipeline and writes JSON/CSV results plus a manifest.

Exit codes: 0 success, 1 physics failure (truncation, degenerate outcome,
too few samples), 2 invalid flags or scenario contents.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CondStateError, ContractError
from .feedforward import (
    FeedforwardConfig,
    compare_vs_postselection,
    feedforward_output,
    purity_preserving_gain,
    standard_gain,
    write_comparison_csv,
)
from .fock import FockDim, make_coherent, make_fock
from .gaussian_experiment import (
    ExperimentConfig,
    classical_fidelity,
    optimize_classical_noise,
    predict_experiment,
    run_experiment,
)
from .optimize import SweepSpec, maximize_over_s, maximize_over_s_and_gamma, run_sweep, write_table_csv
from .protocol import (
    ProtocolConfig,
    average_fidelity,
    average_state,
    condition_on_x,
    outcome_fidelities,
    probability_density,
    success_probability,
)
from .targets import (
    ScsSpec,
    coherent_transform,
    fidelity_scs_closed,
    make_scs,
    output_squeezing,
    squeezed_single_photon,
    squeezing_db,
)
from .wigner import fidelity_overlap, wigner_grid, wigner_point

OUTPUT_ENV = "CONDSTATE_OUTPUT_DIR"
DEFAULT_OUTPUT = "condstate-out"
SCENARIO_KEYS = {"name", "description", "seed", "version", "runs"}
RUN_KEYS = {"command", "label", "params"}
COMMON = ("n_max", "workers", "grid_points", "extent")


class UsageError(Exception):
    """Invalid flags or scenario contents (exit code 2)."""


# Helpers.


def _complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise UsageError(f"complex value must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError as exc:
            raise UsageError(f"cannot parse complex number {value!r}") from exc
    return complex(value)


def _float_or_inf(value) -> float:
    if isinstance(value, str) and value.lower() in ("inf", "infinity", "full"):
        return float("inf")
    return float(value)


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=False) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _axis(p) -> np.ndarray:
    return np.linspace(-float(p["extent"]), float(p["extent"]), int(p["grid_points"]))


def _dim(p) -> FockDim:
    return FockDim(int(p["n_max"]))


def _save_wigner(state, p, path: Path) -> dict:
    if int(p["grid_points"]) <= 0:
        return {}
    grid = wigner_grid(state, _axis(p), workers=int(p["workers"]))
    grid.to_csv(path)
    return {"wigner_csv": path.name, "wigner_min": grid.minimum(), "wigner_integral": grid.integral()}


# Commands. Each takes the resolved parameter dict and the output directory.


def cmd_squeeze_photon(p: dict, out: Path) -> dict:
    dim = _dim(p)
    s, R, x0 = float(p["s"]), float(p["R"]), float(p["x0"])
    cfg = ProtocolConfig(make_fock(1, dim), R, s, x0)
    sp = output_squeezing(s, R)
    target = squeezed_single_photon(sp, dim)
    x_state = condition_on_x(cfg.joint, 0.0).state
    summary = {
        "s_prime": sp,
        "s_prime_db": squeezing_db(sp),
        "fidelity_x0": fidelity_overlap(x_state, target),
    }
    if x0 > 0:
        avg = average_state(cfg, int(p["workers"]))
        summary.update(f_ave=average_fidelity(cfg, target), p_s=success_probability(cfg))
        summary.update(_save_wigner(avg, p, out / "wigner_average.csv"))
    else:
        summary.update(f_ave=summary["fidelity_x0"], p_s=0.0)
        summary.update(_save_wigner(x_state, p, out / "wigner_x0.csv"))
    outcomes = []
    for i, x in enumerate(p["outcomes"]):
        o = condition_on_x(cfg.joint, float(x))
        entry = {"x": float(x), "density": o.density, "fidelity": fidelity_overlap(o.state, target)}
        entry.update(_save_wigner(o.state, p, out / f"wigner_outcome_{i}.csv"))
        outcomes.append(entry)
    summary["outcomes"] = outcomes
    return summary


def cmd_fock_to_scs(p: dict, out: Path) -> dict:
    dim = _dim(p)
    n, s, R, x0 = int(p["n"]), float(p["s"]), float(p["R"]), float(p["x0"])
    g = abs(_complex(p["gamma"]))
    cfg = ProtocolConfig(make_fock(n, dim), R, s, x0)
    target = make_scs(ScsSpec.for_photon_number(n, 1j * g), dim)
    x_state = condition_on_x(cfg.joint, 0.0).state
    pops = x_state.populations
    summary = {
        "parity": ScsSpec.for_photon_number(n, 1j * g).parity,
        "fidelity_x0": fidelity_overlap(x_state, target),
        "opposite_parity_population": float(np.sum(pops[(np.arange(dim.size) + n) % 2 == 1])),
    }
    if n in (2, 3, 4) and R == 0.5:
        summary["fidelity_closed"] = fidelity_scs_closed(n, s, g)
    if x0 > 0:
        summary.update(f_ave=average_fidelity(cfg, target), p_s=success_probability(cfg))
        summary.update(_save_wigner(average_state(cfg, int(p["workers"])), p, out / "wigner_average.csv"))
    else:
        summary.update(f_ave=summary["fidelity_x0"], p_s=0.0)
        summary.update(_save_wigner(x_state, p, out / "wigner_x0.csv"))
    return summary


def cmd_coherent(p: dict, out: Path) -> dict:
    dim = _dim(p)
    g = _complex(p["gamma"])
    s, R, x0 = float(p["s"]), float(p["R"]), float(p["x0"])
    cfg = ProtocolConfig(make_coherent(g, dim), R, s, x0)
    pred = coherent_transform(g, s, R)
    target = pred.state(dim)
    x_state = condition_on_x(cfg.joint, 0.0).state
    summary = {
        "predicted_mean": pred.mean_out,
        "s_prime": pred.s_prime,
        "fidelity_x0": fidelity_overlap(x_state, target),
        "purity_x0": x_state.density().purity,
    }
    if x0 > 0:
        avg = average_state(cfg, int(p["workers"]))
        summary.update(f_ave=average_fidelity(cfg, target), p_s=success_probability(cfg), purity_ave=avg.purity)
        summary.update(_save_wigner(avg, p, out / "wigner_average.csv"))
    else:
        summary.update(_save_wigner(x_state, p, out / "wigner_x0.csv"))
    return summary


def cmd_feedforward(p: dict, out: Path) -> dict:
    dim = _dim(p)
    s, R = float(p["s"]), float(p["R"])
    mode = p["gain_mode"]
    if mode == "standard":
        gain = standard_gain(R)
    elif mode == "purity":
        gain = purity_preserving_gain(s, R)
    elif mode == "value":
        gain = float(p["gain"])
    else:
        raise UsageError(f"gain_mode must be standard, purity or value, got {mode!r}")
    if p["input"] == "fock1":
        state = make_fock(1, dim)
        target = squeezed_single_photon(output_squeezing(s, R), dim)
    elif p["input"] == "coherent":
        g = _complex(p["gamma"])
        state = make_coherent(g, dim)
        target = coherent_transform(g, s, R).state(dim)
    else:
        raise UsageError(f"input must be fock1 or coherent, got {p['input']!r}")
    runs = []
    for i, x0 in enumerate(p["x0"]):
        x0 = _float_or_inf(x0)
        rho = feedforward_output(FeedforwardConfig(gain, R, s, x0), state, int(p["workers"]))
        entry = {"x0": x0, "f_ave": fidelity_overlap(rho, target), "w_origin": wigner_point(rho, 0.0)}
        if x0 < np.inf:
            entry["p_s"] = success_probability(ProtocolConfig(state, R, s, x0))
        entry.update(_save_wigner(rho, p, out / f"wigner_feedforward_{i}.csv"))
        runs.append(entry)
    return {"gain": gain, "runs": runs}


def cmd_ff_compare(p: dict, out: Path) -> dict:
    grid = _grid(p["s_grid"])
    summary = {"curves": []}
    for g in p["gammas"]:
        g = _complex(g)
        rows = compare_vs_postselection(g, grid, float(p["R"]), float(p["x0"]), float(p["s_prime_target"]), p["gain_mode"])
        name = f"compare_gamma_{abs(g):g}.csv"
        write_comparison_csv(rows, out / name)
        summary["curves"].append({"gamma": g, "csv": name})
    return summary


def cmd_classical_limit(p: dict, out: Path) -> dict:
    R = float(p["R"])
    mean = _complex(p["mean"])
    f, nu = optimize_classical_noise(R, mean)
    return {"f_clas": f, "nu_opt": nu, "f_vacuum_ancilla": classical_fidelity(R, 0.0, mean)}


def _experiment_config(p: dict) -> ExperimentConfig:
    src = p["config"]
    if src is None:
        data = {}
    elif isinstance(src, dict):
        data = dict(src)
    else:
        try:
            data = json.loads(Path(src).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read experiment config {src!r}: {exc}") from exc
    if isinstance(data.get("input_mean"), list):
        data["input_mean"] = tuple(data["input_mean"])
    cfg = ExperimentConfig.from_dict(data)
    if p["seed"] is not None:
        cfg = replace(cfg, seed=int(p["seed"]))
    if p["n_samples"] is not None:
        cfg = replace(cfg, n_samples=int(p["n_samples"]))
    return cfg


def cmd_experiment(p: dict, out: Path) -> dict:
    cfg = _experiment_config(p)
    samples = out / "samples.csv" if p["samples"] else None
    rep = run_experiment(cfg, int(p["workers"]), samples_path=samples)
    rep.to_json(out / "report.json")
    pred = predict_experiment(cfg)
    pred.to_json(out / "prediction.json")
    return {"config": cfg.to_dict(), "report": rep.to_dict(), "stderr": rep.stderr, "prediction": pred.to_dict()}


def _grid(spec) -> list[float]:
    if isinstance(spec, dict):
        unknown = set(spec) - {"start", "stop", "num"}
        if unknown:
            raise UsageError(f"unknown grid keys {sorted(unknown)}")
        return list(np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"])))
    return [float(v) for v in spec]


def _parse_fixed(items) -> dict:
    if isinstance(items, dict):
        return dict(items)
    fixed = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--fixed expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            fixed[k] = json.loads(v)
        except json.JSONDecodeError:
            fixed[k] = v
    return fixed


def cmd_sweep(p: dict, out: Path) -> dict:
    if p["scenario"]:
        try:
            data = json.loads(Path(p["scenario"]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read sweep file {p['scenario']!r}: {exc}") from exc
        unknown = set(data) - {"variable", "grid", "fixed", "kind", "monte_carlo", "series"}
        if unknown:
            raise UsageError(f"unknown sweep keys {sorted(unknown)}")
        p = {**p, "fixed": {}, "series": None, **data}
    if p["variable"] is None or p["grid"] is None:
        raise UsageError("sweep needs a variable and a grid (flags or --scenario)")
    fixed = _parse_fixed(p["fixed"])
    series = p["series"] or {"table": {}}
    tables = []
    for label, overrides in series.items():
        spec = SweepSpec(p["variable"], tuple(_grid(p["grid"])), {**fixed, **overrides}, p["kind"], bool(p["monte_carlo"]))
        rows = run_sweep(spec, int(p["workers"]))
        name = f"{label}.csv"
        write_table_csv(rows, out / name, spec.variable)
        tables.append({"label": label, "csv": name, "errors": sum(1 for r in rows if r["error"])})
    return {"tables": tables}


def cmd_optimize(p: dict, out: Path) -> dict:
    ns = [int(n) for n in p["n"]]
    engine = bool(p["engine"])
    optima = []
    for n in ns:
        s, g, f = maximize_over_s_and_gamma(n, engine=engine)
        optima.append({"n": n, "s_star": s, "gamma_star": g, "f_star": f, "s_star_db": squeezing_db(s)})
    summary = {"optima": optima}
    if p["gamma_grid"] is not None:
        gammas = _grid(p["gamma_grid"])
        rows = []
        for g in gammas:
            row = {"gamma": g}
            for n in ns:
                s, f = maximize_over_s(n, g, engine=engine)
                row[f"s_star_{n}"] = s
                row[f"f_{n}"] = f
            rows.append(row)
        write_table_csv(rows, out / "curve.csv", "gamma")
        summary["curve_csv"] = "curve.csv"
    return summary


COMMANDS = {
    "squeeze-photon": cmd_squeeze_photon,
    "fock-to-scs": cmd_fock_to_scs,
    "coherent": cmd_coherent,
    "feedforward": cmd_feedforward,
    "ff-compare": cmd_ff_compare,
    "classical-limit": cmd_classical_limit,
    "experiment": cmd_experiment,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
}


# Parser.


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--n-max", type=int, default=FockDim().n_max, help="photon-number cutoff")
    sp.add_argument("--workers", type=int, default=1, help="worker threads")
    sp.add_argument("--grid-points", type=int, default=161, help="Wigner grid points per axis (0 disables)")
    sp.add_argument("--extent", type=float, default=4.0, help="Wigner grid half-width")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="condstate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"condstate {__version__}")
    parser.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("squeeze-photon", help="squeeze a single photon")
    sp.add_argument("--s", type=float, default=0.7)
    sp.add_argument("--R", type=float, default=0.98)
    sp.add_argument("--x0", type=float, default=0.025)
    sp.add_argument("--outcomes", type=float, nargs="*", default=[], help="also report these single outcomes X")
    _add_common(sp)

    sp = sub.add_parser("fock-to-scs", help="convert a Fock state to an SCS")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--s", type=float, default=-0.37)
    sp.add_argument("--gamma", type=float, default=1.1, help="magnitude of the imaginary SCS amplitude")
    sp.add_argument("--R", type=float, default=0.5)
    sp.add_argument("--x0", type=float, default=0.0)
    _add_common(sp)

    sp = sub.add_parser("coherent", help="squeeze a coherent state")
    sp.add_argument("--gamma", default="1+0.5j", help="complex amplitude, e.g. 1+0.5j")
    sp.add_argument("--s", type=float, default=0.52)
    sp.add_argument("--R", type=float, default=0.75)
    sp.add_argument("--x0", type=float, default=0.0)
    _add_common(sp)

    sp = sub.add_parser("feedforward", help="feedforward correction instead of post-selection")
    sp.add_argument("--input", choices=["fock1", "coherent"], default="fock1")
    sp.add_argument("--gamma", default="0", help="coherent amplitude when --input coherent")
    sp.add_argument("--s", type=float, default=0.7)
    sp.add_argument("--R", type=float, default=0.98)
    sp.add_argument("--x0", nargs="+", default=["inf"], help="one or more windows; inf keeps every outcome")
    sp.add_argument("--gain-mode", choices=["standard", "purity", "value"], default="value")
    sp.add_argument("--gain", type=float, default=1.0)
    _add_common(sp)

    sp = sub.add_parser("ff-compare", help="feedforward vs post-selection for coherent inputs")
    sp.add_argument("--gammas", nargs="+", default=["0.5", "1", "2"])
    sp.add_argument("--s-grid", type=float, nargs="+", default=list(np.round(np.linspace(0, 2, 41), 6)))
    sp.add_argument("--R", type=float, default=0.5)
    sp.add_argument("--x0", type=float, default=0.025)
    sp.add_argument("--s-prime-target", type=float, default=float(np.log(2) / 2))
    sp.add_argument("--gain-mode", choices=["standard", "purity"], default="standard")
    _add_common(sp)

    sp = sub.add_parser("classical-limit", help="classical fidelity benchmark")
    sp.add_argument("--R", type=float, default=0.75)
    sp.add_argument("--mean", default="0", help="input coherent amplitude")
    _add_common(sp)

    sp = sub.add_parser("experiment", help="Monte Carlo of the optical experiment")
    sp.add_argument("--config", default=None, help="JSON file of experiment parameters")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--n-samples", type=int, default=None)
    sp.add_argument("--samples", action="store_true", help="dump samples.csv")
    _add_common(sp)

    sp = sub.add_parser("sweep", help="sweep one parameter")
    sp.add_argument("--scenario", default=None, help="JSON file with variable, grid, fixed, kind, series")
    sp.add_argument("--variable", default=None)
    sp.add_argument("--grid", type=float, nargs="+", default=None)
    sp.add_argument("--fixed", nargs="*", default=[], help="key=value pairs (values parsed as JSON)")
    sp.add_argument("--kind", choices=["protocol", "experiment"], default="protocol")
    sp.add_argument("--monte-carlo", action="store_true")
    sp.set_defaults(series=None)
    _add_common(sp)

    sp = sub.add_parser("optimize", help="maximize SCS fidelity over s and |gamma|")
    sp.add_argument("--n", type=int, nargs="+", default=[2, 3, 4])
    sp.add_argument("--engine", action="store_true", help="optimize the Fock pipeline instead of the closed forms")
    sp.add_argument("--gamma-grid", type=float, nargs="+", default=None)
    _add_common(sp)

    sp = sub.add_parser("run", help="run a scenario or manifest file")
    sp.add_argument("scenario")
    sp.add_argument("--workers", type=int, default=None, help="override the worker count of every run")
    return parser


def _defaults(parser: argparse.ArgumentParser, command: str) -> dict:
    sub = next(a for a in parser._subparsers._group_actions if isinstance(a, argparse._SubParsersAction))
    sp = sub.choices[command]
    return {a.dest: a.default for a in sp._actions if a.dest != "help"} | {
        k: v for k, v in sp._defaults.items()
    }


def _output_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def _execute(command: str, params: dict, out: Path, seed=None) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    summary = COMMANDS[command](params, out)
    _write_json(out / "summary.json", summary)
    manifest = {
        "name": command,
        "version": __version__,
        "seed": params.get("seed", seed),
        "runs": [{"command": command, "params": _jsonable(params)}],
    }
    _write_json(out / "manifest.json", manifest)
    return summary


def load_scenario(path: str | Path, parser: argparse.ArgumentParser | None = None) -> dict:
    """Read and validate a scenario file; every run's parameters are resolved against the command defaults."""
    parser = parser or build_parser()
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read scenario {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("scenario must be a JSON object")
    unknown = set(data) - SCENARIO_KEYS
    if unknown:
        raise UsageError(f"unknown scenario keys {sorted(unknown)}")
    runs = data.get("runs")
    if not isinstance(runs, list) or not runs:
        raise UsageError("scenario needs a non-empty 'runs' list")
    resolved = []
    for i, run in enumerate(runs):
        unknown = set(run) - RUN_KEYS
        if unknown:
            raise UsageError(f"unknown keys {sorted(unknown)} in run {i}")
        command = run.get("command")
        if command not in COMMANDS:
            raise UsageError(f"run {i}: unknown command {command!r}")
        defaults = _defaults(parser, command)
        params = run.get("params", {})
        bad = set(params) - set(defaults)
        if bad:
            raise UsageError(f"run {i} ({command}): unknown parameters {sorted(bad)}")
        if "seed" in defaults and params.get("seed") is None and data.get("seed") is not None:
            params = {**params, "seed": data["seed"]}
        resolved.append({"command": command, "label": run.get("label", f"{i:02d}_{command}"), "params": {**defaults, **params}})
    return {"name": data.get("name", Path(path).stem), "seed": data.get("seed"), "runs": resolved}


def run_scenario(path: str | Path, out: Path, parser: argparse.ArgumentParser | None = None, workers: int | None = None) -> list[dict]:
    scenario = load_scenario(path, parser)
    if workers is not None:
        for run in scenario["runs"]:
            run["params"]["workers"] = int(workers)
    single = len(scenario["runs"]) == 1
    results = []
    for run in scenario["runs"]:
        target = out if single else out / run["label"]
        results.append(_execute(run["command"], run["params"], target, scenario["seed"]))
    return results


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = _output_dir(args.out)
    try:
        if args.command == "run":
            run_scenario(args.scenario, out, parser, args.workers)
        else:
            params = {k: v for k, v in vars(args).items() if k not in ("command", "out")}
            _execute(args.command, params, out)
    except (UsageError, ContractError, ValueError, TypeError, KeyError) as exc:
        print(f"condstate: error: {exc}", file=sys.stderr)
        return 2
    except CondStateError as exc:
        print(f"condstate: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"condstate: wrote results to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
