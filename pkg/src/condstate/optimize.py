"""Fidelity maximization over ancilla squeezing and SCS amplitude, and parameter sweeps."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .errors import CondStateError, ContractError
from .fock import FockDim, PureState, make_coherent, make_fock
from .gaussian_experiment import ExperimentConfig, predict_experiment, run_experiment
from .numerics import bracketed_max, parallel_map
from .protocol import (
    FULL_WINDOW_SIGMAS,
    ProtocolConfig,
    average_fidelity,
    condition_on_x,
    reflected_sigma,
    success_probability,
)
from .targets import (
    ScsSpec,
    coherent_transform,
    fidelity_scs_closed,
    make_scs,
    output_squeezing,
    squeezed_single_photon,
)

S_RANGE = (-2.0, 0.5)
ENGINE_S_RANGE = (-0.8, 0.3)
GAMMA_RANGE = (0.05, 3.0)
SCS_REFLECTIVITY = 0.5


@lru_cache(maxsize=1024)
def _engine_output(n: int, s: float, n_max: int) -> PureState:
    cfg = ProtocolConfig.fock(n, SCS_REFLECTIVITY, s, dim=FockDim(n_max))
    return condition_on_x(cfg.joint, 0.0).state


def engine_scs_fidelity(n: int, s: float, gamma_abs: float, dim: FockDim = FockDim()) -> float:
    """``X = 0`` fidelity of the ``n``-photon output at ``R = 1/2`` to the SCS with ``gamma = i gamma_abs``."""
    out = _engine_output(int(n), float(s), dim.n_max)
    target = make_scs(ScsSpec.for_photon_number(n, 1j * gamma_abs), dim)
    return float(abs(np.vdot(target.amplitudes, out.amplitudes)) ** 2)


def maximize_over_s(
    n: int,
    gamma_abs: float,
    engine: bool = False,
    s_range: tuple[float, float] | None = None,
    tol: float = 1e-4,
) -> tuple[float, float]:
    """``max_s F_n(X = 0)`` at fixed ``|gamma|``; returns ``(s*, F*)``.

    The closed form is the default objective; ``engine=True`` uses the Fock
    pipeline instead, over a narrower range that fits the default cutoff.
    """
    if not gamma_abs > 0:
        raise ContractError("gamma_abs must be > 0")
    if engine:
        lo, hi = s_range or ENGINE_S_RANGE
        return bracketed_max(lambda s: engine_scs_fidelity(n, s, gamma_abs), lo, hi, tol=tol, n_scan=16)
    lo, hi = s_range or S_RANGE
    return bracketed_max(lambda s: fidelity_scs_closed(n, s, gamma_abs), lo, hi, tol=tol)


def maximize_over_s_and_gamma(
    n: int,
    engine: bool = False,
    gamma_range: tuple[float, float] = GAMMA_RANGE,
    tol: float = 1e-4,
) -> tuple[float, float, float]:
    """Nested maximization, outer over ``|gamma|`` and inner over ``s``; returns ``(s*, gamma*, F*)``."""
    inner = {}

    def outer(g: float) -> float:
        s, f = maximize_over_s(n, g, engine=engine, tol=tol)
        inner[g] = s
        return f

    g_best, f_best = bracketed_max(outer, gamma_range[0], gamma_range[1], tol=tol, n_scan=12 if engine else 30)
    if g_best not in inner:
        outer(g_best)
    return float(inner[g_best]), float(g_best), float(f_best)


# Sweeps.

SWEEP_VARIABLES = ("x0", "s", "gamma", "R", "success_probability")
PROTOCOL_KEYS = {"input", "n", "gamma", "s", "R", "x0", "n_max"}
PROTOCOL_COLUMNS = ("f_ave", "p_s")
EXPERIMENT_COLUMNS = ("f_ave", "p_s", "g_plus", "g_minus", "v_out_plus", "v_out_minus", "p_norm")


@dataclass(frozen=True)
class SweepSpec:
    """Sweep of one variable over ``grid`` with every other parameter in ``fixed``.

    ``kind="protocol"`` reads ``fixed`` keys ``input`` (``"fock"`` or
    ``"coherent"``), ``n``, ``gamma``, ``s``, ``R``, ``x0``, ``n_max``. For Fock
    inputs ``gamma`` is the magnitude of the imaginary SCS target amplitude
    (unused for ``n = 1``); for coherent inputs it is the input amplitude.
    ``kind="experiment"`` reads :class:`ExperimentConfig` fields; ``gamma``
    there sets both input quadrature means. A ``success_probability`` grid is
    realized by solving for the threshold that gives each probability.
    """

    variable: str
    grid: tuple
    fixed: dict = field(default_factory=dict)
    kind: str = "protocol"
    monte_carlo: bool = False

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ContractError(f"sweep variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}")
        grid = tuple(float(g) for g in self.grid)
        if len(grid) < 2 or np.any(np.diff(grid) <= 0):
            raise ContractError("sweep grid must be strictly increasing with at least two points")
        object.__setattr__(self, "grid", grid)
        if self.kind == "protocol":
            unknown = set(self.fixed) - PROTOCOL_KEYS
        elif self.kind == "experiment":
            unknown = set(self.fixed) - set(ExperimentConfig.__dataclass_fields__) - {"gamma"}
        else:
            raise ContractError(f"sweep kind must be 'protocol' or 'experiment', got {self.kind!r}")
        if unknown:
            raise ContractError(f"unknown fixed keys for a {self.kind} sweep: {sorted(unknown)}")

    @property
    def columns(self) -> tuple[str, ...]:
        return PROTOCOL_COLUMNS if self.kind == "protocol" else EXPERIMENT_COLUMNS


def _protocol_point(spec: SweepSpec, value: float) -> dict:
    p = {"input": "fock", "n": 1, "gamma": 1.0, "s": 0.7, "R": 0.98, "x0": 0.025, "n_max": FockDim().n_max}
    p.update(spec.fixed)
    var = spec.variable
    if var in ("x0", "s", "gamma", "R"):
        p[var] = value
    dim = FockDim(int(p["n_max"]))
    if p["input"] == "fock":
        n = int(p["n"])
        state = make_fock(n, dim)
        if n == 1:
            target = squeezed_single_photon(output_squeezing(p["s"], p["R"]), dim)
        else:
            target = make_scs(ScsSpec.for_photon_number(n, 1j * float(p["gamma"])), dim)
    elif p["input"] == "coherent":
        g = complex(*p["gamma"]) if isinstance(p["gamma"], (list, tuple)) else complex(p["gamma"])
        state = make_coherent(g, dim)
        target = coherent_transform(g, p["s"], p["R"]).state(dim)
    else:
        raise ContractError(f"input must be 'fock' or 'coherent', got {p['input']!r}")
    cfg = ProtocolConfig(state, float(p["R"]), float(p["s"]), float(p["x0"]))
    if var == "success_probability":
        cfg = cfg.with_threshold(_threshold_for_probability(cfg, value))
    return {"f_ave": average_fidelity(cfg, target), "p_s": success_probability(cfg), "x0": cfg.threshold}


def _threshold_for_probability(cfg: ProtocolConfig, prob: float) -> float:
    if not 0.0 < prob < 1.0:
        raise ContractError(f"success probability must lie in (0, 1), got {prob}")
    hi = FULL_WINDOW_SIGMAS * reflected_sigma(cfg)
    return float(brentq(lambda x0: success_probability(cfg.with_threshold(x0)) - prob, 1e-9, hi, xtol=1e-12))


def _experiment_point(spec: SweepSpec, value: float) -> dict:
    fixed = dict(spec.fixed)
    base_gamma = fixed.pop("gamma", None)
    cfg = ExperimentConfig.from_dict(fixed)
    var = spec.variable
    if base_gamma is not None:
        cfg = replace(cfg, input_mean=(float(base_gamma), float(base_gamma)))
    if var == "x0":
        cfg = replace(cfg, threshold=value)
    elif var == "R":
        cfg = replace(cfg, reflectivity=value)
    elif var == "gamma":
        cfg = replace(cfg, input_mean=(value, value))
    elif var == "s":
        raise ContractError("experiment sweeps take ancilla variances, not s")
    elif var == "success_probability":
        x0 = brentq(lambda x: predict_experiment(replace(cfg, threshold=x)).success_rate - value, 1e-9, 10.0, xtol=1e-12)
        cfg = replace(cfg, threshold=float(x0))
    rep = run_experiment(cfg) if spec.monte_carlo else predict_experiment(cfg)
    row = {k: getattr(rep, k) for k in EXPERIMENT_COLUMNS if k != "p_s"}
    row["p_s"] = rep.success_rate
    row["x0"] = cfg.threshold
    return row


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[dict]:
    """Evaluate every grid point independently; rows come back in grid order.

    A point whose evaluation raises records the message under ``error`` and
    ``nan`` metrics instead of aborting the sweep.
    """
    point = _protocol_point if spec.kind == "protocol" else _experiment_point

    def one(value: float) -> dict:
        row = {spec.variable: value}
        try:
            row.update(point(spec, value))
            row["error"] = ""
        except CondStateError as exc:
            row.update({k: float("nan") for k in spec.columns})
            row["x0"] = float("nan")
            row["error"] = f"{type(exc).__name__}: {exc}"
        return row

    return parallel_map(one, list(spec.grid), workers)


def write_table_csv(rows: list[dict], path: str | Path, variable: str | None = None) -> None:
    """CSV with the sweep variable first, then metric columns in a stable order."""
    if not rows:
        raise ContractError("nothing to write")
    keys = list(rows[0])
    if variable is not None:
        keys.remove(variable)
        keys.insert(0, variable)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in keys])


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)
