"""Feedforward baseline: displace the transmitted mode by ``g * X`` instead of discarding outcomes."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ContractError, DegenerateOutcomeError, TruncationError
from .fock import TRUNCATION_TOL, DensityOperator, FockDim, PureState, annihilation, padded_size
from .gaussian_experiment import (
    GaussianState,
    _conditioning,
    fidelity_overlap_gaussian,
    gaussian_bs,
)
from .numerics import gauss_legendre
from .protocol import MIN_WINDOW_PROBABILITY, ProtocolConfig, _window


@dataclass(frozen=True)
class FeedforwardConfig:
    """Electronic gain ``g``, beam splitter, ancilla squeezing and an optional window (``inf`` keeps all)."""

    gain: float
    reflectivity: float
    squeezing: float
    threshold: float = np.inf

    def __post_init__(self):
        if not np.isfinite(self.gain):
            raise ContractError(f"gain must be finite, got {self.gain}")
        if not self.threshold > 0:
            raise ContractError("feedforward threshold must be > 0")

    def protocol(self, input_state: PureState) -> ProtocolConfig:
        return ProtocolConfig(input_state, self.reflectivity, self.squeezing, self.threshold)


def standard_gain(R: float) -> float:
    """``g = sqrt(R/T)``, which moves a coherent input to the ideally squeezed centre on ``X+``."""
    R = float(R)
    if not 0.0 <= R < 1.0:
        raise ContractError(f"standard gain needs 0 <= R < 1, got {R}")
    return float(np.sqrt(R / (1.0 - R)))


def purity_preserving_gain(s: float, R: float) -> float:
    """``g = (1 - e^{-2s}) sqrt(RT) / (e^{-2s} R + T)``, which removes the outcome dependence of the mean."""
    T = 1.0 - float(R)
    e = np.exp(-2.0 * float(s))
    return float((1.0 - e) * np.sqrt(R * T) / (e * R + T))


@lru_cache(maxsize=4)
def _displacement_eig(size: int):
    # a^dag - a is real antisymmetric; i(a^dag - a) is Hermitian
    a = annihilation(size)
    vals, vecs = np.linalg.eigh(1j * (a.T - a))
    return vals, vecs


def _displace_real(vectors: np.ndarray, shifts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Apply ``D(shift_k)`` (real shifts) to column ``k``; returns vectors and each column's lost mass."""
    size = vectors.shape[0]
    big = padded_size(FockDim(size - 1))
    vals, vecs = _displacement_eig(big)
    padded = np.zeros((big, vectors.shape[1]), dtype=complex)
    padded[:size] = vectors
    coeffs = vecs.conj().T @ padded
    # exp(shift (a^dag - a)) = V exp(-i shift lambda) V^dag
    out = vecs @ (np.exp(-1j * np.outer(vals, shifts)) * coeffs)
    return out[:size], np.sum(np.abs(out[size:]) ** 2, axis=0)


def feedforward_output(config: FeedforwardConfig, input_state: PureState, workers: int = 1) -> DensityOperator:
    """Outcome-averaged state after the correction ``D(g X)`` on the transmitted mode.

    A finite ``threshold`` keeps only ``|X| < x0`` as in post-selection; the
    full range uses 128 nodes over six reflected standard deviations.
    """
    proto = config.protocol(input_state)
    win = _window(proto, workers)
    p = win.probability
    if not p >= MIN_WINDOW_PROBABILITY:
        raise DegenerateOutcomeError(f"feedforward window has probability {p:.3e}")
    vecs, lost_cols = _displace_real(win.vectors, config.gain * win.xs)
    lost = float(np.dot(win.weights, lost_cols) / p)
    if lost >= TRUNCATION_TOL:
        raise TruncationError(f"feedforward displacement loses {lost:.3e} above n_max", lost=lost)
    rho = (vecs * win.weights) @ vecs.conj().T / p
    return DensityOperator(0.5 * (rho + rho.conj().T), proto.dim)


def feedforward_fidelity(config: FeedforwardConfig, input_state: PureState, target: PureState) -> float:
    rho = np.asarray(feedforward_output(config, input_state).matrix)
    t = target.amplitudes
    return float(np.real(np.vdot(t, rho @ t)))


# Gaussian comparison against post-selection.


def _gaussian_joint(gamma: complex, s: float, R: float) -> GaussianState:
    return gaussian_bs(GaussianState.coherent(gamma), GaussianState.squeezed(s), R)


def gaussian_postselection_fidelity(gamma: complex, s: float, R: float, x0: float, target: GaussianState) -> float:
    """Window-averaged fidelity of post-selected outputs for a coherent input."""
    joint = _gaussian_joint(gamma, s, R)
    keep, coef, cov, mu, var = _conditioning(joint, 1)
    xs, ws = gauss_legendre(-x0, x0, 64)
    dens = np.exp(-0.5 * (xs - mu) ** 2 / var) / np.sqrt(2 * np.pi * var)
    fids = [fidelity_overlap_gaussian(GaussianState(joint.mean[keep] + coef * (x - mu), cov), target) for x in xs]
    return float(np.dot(ws * dens, fids) / np.dot(ws, dens))


def gaussian_feedforward_fidelity(gamma: complex, s: float, R: float, gain: float, target: GaussianState) -> float:
    """Full-window feedforward fidelity; the averaged output is Gaussian because the correction is linear in X."""
    joint = _gaussian_joint(gamma, s, R)
    keep, coef, cov, mu, var = _conditioning(joint, 1)
    slope = coef + np.array([gain, 0.0])
    mean = joint.mean[keep] + np.array([gain * mu, 0.0])
    out = GaussianState(mean, cov + var * np.outer(slope, slope))
    return fidelity_overlap_gaussian(out, target)


@dataclass(frozen=True)
class ComparisonRow:
    s: float
    fidelity_ff: float
    fidelity_ps: float


def compare_vs_postselection(
    gamma: complex,
    s_grid,
    R: float = 0.5,
    x0: float = 0.025,
    s_prime_target: float = np.log(2.0) / 2.0,
    gain: str | float = "standard",
) -> list[ComparisonRow]:
    """Fidelity to ``S(s') D(gamma)|0>`` for feedforward and for post-selection, per ancilla squeezing.

    ``gain`` is ``"standard"``, ``"purity"`` (recomputed for each ``s``) or a number.
    """
    g = complex(gamma)
    target = GaussianState.squeezed(s_prime_target, complex(np.exp(s_prime_target) * g.real, np.exp(-s_prime_target) * g.imag))
    rows = []
    for s in np.asarray(s_grid, dtype=float):
        if gain == "standard":
            k = standard_gain(R)
        elif gain == "purity":
            k = purity_preserving_gain(s, R)
        else:
            k = float(gain)
        rows.append(
            ComparisonRow(
                float(s),
                gaussian_feedforward_fidelity(g, s, R, k, target),
                gaussian_postselection_fidelity(g, s, R, x0, target),
            )
        )
    return rows


def write_comparison_csv(rows: list[ComparisonRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "fidelity_ff", "fidelity_ps"])
        for r in rows:
            w.writerow([f"{r.s:.10g}", f"{r.fidelity_ff:.12g}", f"{r.fidelity_ps:.12g}"])
