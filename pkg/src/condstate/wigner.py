"""Wigner functions of Fock-basis states, closed-form reference Wigner functions, and fidelities.

Phase-space points are complex ``alpha = alpha+ + i alpha-`` in the same
quadrature units as :mod:`condstate.fock`; the vacuum is
``W(alpha) = (2/pi) exp(-2|alpha|^2)`` and every normalized state satisfies
``int W d alpha+ d alpha- = 1``.
"""

from __future__ import annotations

import csv
from math import lgamma
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError
from .fock import DensityOperator, PureState, TwoModeState, as_density
from .numerics import parallel_map

PURITY_TOL = 1e-6
DEFAULT_EXTENT = 4.0
DEFAULT_POINTS = 161


def _support(rho: np.ndarray, tol: float = 1e-18) -> int:
    mag = np.max(np.abs(rho), axis=1)
    nz = np.nonzero(mag > tol)[0]
    return int(nz[-1]) + 1 if nz.size else 1


def _diagonals(alpha: np.ndarray, size: int):
    """Yield ``(k, g)`` with ``g[n] = f[n + k, n]`` and ``W_{|m><n|} = (2/pi) f[m, n]``.

    ``f[n + k, n] = (-1)^n conj(z)^k e^{-|z|^2/2} sqrt(n!/(n+k)!) L_n^k(|z|^2)`` with
    ``z = 2 alpha``, evaluated by the normalized forward Laguerre recurrence, which
    stays bounded where the polynomials oscillate.
    """
    z = 2.0 * alpha
    x = np.abs(z) ** 2
    logr = np.log(np.where(x > 0, np.abs(z), 1.0))
    phase = np.exp(-1j * np.angle(z))
    for k in range(size):
        length = size - k
        g = np.empty((length,) + alpha.shape, dtype=complex)
        if k == 0:
            pref = np.exp(-0.5 * x).astype(complex)
        else:
            mag = np.exp(k * logr - 0.5 * lgamma(k + 1) - 0.5 * x)
            pref = np.where(x > 0, mag, 0.0) * phase**k
        h_prev = np.zeros(alpha.shape)
        h = np.ones(alpha.shape)
        g[0] = pref * h
        for n in range(length - 1):
            h_next = ((2 * n + 1 + k - x) * h - np.sqrt(n * (n + k)) * h_prev) / np.sqrt((n + 1) * (n + k + 1))
            h_prev, h = h, h_next
            g[n + 1] = (-1) ** (n + 1) * pref * h
        yield k, g


def wigner_values(state: PureState | DensityOperator, alpha) -> np.ndarray:
    """Wigner function of ``state`` at every point of the complex array ``alpha``."""
    rho = np.asarray(as_density(state).matrix)
    alpha = np.asarray(alpha, dtype=complex)
    size = _support(rho)
    rho = rho[:size, :size]
    w = np.zeros(alpha.shape)
    shape = (-1,) + (1,) * alpha.ndim
    for k, g in _diagonals(alpha, size):
        coeffs = np.diagonal(rho, -k).reshape(shape)
        term = np.real(np.sum(coeffs * g, axis=0))
        w += term if k == 0 else 2.0 * term
    return (2.0 / np.pi) * w


def wigner_point(state: PureState | DensityOperator, alpha: complex) -> float:
    return float(wigner_values(state, np.asarray(complex(alpha))))


def wigner_kernel(alpha: complex, size: int) -> np.ndarray:
    """Matrix ``K[m, n] = W_{|m><n|}(alpha)``, so that ``W_rho(alpha) = sum(rho * K)``."""
    k = np.zeros((size, size), dtype=complex)
    idx = np.arange(size)
    for d, g in _diagonals(np.asarray(complex(alpha)), size):
        k[idx[: size - d] + d, idx[: size - d]] = g
        if d:
            k[idx[: size - d], idx[: size - d] + d] = np.conj(g)
    return (2.0 / np.pi) * k


def joint_wigner_point(joint: TwoModeState, alpha: complex, beta: complex) -> float:
    """Two-mode Wigner function ``W(alpha, beta)``; alpha is the transmitted mode."""
    psi = np.asarray(joint.amplitudes)
    ka = wigner_kernel(alpha, joint.dim.size)
    kb = wigner_kernel(beta, joint.dim.size)
    m = psi @ kb @ psi.conj().T
    return float(np.real(np.sum(ka * m)))


@dataclass(frozen=True, eq=False)
class WignerGrid:
    """Wigner function sampled on a rectangular grid; ``values[i, j] = W(x_axis[i] + i p_axis[j])``."""

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray

    @property
    def cell_area(self) -> float:
        return float((self.x_axis[1] - self.x_axis[0]) * (self.p_axis[1] - self.p_axis[0]))

    def integral(self) -> float:
        return float(np.sum(self.values) * self.cell_area)

    def minimum(self) -> float:
        return float(np.min(self.values))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "p", "w"])
            for i, x in enumerate(self.x_axis):
                for j, p in enumerate(self.p_axis):
                    writer.writerow([f"{x:.10g}", f"{p:.10g}", f"{self.values[i, j]:.12e}"])

    @classmethod
    def from_csv(cls, path: str | Path) -> "WignerGrid":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        xs = np.unique(data[:, 0])
        ps = np.unique(data[:, 1])
        return cls(xs, ps, data[:, 2].reshape(len(xs), len(ps)))


def wigner_grid(
    state: PureState | DensityOperator,
    x_axis=None,
    p_axis=None,
    workers: int = 1,
) -> WignerGrid:
    """Evaluate the Wigner function on a grid (default 161 x 161 over [-4, 4]^2), row-parallel."""
    if x_axis is None:
        x_axis = np.linspace(-DEFAULT_EXTENT, DEFAULT_EXTENT, DEFAULT_POINTS)
    if p_axis is None:
        p_axis = np.asarray(x_axis)
    x_axis = np.asarray(x_axis, dtype=float)
    p_axis = np.asarray(p_axis, dtype=float)
    rho = as_density(state)
    chunks = np.array_split(np.arange(len(x_axis)), max(1, min(len(x_axis), 4 * max(workers, 1))))
    blocks = parallel_map(
        lambda idx: wigner_values(rho, x_axis[idx, None] + 1j * p_axis[None, :]), chunks, workers
    )
    return WignerGrid(x_axis, p_axis, np.concatenate(blocks, axis=0))


# Closed-form Wigner functions used as independent references.


def _split(alpha):
    alpha = np.asarray(alpha, dtype=complex)
    return alpha.real, alpha.imag


def closed_wigner_sqz(alpha, s: float):
    """Squeezed vacuum: ``(2/pi) exp[-2 a+^2 e^{-2s} - 2 a-^2 e^{2s}]``."""
    ar, ai = _split(alpha)
    return (2 / np.pi) * np.exp(-2 * ar**2 * np.exp(-2 * s) - 2 * ai**2 * np.exp(2 * s))


def closed_wigner_fock1(alpha):
    """Single photon: ``(2/pi) e^{-2|alpha|^2} (4|alpha|^2 - 1)``."""
    a2 = np.abs(np.asarray(alpha)) ** 2
    return (2 / np.pi) * np.exp(-2 * a2) * (4 * a2 - 1)


def closed_wigner_ssp(alpha, s_prime: float):
    """Squeezed single photon ``S(s')|1>``."""
    ar, ai = _split(alpha)
    q = np.exp(-2 * s_prime) * ar**2 + np.exp(2 * s_prime) * ai**2
    return (2 / np.pi) * np.exp(-2 * q) * (4 * q - 1)


def closed_wigner_scs(alpha, gamma: complex, parity: str):
    """Even (``parity="even"``) or odd cat state ``|gamma> +- |-gamma>``."""
    sign = _parity_sign(parity)
    alpha = np.asarray(alpha, dtype=complex)
    g = complex(gamma)
    e2 = np.exp(-2 * abs(g) ** 2)
    norm = 1.0 / (np.pi * (1 + sign * e2))
    direct = np.exp(-2 * np.abs(alpha - g) ** 2) + np.exp(-2 * np.abs(alpha + g) ** 2)
    cross = np.exp(-2 * np.conj(alpha + g) * (alpha - g)) + np.exp(-2 * (alpha + g) * np.conj(alpha - g))
    return np.real(norm * (direct + sign * e2 * cross))


def closed_wigner_out2_unnormalized(alpha, x_measured: float, s: float, printed: bool = False):
    """Two-photon-input output Wigner function at R = 1/2, without its normalization.

    Symbols are read as ``alpha_r = alpha+``, ``alpha_i = alpha-``. The printed
    polynomial has the factor ``(2 - 8 alpha_i^2) Z`` in its last term, which
    disagrees with the Fock engine; the default uses ``(2 - 8 alpha_i^2) Z^2``,
    which agrees exactly. ``printed=True`` evaluates the transcription as printed.
    """
    ar, ai = _split(alpha)
    z = np.exp(2 * s)
    arp = ar + x_measured
    g = 2 * ai**2 + arp**2 + (ar - x_measured) ** 2 / z + 2 * ai**2 * np.tanh(s)
    last = (2 - 8 * ai**2) * (z if printed else z**2)
    poly = (
        1
        + 2 * z
        + (3 + 16 * ai**2) * z**2
        + (4 - 16 * ai**2) * z**3
        + (2 - 32 * ai**2 + 64 * ai**4) * z**4
        + 4 * arp**4 * (1 + z) ** 4
        - 4 * arp**2 * (1 + z) ** 2 * (1 + 3 * z + last)
    )
    return np.exp(-g) * poly


def closed_wigner_out2(
    alpha, x_measured: float, s: float, printed: bool = False, extent: float = 6.0, points: int = 241
):
    """Normalized two-photon output Wigner function; the normalization is fixed by grid integration."""
    axis = np.linspace(-extent, extent, points)
    grid = axis[:, None] + 1j * axis[None, :]
    raw = closed_wigner_out2_unnormalized(grid, x_measured, s, printed)
    n2 = 1.0 / (np.sum(raw) * (axis[1] - axis[0]) ** 2)
    return n2 * closed_wigner_out2_unnormalized(alpha, x_measured, s, printed)


def _parity_sign(parity: str) -> int:
    if parity == "even":
        return 1
    if parity == "odd":
        return -1
    raise ContractError(f"parity must be 'even' or 'odd', got {parity!r}")


# Fidelities.


def fidelity_overlap(a: PureState | DensityOperator, b: PureState | DensityOperator) -> float:
    """``tr(a b)``; exact in the Fock basis and equal to the fidelity when ``b`` is pure."""
    if isinstance(b, PureState):
        va = b.amplitudes
        if isinstance(a, PureState):
            return float(abs(np.vdot(va, a.amplitudes)) ** 2)
        return float(np.real(np.vdot(va, np.asarray(a.matrix) @ va)))
    if b.purity < 1 - PURITY_TOL:
        raise ContractError(f"target must be pure (purity {b.purity:.8f})")
    ma = np.asarray(as_density(a).matrix)
    return float(np.real(np.sum(ma * np.asarray(b.matrix).T)))


def fidelity_wigner(
    a: PureState | DensityOperator,
    b: PureState | DensityOperator,
    extent: float = DEFAULT_EXTENT,
    points: int = DEFAULT_POINTS,
) -> float:
    """Grid estimate of ``pi * int W_a W_b d^2 alpha``; a cross-check for :func:`fidelity_overlap`."""
    axis = np.linspace(-extent, extent, points)
    wa = wigner_grid(a, axis)
    wb = wigner_grid(b, axis)
    return float(np.pi * np.sum(wa.values * wb.values) * wa.cell_area)
