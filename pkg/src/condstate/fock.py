"""Truncated Fock-space states of one and two optical modes.

Quadratures are ``X+ = (a + a^dag)/2`` and ``X- = (a - a^dag)/(2i)``, so the
vacuum has variance 1/4 in each. Every threshold and homodyne outcome in the
package is expressed in these units.

States are immutable. Constructors check how much probability the cutoff
discards and raise :class:`TruncationError` instead of silently renormalizing
a visibly clipped state.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .errors import ContractError, DimensionError, TruncationError

DEFAULT_NMAX = 60
TRUNCATION_TOL = 1e-10
S_MAX = 2.0

__all__ = [
    "DEFAULT_NMAX",
    "TRUNCATION_TOL",
    "S_MAX",
    "FockDim",
    "PureState",
    "DensityOperator",
    "TwoModeState",
    "as_density",
    "annihilation",
    "check_squeeze",
    "make_fock",
    "make_vacuum",
    "make_squeezed_vacuum",
    "make_coherent",
    "quadrature_wavefunction",
    "quadrature_wavefunctions",
    "apply_displacement",
    "apply_squeeze",
    "padded_size",
    "displacement_generator",
    "squeeze_generator",
]


@dataclass(frozen=True)
class FockDim:
    """Photon-number cutoff: the basis is ``|0>, ..., |n_max>``."""

    n_max: int = DEFAULT_NMAX

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise DimensionError(f"n_max must be an integer >= 1, got {self.n_max!r}")

    @property
    def size(self) -> int:
        return self.n_max + 1

    def tail_mass(self, populations: np.ndarray) -> float:
        """Population on levels above ``0.9 * n_max`` (truncation diagnostic)."""
        n = np.arange(self.size)
        return float(np.sum(np.asarray(populations)[n > 0.9 * self.n_max]))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=16)
def annihilation(size: int) -> np.ndarray:
    """Truncated annihilation operator on ``size`` levels."""
    a = np.diag(np.sqrt(np.arange(1, size, dtype=float)), 1)
    a.setflags(write=False)
    return a


def _quadrature_moments(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = annihilation(rho.shape[0])
    ea = np.trace(rho @ a)
    ea2 = np.trace(rho @ a @ a)
    n = np.real(np.trace(rho @ a.T @ a))
    mean = np.array([ea.real, ea.imag])
    # <X+^2> = (2n + 1 + 2 Re<a^2>)/4 etc. for the symmetrized products
    xx = (2 * n + 1 + 2 * ea2.real) / 4
    pp = (2 * n + 1 - 2 * ea2.real) / 4
    xp = ea2.imag / 2
    cov = np.array([[xx, xp], [xp, pp]]) - np.outer(mean, mean)
    return mean, cov


@dataclass(frozen=True, eq=False)
class PureState:
    """Single-mode pure state given by its Fock amplitudes."""

    amplitudes: np.ndarray
    dim: FockDim

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.shape != (self.dim.size,):
            raise DimensionError(
                f"expected {self.dim.size} amplitudes for n_max={self.dim.n_max}, got shape {amps.shape}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.populations)))

    @property
    def tail_mass(self) -> float:
        return self.dim.tail_mass(self.populations)

    @property
    def mean_photon(self) -> float:
        return float(np.sum(np.arange(self.dim.size) * self.populations))

    def normalize(self) -> "PureState":
        nrm = self.norm
        if nrm == 0:
            raise ContractError("cannot normalize the zero vector")
        return PureState(self.amplitudes / nrm, self.dim)

    def density(self) -> "DensityOperator":
        v = self.amplitudes
        return DensityOperator(np.outer(v, v.conj()), self.dim)

    def overlap(self, other: "PureState") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def quadrature_moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Means ``(<X+>, <X->)`` and the symmetrized quadrature covariance matrix."""
        return _quadrature_moments(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Single-mode (possibly mixed) state as a Hermitian matrix in the Fock basis."""

    matrix: np.ndarray
    dim: FockDim

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.shape != (self.dim.size, self.dim.size):
            raise DimensionError(f"density matrix shape {m.shape} does not match n_max={self.dim.n_max}")
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    @property
    def tail_mass(self) -> float:
        return self.dim.tail_mass(self.populations)

    @property
    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix.conj().T, self.matrix)))

    @property
    def mean_photon(self) -> float:
        return float(np.sum(np.arange(self.dim.size) * self.populations))

    def normalized(self) -> "DensityOperator":
        tr = self.trace
        if tr <= 0:
            raise ContractError("cannot normalize an operator with non-positive trace")
        return DensityOperator(self.matrix / tr, self.dim)

    def is_valid(self, tol: float = 1e-10, eig_tol: float = 1e-8) -> bool:
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > tol:
            return False
        if abs(self.trace - 1.0) > tol:
            return False
        return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min()) >= -eig_tol

    def quadrature_moments(self) -> tuple[np.ndarray, np.ndarray]:
        return _quadrature_moments(np.asarray(self.matrix))


def as_density(state: PureState | DensityOperator) -> DensityOperator:
    if isinstance(state, DensityOperator):
        return state
    return state.density()


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Joint pure state; ``amplitudes[n_t, n_r]`` with the transmitted mode first."""

    amplitudes: np.ndarray
    dim: FockDim

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.shape != (self.dim.size, self.dim.size):
            raise DimensionError(f"two-mode amplitudes must be {self.dim.size}x{self.dim.size}, got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def photon_number_distribution(self) -> np.ndarray:
        """Probability of each total photon number ``n_t + n_r``."""
        pops = np.abs(self.amplitudes) ** 2
        size = self.dim.size
        out = np.zeros(2 * size - 1)
        for k in range(size):
            out[k : k + size] += pops[k]
        return out

    def reduced(self, mode: int) -> DensityOperator:
        """Reduced state of mode 0 (transmitted) or 1 (reflected)."""
        a = self.amplitudes
        if mode == 0:
            return DensityOperator(a @ a.conj().T, self.dim)
        if mode == 1:
            return DensityOperator(a.T @ a.conj(), self.dim)
        raise DimensionError(f"mode must be 0 or 1, got {mode}")


def check_squeeze(s: float, s_max: float = S_MAX) -> float:
    s = float(s)
    if not np.isfinite(s) or abs(s) > s_max:
        raise ContractError(f"squeezing |s| = {abs(s):g} exceeds s_max = {s_max:g}")
    return s


def _checked(log_amps: np.ndarray, phases: np.ndarray, lost: float, dim: FockDim, what: str) -> PureState:
    if lost >= TRUNCATION_TOL:
        raise TruncationError(
            f"{what} loses {lost:.3e} probability above n_max={dim.n_max}; increase n_max",
            lost=lost,
        )
    amps = np.exp(log_amps) * phases
    return PureState(amps, dim).normalize()


def make_fock(n: int, dim: FockDim = FockDim()) -> PureState:
    if int(n) != n or not 0 <= n <= dim.n_max:
        raise DimensionError(f"Fock index {n} outside 0..{dim.n_max}")
    amps = np.zeros(dim.size, dtype=complex)
    amps[int(n)] = 1.0
    return PureState(amps, dim)


def make_vacuum(dim: FockDim = FockDim()) -> PureState:
    return make_fock(0, dim)


def make_squeezed_vacuum(s: float, dim: FockDim = FockDim(), s_max: float = S_MAX) -> PureState:
    r"""Squeezed vacuum ``exp[-(s/2)(a^2 - a^dag^2)]|0>``.

    Amplitudes ``<2k|S(s)|0> = (tanh s)^k sqrt((2k)!) / (2^k k! sqrt(cosh s))``.
    With this sign the X+ variance is ``e^{2s}/4`` and X- is ``e^{-2s}/4``, so
    ``s > 0`` squeezes the phase quadrature.
    """
    s = check_squeeze(s, s_max)
    amps_log = np.full(dim.size, -np.inf)
    phases = np.ones(dim.size)
    if s == 0:
        return make_vacuum(dim)
    k = np.arange(dim.n_max // 2 + 1)
    n = 2 * k
    t = np.tanh(abs(s))
    amps_log[n] = (
        0.5 * gammaln(n + 1) - k * np.log(2.0) - gammaln(k + 1) + k * np.log(t) - 0.5 * np.log(np.cosh(s))
    )
    if s < 0:
        phases[n] = (-1.0) ** k
    lost = max(0.0, 1.0 - float(np.sum(np.exp(2 * amps_log))))
    return _checked(amps_log, phases, lost, dim, f"squeezed vacuum s={s:g}")


def make_coherent(gamma: complex, dim: FockDim = FockDim()) -> PureState:
    """Coherent state ``|gamma>`` with quadrature means ``(Re gamma, Im gamma)``."""
    gamma = complex(gamma)
    if gamma == 0:
        return make_vacuum(dim)
    n = np.arange(dim.size)
    log_amps = -0.5 * abs(gamma) ** 2 + n * np.log(abs(gamma)) - 0.5 * gammaln(n + 1)
    phases = np.exp(1j * n * np.angle(gamma))
    lost = max(0.0, 1.0 - float(np.sum(np.exp(2 * log_amps))))
    return _checked(log_amps, phases, lost, dim, f"coherent state gamma={gamma:g}")


def quadrature_wavefunctions(x, n_max: int) -> np.ndarray:
    r"""``<x|n>`` for ``n = 0..n_max`` and every point of ``x``; shape ``(n_max + 1, *x.shape)``.

    ``psi_0(x) = (2/pi)^{1/4} exp(-x^2)`` and
    ``psi_{n+1} = (2 x psi_n - sqrt(n) psi_{n-1}) / sqrt(n + 1)``.
    The recurrence runs on ``psi_n * exp(x^2)`` and the Gaussian is applied in
    log space at the end, so neither factorials nor ``exp(-x^2)`` under/overflow.
    """
    x = np.asarray(x, dtype=float)
    h = np.empty((n_max + 1,) + x.shape)
    h[0] = 1.0
    if n_max >= 1:
        h[1] = 2.0 * x
    for n in range(1, n_max):
        h[n + 1] = (2.0 * x * h[n] - np.sqrt(n) * h[n - 1]) / np.sqrt(n + 1)
    with np.errstate(divide="ignore"):
        log_mag = np.log(np.abs(h)) - x**2 + 0.25 * np.log(2.0 / np.pi)
    return np.sign(h) * np.exp(log_mag)


def quadrature_wavefunction(n: int, x):
    """Single Hermite-Gaussian ``<x|n>`` in vacuum-variance-1/4 units."""
    if int(n) != n or n < 0:
        raise DimensionError(f"Fock index must be a non-negative integer, got {n}")
    out = quadrature_wavefunctions(x, max(int(n), 1))[int(n)]
    return float(out) if np.ndim(out) == 0 else out


def padded_size(dim: FockDim) -> int:
    """Working dimension for unitaries, so the truncated generator is exact on the kept levels."""
    return dim.size + max(40, dim.n_max)


def _evolve(state: PureState, generator: np.ndarray, what: str) -> PureState:
    size = state.dim.size
    u = expm(generator)[:, :size]
    out = u @ state.amplitudes
    lost = float(np.sum(np.abs(out[size:]) ** 2))
    if lost >= TRUNCATION_TOL:
        raise TruncationError(f"{what} pushes {lost:.3e} probability above n_max={state.dim.n_max}", lost=lost)
    return PureState(out[:size], state.dim).normalize()


def displacement_generator(gamma: complex, size: int) -> np.ndarray:
    a = annihilation(size)
    return gamma * a.T - np.conj(gamma) * a


def squeeze_generator(s: float, size: int) -> np.ndarray:
    a = annihilation(size)
    a2 = a @ a
    return -(s / 2.0) * (a2 - a2.T)


def apply_displacement(state: PureState, gamma: complex) -> PureState:
    """``D(gamma)|psi>`` with ``D(gamma) = exp(gamma a^dag - gamma^* a)``."""
    gamma = complex(gamma)
    return _evolve(state, displacement_generator(gamma, padded_size(state.dim)), f"displacement by {gamma:g}")


def apply_squeeze(state: PureState, s: float, s_max: float = S_MAX) -> PureState:
    """``S(s)|psi>`` with ``S(s) = exp[-(s/2)(a^2 - a^dag^2)]``."""
    s = check_squeeze(s, s_max)
    return _evolve(state, squeeze_generator(s, padded_size(state.dim)), f"squeezing by {s:g}")
