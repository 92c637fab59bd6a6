"""Ideal target states and closed-form predictions for the conditioning protocol."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import ContractError, TruncationError
from .fock import (
    TRUNCATION_TOL,
    FockDim,
    PureState,
    apply_displacement,
    apply_squeeze,
    make_fock,
    make_squeezed_vacuum,
)

PURE_IMAGINARY_TOL = 1e-12


def output_squeezing(s: float, R: float) -> float:
    """Squeezing ``s' = -ln(T + e^{-2s} R) / 2`` of the transmitted state at ``X = 0``.

    Returns ``+inf`` for ``R = 1`` with infinite ancilla squeezing.
    """
    R = float(R)
    if not 0.0 <= R <= 1.0:
        raise ContractError(f"reflectivity must lie in [0, 1], got {R}")
    T = 1.0 - R
    s = float(s)
    if s == np.inf:
        return np.inf if T == 0.0 else -0.5 * np.log(T)
    if T == 0.0:
        return s
    # logaddexp keeps large |s| finite
    return -0.5 * float(np.logaddexp(np.log(T), -2.0 * s + np.log(R) if R > 0 else -np.inf))


def squeezing_db(s: float) -> float:
    """Squeezing level ``10 log10(e^{2|s|})`` in dB."""
    return 20.0 * abs(float(s)) / np.log(10.0)


def squeezed_single_photon(s_prime: float, dim: FockDim = FockDim()) -> PureState:
    """Target ``S(s')|1>`` of the single-photon branch."""
    return apply_squeeze(make_fock(1, dim), s_prime)


# Superpositions of coherent states.


@dataclass(frozen=True)
class ScsSpec:
    """``|gamma> + |-gamma>`` (``parity="even"``) or ``|gamma> - |-gamma>`` (``"odd"``)."""

    gamma: complex
    parity: str = "even"

    def __post_init__(self):
        if self.parity not in ("even", "odd"):
            raise ContractError(f"parity must be 'even' or 'odd', got {self.parity!r}")
        if not abs(complex(self.gamma)) > 0:
            raise ContractError("an SCS needs |gamma| > 0")

    @classmethod
    def for_photon_number(cls, n: int, gamma: complex) -> "ScsSpec":
        """Target for an ``n``-photon input: even SCS for even ``n``, odd for odd."""
        return cls(gamma, "even" if n % 2 == 0 else "odd")

    @property
    def sign(self) -> int:
        return 1 if self.parity == "even" else -1


def make_scs(spec: ScsSpec, dim: FockDim = FockDim()) -> PureState:
    """Normalized SCS; components of the wrong parity are exactly zero."""
    g = complex(spec.gamma)
    lam = abs(g) ** 2
    n = np.arange(dim.size)
    keep = (n % 2 == 0) if spec.parity == "even" else (n % 2 == 1)
    # fraction of the ideal state above the cutoff, bounded by the Poisson tail
    weight = 0.5 * (1 + spec.sign * np.exp(-2 * lam))
    lost = float(poisson.sf(dim.n_max, lam)) / weight if weight > 0 else 1.0
    if lost >= TRUNCATION_TOL:
        raise TruncationError(f"SCS with |gamma|={abs(g):g} loses {lost:.3e} above n_max={dim.n_max}", lost=lost)
    logs = n * np.log(abs(g)) - 0.5 * gammaln(n + 1)
    logs = logs - np.max(logs[keep])
    amps = np.where(keep, np.exp(logs) * np.exp(1j * n * np.angle(g)), 0.0)
    return PureState(amps, dim).normalize()


def _pure_imaginary_magnitude(gamma) -> float:
    g = complex(gamma)
    if isinstance(gamma, (complex, np.complexfloating)):
        if abs(g.real) > PURE_IMAGINARY_TOL * max(1.0, abs(g)):
            raise ContractError(f"closed-form fidelities assume a pure-imaginary amplitude, got {g}")
        return abs(g.imag)
    return abs(g.real)


def fidelity_scs_closed(n: int, s: float, gamma_abs, printed: bool = False) -> float:
    """Closed-form ``X = 0`` fidelity between the ``n``-photon output at ``R = 1/2`` and its SCS target.

    ``gamma_abs`` is the magnitude of the pure-imaginary amplitude ``gamma``; a
    complex value is accepted if its real part vanishes. Inside the formulas
    ``gamma^2 = -|gamma|^2``.

    The default prefactor is ``A = 4 sqrt(2) exp[g2 + s + g2 sinh s / (2 cosh s + sinh s)]``,
    which reproduces the Fock engine. ``printed=True`` groups the exponent as
    ``g2 sinh s / (2 cosh s) + sinh s`` instead.
    """
    if n not in (2, 3, 4):
        raise ContractError(f"closed forms exist for n = 2, 3, 4, got {n}")
    a_abs = _pure_imaginary_magnitude(gamma_abs)
    if not a_abs > 0:
        raise ContractError("gamma_abs must be > 0")
    g2 = -(a_abs**2)
    s = float(s)
    e2 = np.exp(2 * s)
    e4 = e2 * e2
    if printed:
        expo = g2 + s + g2 * np.sinh(s) / (2 * np.cosh(s)) + np.sinh(s)
    else:
        expo = g2 + s + g2 * np.sinh(s) / (2 * np.cosh(s) + np.sinh(s))
    A = 4 * np.sqrt(2) * np.exp(expo)
    K = 1 + e2
    q = 1 + 3 * e2
    if n == 2:
        num = A * K**2.5 * (1 + 4 * e2 + (3 - 8 * g2) * e4) ** 2
        return float(num / ((1 + np.exp(2 * g2)) * q**5 * (1 + 2 * e4)))
    if n == 3:
        L = 3 + 12 * e2 + (9 - 8 * g2) * e4
        num = 4 * g2 * e2 * A * K**3.5 * L**2 * (1 / np.tanh(g2) - 1)
        return float(num / (3 * (3 + 2 * e4) * q**7))
    e6 = e4 * e2
    e8 = e4 * e4
    M = 3 + 24 * e2 + (66 - 48 * g2) * e4 - 24 * (8 * g2 - 3) * e6 + (64 * g2**2 - 144 * g2 + 27) * e8
    return float(A * K**4.5 * M**2 / (3 * (1 + np.exp(2 * g2)) * q**9 * (3 + 24 * e4 + 8 * e8)))


# Coherent-state input.


@dataclass(frozen=True)
class CoherentTransformResult:
    """Predicted ``X = 0`` output ``D(mean_out) S(s_prime)|0>`` for a coherent input."""

    mean_out: complex
    s_prime: float

    @property
    def variances(self) -> tuple[float, float]:
        """``(V+, V-)`` in quadrature units; their product is 1/16."""
        return np.exp(2 * self.s_prime) / 4, np.exp(-2 * self.s_prime) / 4

    def state(self, dim: FockDim = FockDim()) -> PureState:
        return apply_displacement(make_squeezed_vacuum(self.s_prime, dim), self.mean_out)


def coherent_transform(gamma: complex, s: float, R: float) -> CoherentTransformResult:
    """``D(gamma)|0> -> D(sqrt(T)[e^{2s'} gamma+ + i gamma-]) S(s')|0>`` at ``X = 0``."""
    g = complex(gamma)
    sp = output_squeezing(s, R)
    T = 1.0 - float(R)
    mean = np.sqrt(T) * (np.exp(2 * sp) * g.real + 1j * g.imag)
    return CoherentTransformResult(complex(mean), float(sp))
