"""Gaussian-state model of the conditioning protocol and a Monte Carlo replica of the optical experiment.

Covariances are in quadrature units (vacuum ``I/4``) and are ordered
``(x1, p1, x2, p2, ...)``. Experimental variances ``V`` are quoted in units of
the quantum noise limit (QNL), ``V = 4 * cov``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ContractError, DegenerateOutcomeError, InsufficientStatisticsError
from .numerics import gauss_legendre, golden_section_max, parallel_map

VACUUM_VAR = 0.25
PHYSICAL_TOL = 1e-10
WINDOW_NODES = 64
BLOCK_SIZE = 1 << 16


def _omega(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Gaussian state of one or more modes: quadrature means and covariance matrix."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size) or mean.size % 2:
            raise ContractError(f"mean of length {mean.size} and covariance {cov.shape} do not describe modes")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ContractError("covariance must be symmetric")
        cov = 0.5 * (cov + cov.T)
        # uncertainty principle: cov + (i/4) Omega >= 0
        eig = np.linalg.eigvalsh(cov + 0.25j * _omega(mean.size // 2))
        if eig.min() < -PHYSICAL_TOL:
            raise ContractError(f"unphysical covariance (min eigenvalue of cov + i Omega/4 is {eig.min():.3e})")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def mode(self, k: int) -> "GaussianState":
        sl = slice(2 * k, 2 * k + 2)
        return GaussianState(self.mean[sl], self.cov[sl, sl])

    @property
    def variances_qnl(self) -> np.ndarray:
        return np.diag(self.cov) / VACUUM_VAR

    @property
    def purity(self) -> float:
        """``tr(rho^2) = det(4 cov)^{-1/2}``, i.e. ``(V+ V-)^{-1/2}`` for one mode."""
        return float(1.0 / np.sqrt(np.linalg.det(self.cov / VACUUM_VAR)))

    # constructors

    @classmethod
    def vacuum(cls) -> "GaussianState":
        return cls(np.zeros(2), VACUUM_VAR * np.eye(2))

    @classmethod
    def coherent(cls, gamma: complex) -> "GaussianState":
        g = complex(gamma)
        return cls(np.array([g.real, g.imag]), VACUUM_VAR * np.eye(2))

    @classmethod
    def squeezed(cls, s: float, gamma: complex = 0.0) -> "GaussianState":
        """``D(gamma) S(s)|0>``: ``X+`` variance ``e^{2s}/4``, ``X-`` variance ``e^{-2s}/4``."""
        g = complex(gamma)
        return cls(np.array([g.real, g.imag]), VACUUM_VAR * np.diag([np.exp(2 * s), np.exp(-2 * s)]))

    @classmethod
    def from_qnl(cls, mean, v_plus: float, v_minus: float) -> "GaussianState":
        return cls(np.asarray(mean, dtype=float), VACUUM_VAR * np.diag([v_plus, v_minus]))


def tensor(*states: GaussianState) -> GaussianState:
    mean = np.concatenate([s.mean for s in states])
    n = mean.size
    cov = np.zeros((n, n))
    i = 0
    for s in states:
        k = s.mean.size
        cov[i : i + k, i : i + k] = s.cov
        i += k
    return GaussianState(mean, cov)


def _bs_matrix(R: float) -> np.ndarray:
    if not 0.0 <= R <= 1.0:
        raise ContractError(f"reflectivity must lie in [0, 1], got {R}")
    t, r = np.sqrt(1.0 - R), np.sqrt(R)
    return np.kron(np.array([[t, -r], [r, t]]), np.eye(2))


def gaussian_bs(a: GaussianState, b: GaussianState, R: float) -> GaussianState:
    """Beam splitter: ``x_t = sqrt(T) x_a - sqrt(R) x_b``, ``x_r = sqrt(R) x_a + sqrt(T) x_b``.

    Mode 0 of the result is transmitted, mode 1 reflected; the sign matches the
    Fock-space beam splitter of :mod:`condstate.protocol`.
    """
    if a.n_modes != 1 or b.n_modes != 1:
        raise ContractError("gaussian_bs takes two single-mode states")
    S = _bs_matrix(float(R))
    joint = tensor(a, b)
    return GaussianState(S @ joint.mean, S @ joint.cov @ S.T)


def gaussian_loss(state: GaussianState, eta: float, mode: int = 0) -> GaussianState:
    """Pure loss of transmissivity ``eta`` on ``mode``: ``cov -> eta cov + (1 - eta)/4``."""
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise ContractError(f"efficiency must lie in [0, 1], got {eta}")
    scale = np.ones(state.mean.size)
    scale[2 * mode : 2 * mode + 2] = np.sqrt(eta)
    noise = np.zeros(state.mean.size)
    noise[2 * mode : 2 * mode + 2] = (1.0 - eta) * VACUUM_VAR
    return GaussianState(scale * state.mean, scale[:, None] * state.cov * scale[None, :] + np.diag(noise))


def add_noise(state: GaussianState, variances) -> GaussianState:
    """Add classical Gaussian noise (quadrature units) to the diagonal."""
    return GaussianState(state.mean, state.cov + np.diag(np.asarray(variances, dtype=float)))


@dataclass(frozen=True, eq=False)
class GaussianOutcome:
    state: GaussianState
    x_measured: float
    density: float


def _conditioning(joint: GaussianState, measured: int):
    """Regression coefficients for homodyning ``X+`` of mode ``measured``."""
    k = 2 * measured
    keep = [i for i in range(joint.mean.size) if i not in (k, k + 1)]
    var = joint.cov[k, k]
    if not var > 1e-300:
        raise DegenerateOutcomeError("measured quadrature has zero variance")
    cross = joint.cov[keep, k]
    cov = joint.cov[np.ix_(keep, keep)] - np.outer(cross, cross) / var
    return keep, cross / var, cov, joint.mean[k], var


def gaussian_condition(joint: GaussianState, X: float, measured: int = 1) -> GaussianOutcome:
    """Condition on the outcome ``X`` of ``X+`` of mode ``measured`` (default: the reflected mode)."""
    keep, coef, cov, mu, var = _conditioning(joint, measured)
    mean = joint.mean[keep] + coef * (float(X) - mu)
    density = float(np.exp(-0.5 * (X - mu) ** 2 / var) / np.sqrt(2 * np.pi * var))
    return GaussianOutcome(GaussianState(mean, cov), float(X), density)


def fidelity_overlap_gaussian(a: GaussianState, b: GaussianState) -> float:
    """``tr(rho_a rho_b)`` of two single-mode Gaussian states; the fidelity when either is pure."""
    s = a.cov + b.cov
    d = a.mean - b.mean
    return float(np.exp(-0.5 * d @ np.linalg.solve(s, d)) / (2.0 * np.sqrt(np.linalg.det(s))))


def fidelity_uhlmann(a: GaussianState, b: GaussianState) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho_a) rho_b sqrt(rho_a)))^2`` of two single-mode Gaussian states."""
    s1, s2 = 2.0 * a.cov, 2.0 * b.cov  # vacuum I/2
    d = np.sqrt(2.0) * (a.mean - b.mean)
    big = np.linalg.det(s1 + s2)
    small = 4.0 * max(np.linalg.det(s1) - 0.25, 0.0) * max(np.linalg.det(s2) - 0.25, 0.0)
    return float(np.exp(-0.5 * d @ np.linalg.solve(s1 + s2, d)) / (np.sqrt(big + small) - np.sqrt(small)))


# Experiment.

ANCILLA_V_PLUS = 10 ** (8.5 / 10)
ANCILLA_V_MINUS = 10 ** (-4.5 / 10)


@dataclass(frozen=True)
class ExperimentConfig:
    """Optical experiment: mixed coherent input, mixed squeezed ancilla, lossy detection, threshold ``x0``.

    ``input_mean`` is ``(<X+>, <X->)`` in quadrature units; variances are in
    QNL units. The ancilla variances are given in the protocol frame, where the
    squeezed quadrature is ``X-``. ``gate_noise`` and ``homodyne_noise`` are
    optional electronic noise variances in QNL units.
    """

    reflectivity: float = 0.75
    threshold: float = 0.009
    input_mean: tuple[float, float] = (0.5, 0.5)
    v_in_plus: float = 1.13
    v_in_minus: float = 1.05
    v_anc_plus: float = ANCILLA_V_PLUS
    v_anc_minus: float = ANCILLA_V_MINUS
    eta_vis: float = 0.96
    eta_det: float = 0.92
    eta_hom: float = 0.89
    infer_homodyne: bool = True
    gate_noise: float = 0.0
    homodyne_noise: float = 0.0
    n_samples: int = 1_000_000
    seed: int = 0
    block_size: int = BLOCK_SIZE

    def __post_init__(self):
        if not 0.0 < self.reflectivity < 1.0:
            raise ContractError(f"reflectivity must lie in (0, 1), got {self.reflectivity}")
        if not self.threshold > 0:
            raise ContractError("threshold must be > 0")
        for name in ("eta_vis", "eta_det", "eta_hom"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ContractError(f"{name} must lie in [0, 1], got {v}")
        if self.v_in_plus * self.v_in_minus < 1 - 1e-12 or self.v_anc_plus * self.v_anc_minus < 1 - 1e-12:
            raise ContractError("variances violate the uncertainty bound V+ V- >= 1")
        if self.gate_noise < 0 or self.homodyne_noise < 0:
            raise ContractError("noise variances must be >= 0")
        if int(self.n_samples) < 1 or int(self.block_size) < 1:
            raise ContractError("n_samples and block_size must be positive")
        object.__setattr__(self, "input_mean", tuple(float(m) for m in self.input_mean))

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ContractError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def scaled_losses(self, lam: float) -> "ExperimentConfig":
        """Scale every modeled loss (``1 - eta``) and electronic noise by ``lam``; ``lam = 0`` is lossless."""
        from dataclasses import replace

        return replace(
            self,
            eta_vis=1 - lam * (1 - self.eta_vis),
            eta_det=1 - lam * (1 - self.eta_det),
            eta_hom=1 - lam * (1 - self.eta_hom),
            gate_noise=lam * self.gate_noise,
            homodyne_noise=lam * self.homodyne_noise,
        )

    @property
    def input_state(self) -> GaussianState:
        return GaussianState.from_qnl(self.input_mean, self.v_in_plus, self.v_in_minus)

    @property
    def target(self) -> GaussianState:
        """Ideal squeeze of the input: means ``(m+/sqrt(T), sqrt(T) m-)``, variances ``(V+/T, T V-)``."""
        T = 1.0 - self.reflectivity
        m = np.asarray(self.input_mean)
        return GaussianState.from_qnl([m[0] / np.sqrt(T), np.sqrt(T) * m[1]], self.v_in_plus / T, self.v_in_minus * T)


def recorded_state(cfg: ExperimentConfig) -> GaussianState:
    """Joint Gaussian of (transmitted mode as recorded, gate mode as recorded).

    The ancilla passes a mode-mismatch loss ``1 - eta_vis^2``, interferes with
    the input, the gate sees ``eta_det`` and the homodyne ``eta_hom``.
    """
    anc = GaussianState.from_qnl([0.0, 0.0], cfg.v_anc_plus, cfg.v_anc_minus)
    anc = gaussian_loss(anc, cfg.eta_vis**2)
    joint = gaussian_bs(cfg.input_state, anc, cfg.reflectivity)
    joint = gaussian_loss(joint, cfg.eta_det, mode=1)
    joint = gaussian_loss(joint, cfg.eta_hom, mode=0)
    q = VACUUM_VAR
    return add_noise(joint, [cfg.homodyne_noise * q, cfg.homodyne_noise * q, cfg.gate_noise * q, 0.0])


def _infer(cfg: ExperimentConfig, mean: np.ndarray, cov: np.ndarray):
    """Undo homodyne inefficiency on transmitted-mode moments (quadrature units)."""
    if not cfg.infer_homodyne or cfg.eta_hom == 1.0:
        return mean, cov
    eta = cfg.eta_hom
    return mean / np.sqrt(eta), (cov - (1 - eta) * VACUUM_VAR * np.eye(2)) / eta


@dataclass
class ExperimentReport:
    """Post-selected output statistics; see :meth:`to_dict` for the serialized keys."""

    f_ave: float
    g_plus: float
    g_minus: float
    v_out_plus: float
    v_out_minus: float
    p_norm: float
    success_rate: float
    n_selected: int
    seed: int | None
    mean_out: tuple[float, float] = (0.0, 0.0)
    stderr: dict = field(default_factory=dict)

    KEYS = ("f_ave", "g_plus", "g_minus", "v_out_plus", "v_out_minus", "p_norm", "success_rate", "n_selected", "seed")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.KEYS}

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def _gain(out: float, inp: float) -> float:
    return float(out / inp) if inp != 0 else float("nan")


def _report(cfg: ExperimentConfig, mean: np.ndarray, cov: np.ndarray, f_ave: float, rate: float, n_sel: int, seed):
    v_out = np.diag(cov) / VACUUM_VAR
    m_in = cfg.input_mean
    p_norm = float(np.sqrt(cfg.v_in_plus * cfg.v_in_minus / (v_out[0] * v_out[1])))
    return ExperimentReport(
        f_ave=float(f_ave),
        g_plus=_gain(mean[0], m_in[0]),
        g_minus=_gain(mean[1], m_in[1]),
        v_out_plus=float(v_out[0]),
        v_out_minus=float(v_out[1]),
        p_norm=p_norm,
        success_rate=float(rate),
        n_selected=int(n_sel),
        seed=seed,
        mean_out=(float(mean[0]), float(mean[1])),
    )


def predict_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Analytic counterpart of :func:`run_experiment` by exact Gaussian conditioning.

    ``f_ave`` is the window average of per-outcome fidelities; the reported
    moments belong to the window-averaged output state.
    """
    joint = recorded_state(cfg)
    keep, coef, cov_c, mu_g, var_g = _conditioning(joint, 1)
    xs, ws = gauss_legendre(-cfg.threshold, cfg.threshold, WINDOW_NODES)
    dens = np.exp(-0.5 * (xs - mu_g) ** 2 / var_g) / np.sqrt(2 * np.pi * var_g)
    prob = float(ws @ dens)
    if not prob > 1e-300:
        raise DegenerateOutcomeError(f"window x0={cfg.threshold} has zero probability")
    means, cov = _infer(cfg, joint.mean[keep] + np.outer(xs - mu_g, coef), cov_c)
    target = cfg.target
    fids = np.array([fidelity_uhlmann(GaussianState(m, cov), target) for m in means])
    w = ws * dens / prob
    mean = w @ means
    spread = (means - mean).T @ (w[:, None] * (means - mean))
    return _report(cfg, mean, cov + spread, float(w @ fids), prob, 0, None)


def _block_moments(cfg: ExperimentConfig, chol: np.ndarray, mean: np.ndarray, index: int, n: int, dump: int):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(cfg.seed, spawn_key=(index,))))
    z = rng.standard_normal((n, 3))
    samples = mean + z @ chol.T  # columns: x_out+, x_out-, x_gate
    sel = np.abs(samples[:, 2]) < cfg.threshold
    chosen = samples[sel, :2]
    acc = np.array(
        [
            sel.sum(),
            chosen[:, 0].sum(),
            chosen[:, 1].sum(),
            (chosen[:, 0] ** 2).sum(),
            (chosen[:, 1] ** 2).sum(),
            (chosen[:, 0] * chosen[:, 1]).sum(),
        ]
    )
    rows = None
    if dump > 0:
        rows = np.column_stack([samples[:dump, 2], samples[:dump, 0], samples[:dump, 1], sel[:dump]])
    return acc, rows


def run_experiment(
    cfg: ExperimentConfig,
    workers: int = 1,
    samples_path: str | Path | None = None,
    max_dump: int = 100_000,
) -> ExperimentReport:
    """Monte Carlo of the experiment: sample recorded values, post-select on the gate, estimate moments.

    Samples are drawn from the Wigner function of the recorded Gaussian state,
    which reproduces every jointly measured marginal. Each block of
    ``block_size`` samples has its own counter-based generator keyed by
    ``(seed, block index)``, so results do not depend on ``workers``.
    """
    joint = recorded_state(cfg)
    idx = [0, 1, 2]  # transmitted X+, X-, gate X+
    cov = joint.cov[np.ix_(idx, idx)]
    mean = joint.mean[idx]
    chol = np.linalg.cholesky(cov)
    N = int(cfg.n_samples)
    bs = int(cfg.block_size)
    blocks = [(k, min(bs, N - k * bs)) for k in range((N + bs - 1) // bs)]
    remaining = [max(0, min(max_dump, N) - k * bs) if samples_path else 0 for k, _ in blocks]
    results = parallel_map(
        lambda kb: _block_moments(cfg, chol, mean, kb[0][0], kb[0][1], min(kb[1], kb[0][1])),
        list(zip(blocks, remaining)),
        workers,
    )
    acc = np.zeros(6)
    for a, _ in results:  # fixed-order reduction
        acc += a
    if samples_path:
        with open(samples_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x_gate", "x_out_plus", "x_out_minus", "selected"])
            for _, rows in results:
                if rows is not None:
                    for r in rows:
                        writer.writerow([f"{r[0]:.8e}", f"{r[1]:.8e}", f"{r[2]:.8e}", int(r[3])])
    n_sel = int(acc[0])
    if n_sel < 2:
        raise InsufficientStatisticsError(f"only {n_sel} of {N} samples passed the threshold {cfg.threshold}")
    m = acc[1:3] / n_sel
    var = np.array([acc[3] / n_sel - m[0] ** 2, acc[4] / n_sel - m[1] ** 2]) * n_sel / (n_sel - 1)
    cxy = (acc[5] / n_sel - m[0] * m[1]) * n_sel / (n_sel - 1)
    m_i, cov_out = _infer(cfg, m, np.array([[var[0], cxy], [cxy, var[1]]]))
    try:
        f = fidelity_uhlmann(GaussianState(m_i, cov_out), cfg.target)
    except ContractError:
        # a tiny selection can fall below the uncertainty bound by sampling noise
        f = float("nan")
    v_i = np.diag(cov_out)
    rate = n_sel / N
    rep = _report(cfg, m_i, cov_out, f, rate, n_sel, cfg.seed)
    rep.stderr = {
        "mean_plus": float(np.sqrt(v_i[0] / n_sel)),
        "mean_minus": float(np.sqrt(v_i[1] / n_sel)),
        "var_plus": float(v_i[0] * np.sqrt(2.0 / (n_sel - 1))),
        "var_minus": float(v_i[1] * np.sqrt(2.0 / (n_sel - 1))),
        "success_rate": float(np.sqrt(rate * (1 - rate) / N)),
    }
    return rep


# Classical benchmark.


def classical_fidelity(R: float, nu: float, mean: complex = 0.0) -> float:
    """``X = 0`` fidelity to the ideal squeeze when the ancilla is vacuum plus classical ``X+`` noise ``nu`` (QNL)."""
    T = 1.0 - R
    g = complex(mean)
    inp = GaussianState.coherent(g)
    anc = GaussianState.from_qnl([0.0, 0.0], 1.0 + nu, 1.0)
    out = gaussian_condition(gaussian_bs(inp, anc, R), 0.0).state
    target = GaussianState.squeezed(-0.5 * np.log(T), complex(g.real / np.sqrt(T), np.sqrt(T) * g.imag))
    return fidelity_overlap_gaussian(out, target)


def optimize_classical_noise(R: float, mean: complex = 0.0, nu_max: float = 100.0) -> tuple[float, float]:
    """Best classical fidelity over added noise ``nu`` in ``[0, nu_max]``; returns ``(F, nu*)``.

    A coarse log-spaced scan brackets the optimum before golden-section
    refinement.
    """
    R = float(R)
    if not 0.0 < R < 1.0:
        raise ContractError(f"reflectivity must lie in (0, 1), got {R}")
    grid = np.concatenate([[0.0], np.geomspace(1e-4, nu_max, 60)])
    vals = [classical_fidelity(R, nu, mean) for nu in grid]
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    nu, f = golden_section_max(lambda v: classical_fidelity(R, v, mean), lo, hi, tol=1e-8)
    if vals[i] > f:
        nu, f = grid[i], vals[i]
    return float(f), float(nu)


def classical_limit(R: float, mean: complex = 0.0, nu_max: float = 100.0) -> float:
    """Classical fidelity benchmark: vacuum ancilla with optimized classical noise.

    The noise sits on the ancilla quadrature that is the laboratory phase
    quadrature before the pi/2 interference phase.
    """
    return optimize_classical_noise(R, mean, nu_max)[0]
