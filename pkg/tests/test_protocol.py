import numpy as np
import pytest

from condstate.errors import ContractError, DegenerateOutcomeError, DimensionError
from condstate.fock import FockDim, make_coherent, make_fock, make_squeezed_vacuum, make_vacuum
from condstate.numerics import gauss_legendre
from condstate.protocol import (
    ProtocolConfig,
    apply_beam_splitter,
    average_fidelity,
    average_state,
    closed_density_fock1,
    closed_density_fock2,
    condition_on_x,
    probability_density,
    reflected_sigma,
    success_probability,
)
from condstate.targets import ScsSpec, make_scs, output_squeezing, squeezed_single_photon
from condstate.wigner import closed_wigner_fock1, closed_wigner_sqz, fidelity_overlap, joint_wigner_point, wigner_grid, wigner_values

DIM = FockDim(60)


@pytest.fixture(scope="module")
def photon():
    return ProtocolConfig.fock(1, 0.98, 0.7, dim=DIM)


def _normalized(v):
    return v / np.linalg.norm(v)


def test_config_validation():
    with pytest.raises(ContractError):
        ProtocolConfig.fock(1, 1.2, 0.3)
    with pytest.raises(ContractError):
        ProtocolConfig.fock(1, 0.5, 0.3, threshold=-1)
    with pytest.raises(ContractError):
        ProtocolConfig.fock(1, 0.5, 2.5)
    cfg = ProtocolConfig.fock(1, 0.3, 0.1)
    assert np.sin(cfg.theta / 2) ** 2 == pytest.approx(0.3)


def test_beam_splitter_identity_and_swap():
    psi, anc = make_fock(2, DIM), make_squeezed_vacuum(0.4, DIM)
    j0 = apply_beam_splitter(psi, anc, 0.0)
    assert np.allclose(j0.amplitudes, np.outer(psi.amplitudes, anc.amplitudes), atol=1e-12)
    j1 = apply_beam_splitter(psi, anc, 1.0)
    swapped = np.outer(anc.amplitudes, psi.amplitudes)
    assert abs(np.vdot(swapped, j1.amplitudes)) == pytest.approx(1, abs=1e-12)


def test_beam_splitter_dimension_mismatch():
    with pytest.raises(DimensionError):
        apply_beam_splitter(make_fock(1, FockDim(20)), make_vacuum(FockDim(30)), 0.5)


def test_beam_splitter_conserves_total_photons():
    psi, anc = make_fock(3, DIM), make_squeezed_vacuum(0.5, DIM)
    before = apply_beam_splitter(psi, anc, 0.0).photon_number_distribution()
    after = apply_beam_splitter(psi, anc, 0.37).photon_number_distribution()
    assert np.max(np.abs(before - after)) < 1e-12


def test_joint_wigner_convention():
    R, s = 0.98, 0.7
    T = 1 - R
    dim = FockDim(40)
    joint = apply_beam_splitter(make_fock(1, dim), make_squeezed_vacuum(s, dim), R)
    for a, b in [(0.1 + 0.2j, -0.3 + 0.1j), (0.5, 0.5j), (-0.4 - 0.2j, 0.2 - 0.6j), (0.0, 0.3)]:
        expected = closed_wigner_fock1(np.sqrt(T) * a + np.sqrt(R) * b) * closed_wigner_sqz(-np.sqrt(R) * a + np.sqrt(T) * b, s)
        assert joint_wigner_point(joint, a, b) == pytest.approx(float(expected), abs=1e-8)


def test_condition_examples(photon):
    target = squeezed_single_photon(output_squeezing(0.7, 0.98), DIM)
    assert fidelity_overlap(condition_on_x(photon.joint, 0.0).state, target) == pytest.approx(1, abs=1e-6)
    assert fidelity_overlap(condition_on_x(photon.joint, -0.1).state, target) == pytest.approx(0.67, abs=0.01)


@pytest.mark.parametrize("R,X", [(0.2, 0.0), (0.5, 0.7), (0.9, -1.3)])
def test_vacuum_stays_vacuum(R, X):
    joint = apply_beam_splitter(make_vacuum(DIM), make_vacuum(DIM), R)
    assert fidelity_overlap(condition_on_x(joint, X).state, make_vacuum(DIM)) == pytest.approx(1, abs=1e-12)


def test_degenerate_outcome():
    joint = apply_beam_splitter(make_vacuum(DIM), make_vacuum(DIM), 0.5)
    with pytest.raises(DegenerateOutcomeError):
        condition_on_x(joint, 30.0)


def test_density_integrates_to_one(photon):
    sig = reflected_sigma(photon)
    xs, ws = gauss_legendre(-6 * sig, 6 * sig, 200)
    assert np.dot(ws, probability_density(photon, xs)) == pytest.approx(1, abs=1e-6)


def test_density_symmetric(photon):
    xs = np.linspace(0, 1.5, 16)
    assert np.max(np.abs(probability_density(photon, xs) - probability_density(photon, -xs))) < 1e-10


def _shape_error(engine, oracle, xs):
    e, o = engine(xs), oracle(xs)
    return np.max(np.abs(e / e[0] - o / o[0]))


def test_density_shape_fock1(photon):
    xs = np.array([0.0, 0.05, -0.05, 0.2, -0.2])
    assert _shape_error(lambda x: probability_density(photon, x), lambda x: closed_density_fock1(x, 0.7, 0.98), xs) < 1e-6


def test_density_shape_fock2():
    cfg = ProtocolConfig.fock(2, 0.5, -0.37, dim=DIM)
    xs = np.linspace(0, 1.5, 13)
    assert _shape_error(lambda x: probability_density(cfg, x), lambda x: closed_density_fock2(x, -0.37), xs) < 1e-6


def test_success_probability_examples():
    assert success_probability(ProtocolConfig.fock(1, 0.98, 0.7, 0.025, DIM)) == pytest.approx(0.003, abs=0.001)
    assert success_probability(ProtocolConfig.fock(1, 0.5, -0.7, 0.04, DIM)) == pytest.approx(0.016, abs=0.002)
    assert success_probability(ProtocolConfig.fock(1, 0.5, -0.7, 0.0, DIM)) == 0.0


def test_success_probability_monotone_and_saturates(photon):
    ps = [success_probability(photon.with_threshold(x0)) for x0 in np.linspace(0.01, 2.0, 15)]
    assert np.all(np.diff(ps) >= 0)
    assert success_probability(photon.with_threshold(np.inf)) == pytest.approx(1, abs=1e-6)


def test_average_state_small_window_limit(photon):
    rho = average_state(photon.with_threshold(1e-3))
    assert fidelity_overlap(rho, condition_on_x(photon.joint, 0.0).state) > 1 - 1e-4


def test_average_state_negative_dip(photon):
    rho = average_state(photon.with_threshold(0.025))
    assert -2 / np.pi < wigner_values(rho, np.array(0j)) < -0.6
    assert rho.is_valid()


def test_average_state_degenerate_window():
    cfg = ProtocolConfig.fock(1, 0.5, 0.3, 1e-15, DIM)
    with pytest.raises(DegenerateOutcomeError):
        average_state(cfg)


def test_full_window_coherent_has_no_negativity():
    cfg = ProtocolConfig(make_coherent(0.8, DIM), 0.5, 0.5, np.inf)
    grid = wigner_grid(average_state(cfg), np.linspace(-3, 3, 41))
    assert grid.minimum() > -1e-9


@pytest.mark.parametrize(
    "n,s,x0,gamma,f,p,tol_p",
    [(2, -0.37, 0.022, 1.1, 0.999, 0.014, 0.002), (2, -0.37, 0.084, 1.1, 0.99, 0.052, 0.005)],
)
def test_average_fidelity_scs(n, s, x0, gamma, f, p, tol_p):
    cfg = ProtocolConfig.fock(n, 0.5, s, x0, DIM)
    target = make_scs(ScsSpec.for_photon_number(n, 1j * gamma), DIM)
    assert average_fidelity(cfg, target) == pytest.approx(f, abs=0.005 if f == 0.99 else 0.001)
    assert success_probability(cfg) == pytest.approx(p, abs=tol_p)


def test_average_fidelity_routes_agree(photon):
    cfg = photon.with_threshold(0.05)
    target = squeezed_single_photon(output_squeezing(0.7, 0.98), DIM)
    a = average_fidelity(cfg, target, route="mixture")
    b = average_fidelity(cfg, target, route="state")
    assert a == pytest.approx(0.9, abs=0.1)
    assert abs(a - b) < 1e-8


def test_average_independent_of_workers(photon):
    cfg = photon.with_threshold(0.05)
    a = np.asarray(average_state(cfg, workers=1).matrix)
    b = np.asarray(average_state(cfg, workers=4).matrix)
    assert np.max(np.abs(a - b)) < 1e-9


@pytest.mark.parametrize("n", [0, 1, 2, 3, 4])
def test_parity_selection(n):
    out = condition_on_x(ProtocolConfig.fock(n, 0.5, -0.35, dim=DIM).joint, 0.0).state
    wrong = out.populations[(np.arange(DIM.size) + n) % 2 == 1]
    assert np.sum(wrong) < 1e-8


def test_projection_matches_wigner_space_conditioning():
    # small instance: integrate the joint Wigner over the reflected X- and compare
    dim = FockDim(16)
    cfg = ProtocolConfig.fock(1, 0.5, 0.3, dim=dim)
    X = 0.15
    out = condition_on_x(cfg.joint, X)
    ps = np.linspace(-3, 3, 121)
    w = np.ones_like(ps)
    w[0] = w[-1] = 0.5
    for a in (0.0, 0.3 + 0.1j, -0.2 + 0.4j, 0.6j):
        marg = sum(wi * joint_wigner_point(cfg.joint, a, X + 1j * p) for wi, p in zip(w, ps)) * (ps[1] - ps[0])
        assert marg / out.density == pytest.approx(float(wigner_values(out.state, np.array(a))), abs=5e-3)
