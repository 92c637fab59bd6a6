import numpy as np
import pytest

from condstate.errors import ContractError
from condstate.fock import DensityOperator, FockDim, PureState, apply_squeeze, make_coherent, make_fock, make_squeezed_vacuum, make_vacuum
from condstate.targets import ScsSpec, make_scs
from condstate.wigner import (
    WignerGrid,
    closed_wigner_fock1,
    closed_wigner_scs,
    closed_wigner_sqz,
    closed_wigner_ssp,
    fidelity_overlap,
    fidelity_wigner,
    wigner_grid,
    wigner_point,
    wigner_values,
)

DIM = FockDim(60)
XS = np.linspace(-2, 2, 21)
GRID = XS[:, None] + 1j * XS[None, :]


def test_point_examples():
    assert wigner_point(make_vacuum(DIM), 0) == pytest.approx(2 / np.pi)
    assert wigner_point(make_fock(1, DIM), 0) == pytest.approx(-2 / np.pi)
    a = 0.3 + 0.2j
    assert wigner_point(make_squeezed_vacuum(0.7, DIM), a) == pytest.approx(closed_wigner_sqz(a, 0.7), abs=1e-12)


def test_closed_ssp():
    assert closed_wigner_ssp(0, 0.4) == pytest.approx(-2 / np.pi)
    assert np.allclose(closed_wigner_ssp(GRID, 0.0), closed_wigner_fock1(GRID))
    assert closed_wigner_ssp(0.5, 0.67) == pytest.approx(wigner_point(apply_squeeze(make_fock(1, DIM), 0.67), 0.5), abs=1e-8)


@pytest.mark.parametrize(
    "state,oracle",
    [
        (make_fock(1, DIM), closed_wigner_fock1),
        (apply_squeeze(make_fock(1, FockDim(80)), 0.67), lambda a: closed_wigner_ssp(a, 0.67)),
        (make_scs(ScsSpec(1.1j, "even"), DIM), lambda a: closed_wigner_scs(a, 1.1j, "even")),
        (make_scs(ScsSpec(1.29j, "odd"), DIM), lambda a: closed_wigner_scs(a, 1.29j, "odd")),
    ],
)
def test_engine_matches_closed_forms(state, oracle):
    assert np.max(np.abs(wigner_values(state, GRID) - oracle(GRID))) < 1e-8


def test_closed_scs_limits():
    assert closed_wigner_scs(0, 0.8j, "odd") == pytest.approx(-2 / np.pi)
    assert np.allclose(closed_wigner_scs(GRID, 1e-4j, "even"), closed_wigner_sqz(GRID, 0.0), atol=1e-6)


def test_fidelity_examples():
    psi = make_squeezed_vacuum(0.3, DIM)
    assert fidelity_overlap(psi, psi) == pytest.approx(1)
    assert fidelity_overlap(make_vacuum(DIM), make_fock(1, DIM)) == 0
    assert fidelity_overlap(make_coherent(1.0, DIM), make_vacuum(DIM)) == pytest.approx(np.exp(-1))


def test_fidelity_rejects_mixed_target():
    rho = DensityOperator(np.diag([0.5, 0.5] + [0] * (DIM.size - 2)).astype(complex), DIM)
    with pytest.raises(ContractError):
        fidelity_overlap(make_vacuum(DIM), rho)


def test_grid_normalization_and_csv(tmp_path):
    grid = wigner_grid(make_fock(1, DIM), np.linspace(-4, 4, 81), workers=2)
    assert grid.integral() == pytest.approx(1, abs=5e-3)
    path = tmp_path / "w.csv"
    grid.to_csv(path)
    assert path.read_text().splitlines()[0] == "x,p,w"
    back = WignerGrid.from_csv(path)
    assert np.allclose(back.values, grid.values, atol=1e-11)


def test_grid_independent_of_workers():
    axis = np.linspace(-3, 3, 31)
    rho = make_scs(ScsSpec(1j, "even"), DIM)
    assert np.array_equal(wigner_grid(rho, axis, workers=1).values, wigner_grid(rho, axis, workers=3).values)


def test_wigner_route_matches_fock():
    rng = np.random.default_rng(4)
    amps = np.zeros(DIM.size, dtype=complex)
    amps[:4] = rng.normal(size=4) + 1j * rng.normal(size=4)
    a = PureState(amps, DIM).normalize()
    b = make_coherent(0.4 + 0.3j, DIM)
    assert fidelity_wigner(a, b, extent=4.0, points=121) == pytest.approx(fidelity_overlap(a, b), abs=5e-3)


def test_purity_from_wigner():
    rng = np.random.default_rng(2)
    v = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    m = np.zeros((DIM.size, DIM.size), dtype=complex)
    m[:4, :4] = v @ v.conj().T
    rho = DensityOperator(m / np.trace(m).real, DIM)
    grid = wigner_grid(rho, np.linspace(-4, 4, 121))
    assert np.pi * np.sum(grid.values**2) * grid.cell_area == pytest.approx(rho.purity, abs=5e-3)


@pytest.mark.parametrize(
    "state,negative",
    [
        (make_fock(1, DIM), True),
        (make_fock(3, DIM), True),
        (make_scs(ScsSpec(1.1j, "even"), DIM), True),
        (make_scs(ScsSpec(1.1j, "odd"), DIM), True),
        (make_vacuum(DIM), False),
        (make_coherent(1 - 0.5j, DIM), False),
        (make_squeezed_vacuum(0.7, DIM), False),
    ],
)
def test_negativity_marks_non_gaussian(state, negative):
    grid = wigner_grid(state, np.linspace(-3, 3, 61))
    assert (grid.minimum() < -1e-3) == negative
