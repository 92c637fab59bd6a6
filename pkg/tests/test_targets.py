import numpy as np
import pytest

from condstate.errors import ContractError, TruncationError
from condstate.fock import FockDim, apply_squeeze, make_coherent, make_fock, make_squeezed_vacuum, make_vacuum
from condstate.optimize import engine_scs_fidelity
from condstate.protocol import ProtocolConfig, condition_on_x
from condstate.targets import (
    ScsSpec,
    coherent_transform,
    fidelity_scs_closed,
    make_scs,
    output_squeezing,
    squeezed_single_photon,
    squeezing_db,
)
from condstate.wigner import closed_wigner_scs, fidelity_overlap, wigner_values

DIM = FockDim(60)
PAPER_POINTS = [(2, -0.37, 1.1, 0.9997), (3, -0.34, 1.29, 0.9999), (4, -0.37, 1.49, 0.9997)]


def test_output_squeezing_examples():
    assert output_squeezing(0.7, 0.98) == pytest.approx(0.670, abs=1e-3)
    assert output_squeezing(-0.7, 0.5) == pytest.approx(-0.464, abs=1e-3)
    assert output_squeezing(0.0, 0.3) == pytest.approx(0.0, abs=1e-15)


def test_output_squeezing_limits():
    assert output_squeezing(np.inf, 0.75) == pytest.approx(-0.5 * np.log(0.25))
    assert output_squeezing(40.0, 0.75) == pytest.approx(-0.5 * np.log(0.25))
    assert output_squeezing(np.inf, 1.0) == np.inf
    with pytest.raises(ContractError):
        output_squeezing(0.1, 1.5)


def test_output_squeezing_monotone():
    s = np.linspace(-2, 2, 41)
    assert np.all(np.diff([output_squeezing(v, 0.6) for v in s]) > 0)
    R = np.linspace(0.01, 0.99, 30)
    assert np.all(np.diff([output_squeezing(0.5, r) for r in R]) > 0)


def test_squeezing_db():
    assert squeezing_db(0.7) == pytest.approx(6.08, abs=0.01)
    assert squeezing_db(0.67) == pytest.approx(5.82, abs=0.01)
    assert squeezing_db(-0.464) == pytest.approx(4.03, abs=0.01)
    assert squeezing_db(-0.37) == pytest.approx(3.21, abs=0.01)


def test_scs_limits():
    assert fidelity_overlap(make_scs(ScsSpec(1e-3j, "even"), DIM), make_vacuum(DIM)) == pytest.approx(1, abs=1e-6)
    assert fidelity_overlap(make_scs(ScsSpec(1e-3j, "odd"), DIM), make_fock(1, DIM)) > 1 - 1e-5


@pytest.mark.parametrize("parity", ["even", "odd"])
def test_scs_parity_and_wigner(parity):
    psi = make_scs(ScsSpec(1.1j, parity), DIM)
    wrong = psi.populations[1::2] if parity == "even" else psi.populations[0::2]
    assert np.sum(wrong) < 1e-14
    xs = np.linspace(-2, 2, 11)
    a = xs[:, None] + 1j * xs[None, :]
    assert np.max(np.abs(wigner_values(psi, a) - closed_wigner_scs(a, 1.1j, parity))) < 1e-8


def test_scs_validation():
    with pytest.raises(ContractError):
        ScsSpec(0.0)
    with pytest.raises(ContractError):
        ScsSpec(1j, "neither")
    with pytest.raises(TruncationError):
        make_scs(ScsSpec(5.0j), FockDim(20))


@pytest.mark.parametrize("n,s,g,f", PAPER_POINTS)
def test_closed_fidelity_reference_values(n, s, g, f):
    assert fidelity_scs_closed(n, s, g) == pytest.approx(f, abs=1e-4)
    assert fidelity_scs_closed(n, s, 1j * g) == pytest.approx(fidelity_scs_closed(n, s, g))


@pytest.mark.parametrize("n,s,g,f", PAPER_POINTS)
def test_closed_fidelity_matches_engine_nearby(n, s, g, f):
    for ds in (-0.05, 0.0, 0.05):
        for dg in (-0.1, 0.0, 0.1):
            assert engine_scs_fidelity(n, s + ds, g + dg, DIM) == pytest.approx(fidelity_scs_closed(n, s + ds, g + dg), abs=1e-4)


def test_closed_fidelity_preconditions():
    with pytest.raises(ContractError):
        fidelity_scs_closed(5, -0.3, 1.0)
    with pytest.raises(ContractError):
        fidelity_scs_closed(2, -0.3, 1 + 1j)


def test_printed_grouping_differs():
    # the literal exponent grouping does not reproduce the quoted optimum
    assert fidelity_scs_closed(2, -0.37, 1.1, printed=True) < 0.9


def test_single_photon_output_is_squeezed_photon():
    for s in (-0.6, 0.2, 0.7):
        for R in (0.2, 0.5, 0.9):
            out = condition_on_x(ProtocolConfig.fock(1, R, s, dim=DIM).joint, 0.0).state
            target = squeezed_single_photon(output_squeezing(s, R), DIM)
            assert fidelity_overlap(out, target) > 1 - 1e-8


def test_coherent_transform_zero_amplitude():
    res = coherent_transform(0, 0.4, 0.6)
    assert fidelity_overlap(res.state(DIM), make_squeezed_vacuum(res.s_prime, DIM)) == pytest.approx(1, abs=1e-12)
    vp, vm = res.variances
    assert vp * vm == pytest.approx(1 / 16)


def test_coherent_transform_matches_engine():
    g = 1 + 0.5j
    res = coherent_transform(g, 0.52, 0.75)
    out = condition_on_x(ProtocolConfig(make_coherent(g, DIM), 0.75, 0.52).joint, 0.0).state
    assert fidelity_overlap(out, res.state(DIM)) > 1 - 1e-6
    assert out.density().purity == pytest.approx(1, abs=1e-6)


@pytest.mark.parametrize("g", [0.5, 0.3j, 0.35 - 0.35j])
def test_coherent_transform_ideal_squeezer(g):
    # large ancilla squeezing: output approaches S(s') D(gamma)|0>
    R = 0.5
    res = coherent_transform(g, 6.0, R)
    sp = -0.5 * np.log(1 - R)
    assert res.s_prime == pytest.approx(sp, abs=1e-5)
    ideal = apply_squeeze(make_coherent(g, DIM), sp)
    assert fidelity_overlap(res.state(DIM), ideal) > 0.999
