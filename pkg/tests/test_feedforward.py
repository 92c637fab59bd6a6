import numpy as np
import pytest

from condstate.errors import ContractError
from condstate.feedforward import (
    FeedforwardConfig,
    compare_vs_postselection,
    feedforward_fidelity,
    feedforward_output,
    purity_preserving_gain,
    standard_gain,
    write_comparison_csv,
)
from condstate.fock import FockDim, make_coherent, make_fock
from condstate.gaussian_experiment import GaussianState, gaussian_bs
from condstate.protocol import ProtocolConfig, average_state, condition_on_x
from condstate.targets import coherent_transform, output_squeezing, squeezed_single_photon
from condstate.wigner import fidelity_overlap, wigner_grid, wigner_point

DIM = FockDim(60)
AXIS = np.linspace(-3, 3, 61)


@pytest.fixture(scope="module")
def target():
    return squeezed_single_photon(output_squeezing(0.7, 0.98), DIM)


def test_standard_gain_examples():
    assert standard_gain(0.5) == pytest.approx(1)
    assert standard_gain(0.75) == pytest.approx(np.sqrt(3))
    assert standard_gain(0.0) == 0
    with pytest.raises(ContractError):
        standard_gain(1.0)


def test_standard_gain_restores_ideal_squeezed_centre():
    # the X+ mean after correction, against the ideal squeeze of the input
    R = 0.75
    T = 1 - R
    g_in = 0.7
    joint = gaussian_bs(GaussianState.coherent(g_in), GaussianState.squeezed(0.5), R)
    gains = np.linspace(0, 3, 301)
    err = [abs(joint.mean[0] + k * joint.mean[2] - g_in / np.sqrt(T)) for k in gains]
    assert gains[int(np.argmin(err))] == pytest.approx(standard_gain(R), abs=0.01)


def test_purity_gain_examples():
    assert purity_preserving_gain(0.0, 0.4) == 0
    assert purity_preserving_gain(20.0, 0.4) == pytest.approx(standard_gain(0.4))


@pytest.mark.parametrize("s", [0.2, 0.5, 0.7])
def test_purity_gain_reproduces_transform(s):
    R, g = 0.5, 0.6 + 0.3j
    rho = feedforward_output(FeedforwardConfig(purity_preserving_gain(s, R), R, s), make_coherent(g, DIM))
    assert rho.purity == pytest.approx(1, abs=1e-6)
    assert fidelity_overlap(rho, coherent_transform(g, s, R).state(DIM)) > 1 - 1e-6


def test_config_validation():
    with pytest.raises(ContractError):
        FeedforwardConfig(np.inf, 0.5, 0.3)
    with pytest.raises(ContractError):
        FeedforwardConfig(1.0, 0.5, 0.3, threshold=0.0)


def test_unity_gain_full_window_washes_out(target):
    rho = feedforward_output(FeedforwardConfig(1.0, 0.98, 0.7), make_fock(1, DIM))
    assert wigner_grid(rho, AXIS).minimum() > -0.05
    assert fidelity_overlap(rho, target) < 0.5


def test_unity_gain_windowed(target):
    rho = feedforward_output(FeedforwardConfig(1.0, 0.98, 0.7, 0.1), make_fock(1, DIM))
    assert fidelity_overlap(rho, target) == pytest.approx(0.87, abs=0.02)
    assert wigner_point(rho, 0.0) == pytest.approx(-0.48, abs=0.03)
    assert feedforward_fidelity(FeedforwardConfig(1.0, 0.98, 0.7, 0.1), make_fock(1, DIM), target) == pytest.approx(fidelity_overlap(rho, target))


def test_negativity_ordering():
    ff = feedforward_output(FeedforwardConfig(1.0, 0.98, 0.7), make_fock(1, DIM))
    ps = average_state(ProtocolConfig.fock(1, 0.98, 0.7, 0.1, DIM))
    assert wigner_grid(ff, AXIS).minimum() > wigner_grid(ps, AXIS).minimum()


def test_zero_gain_tiny_window_is_conditioning():
    rho = feedforward_output(FeedforwardConfig(0.0, 0.98, 0.7, 1e-4), make_fock(1, DIM))
    x0_state = condition_on_x(ProtocolConfig.fock(1, 0.98, 0.7, dim=DIM).joint, 0.0).state
    assert fidelity_overlap(rho, x0_state) > 1 - 1e-6


def test_no_gain_rescues_single_photon():
    # large gains displace far, so this scan needs a larger cutoff
    dim = FockDim(150)
    one = make_fock(1, dim)
    target = squeezed_single_photon(output_squeezing(0.7, 0.98), dim)
    best = max(feedforward_fidelity(FeedforwardConfig(g, 0.98, 0.7), one, target) for g in np.arange(0, 3.0001, 0.05))
    assert best < 0.95


def test_comparison_small_amplitude():
    rows = compare_vs_postselection(0.5, np.linspace(0, 1, 11))
    assert all(r.fidelity_ps >= r.fidelity_ff for r in rows)


def test_comparison_at_zero_squeezing_with_purity_gain():
    for g in (0.5, 1.0, 2.0):
        (row,) = compare_vs_postselection(g, [0.0], gain="purity")
        assert row.fidelity_ff == pytest.approx(row.fidelity_ps, abs=1e-6)


def test_comparison_large_amplitude_converges():
    (row,) = compare_vs_postselection(2.0, [2.0])
    assert abs(row.fidelity_ps - row.fidelity_ff) < 0.02


def test_comparison_csv(tmp_path):
    path = tmp_path / "c.csv"
    write_comparison_csv(compare_vs_postselection(1.0, [0.0, 0.5]), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "s,fidelity_ff,fidelity_ps"
    assert len(lines) == 3
