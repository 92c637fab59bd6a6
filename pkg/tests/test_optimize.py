import numpy as np
import pytest

from condstate.errors import ContractError
from condstate.optimize import SweepSpec, maximize_over_s, maximize_over_s_and_gamma, run_sweep, write_table_csv
from condstate.targets import fidelity_scs_closed


@pytest.mark.parametrize("n,g,s,f", [(2, 1.1, -0.37, 0.9997), (3, 1.29, -0.34, 0.9999)])
def test_maximize_over_s(n, g, s, f):
    s_star, f_star = maximize_over_s(n, g)
    assert s_star == pytest.approx(s, abs=0.01)
    assert f_star == pytest.approx(f, abs=1e-4)
    for d in (-0.01, 0.01):
        assert fidelity_scs_closed(n, s_star + d, g) <= f_star


def test_maximize_small_gamma_smoke():
    s, f = maximize_over_s(2, 0.05)
    assert np.isfinite(s) and 0 < f <= 1


def test_maximize_rejects_zero_gamma():
    with pytest.raises(ContractError):
        maximize_over_s(2, 0.0)


@pytest.mark.parametrize("n,s,g", [(2, -0.37, 1.1), (3, -0.34, 1.29), (4, -0.37, 1.49)])
def test_joint_maximum(n, s, g):
    s_star, g_star, _ = maximize_over_s_and_gamma(n)
    assert s_star == pytest.approx(s, abs=0.02)
    assert g_star == pytest.approx(g, abs=0.02)


def test_engine_and_closed_optima_agree():
    s_c, g_c, f_c = maximize_over_s_and_gamma(2)
    s_e, g_e, f_e = maximize_over_s_and_gamma(2, engine=True)
    assert s_e == pytest.approx(s_c, abs=0.01)
    assert g_e == pytest.approx(g_c, abs=0.01)
    assert f_e == pytest.approx(f_c, abs=1e-6)


@pytest.mark.parametrize("n", [3, 4])
def test_engine_inner_maximum_agrees(n):
    g = {3: 1.29, 4: 1.49}[n]
    assert maximize_over_s(n, g, engine=True)[0] == pytest.approx(maximize_over_s(n, g)[0], abs=0.01)


def test_sweep_spec_validation():
    with pytest.raises(ContractError):
        SweepSpec("x0", (0.1,))
    with pytest.raises(ContractError):
        SweepSpec("x0", (0.2, 0.1))
    with pytest.raises(ContractError):
        SweepSpec("temperature", (0.1, 0.2))
    with pytest.raises(ContractError):
        SweepSpec("x0", (0.1, 0.2), {"colour": 1})
    with pytest.raises(ContractError):
        SweepSpec("x0", (0.1, 0.2), kind="other")


def test_single_photon_sweep_endpoint():
    rows = run_sweep(SweepSpec("x0", (0.01, 0.025), {"n": 1, "s": 0.7, "R": 0.98}))
    assert rows[1]["f_ave"] == pytest.approx(0.99, abs=0.005)
    assert rows[1]["p_s"] == pytest.approx(0.003, abs=0.001)


def test_three_photon_sweep_point():
    rows = run_sweep(SweepSpec("x0", (0.017, 0.058), {"n": 3, "s": -0.34, "gamma": 1.29, "R": 0.5}))
    assert rows[1]["f_ave"] == pytest.approx(0.99, abs=0.005)
    assert rows[1]["p_s"] == pytest.approx(0.028, abs=0.003)


def test_sweep_probability_monotone_and_order_free():
    spec = SweepSpec("x0", tuple(np.linspace(0.005, 0.2, 12)), {"n": 2, "s": -0.37, "gamma": 1.1, "R": 0.5})
    rows = run_sweep(spec, workers=3)
    assert [r["x0"] for r in rows] == list(spec.grid)
    assert np.all(np.diff([r["p_s"] for r in rows]) >= 0)
    # each point is independent: splitting the grid gives the same rows
    odd = run_sweep(SweepSpec("x0", spec.grid[1::2], spec.fixed))
    assert odd == rows[1::2]


def test_sweep_over_success_probability():
    rows = run_sweep(SweepSpec("success_probability", (0.01, 0.02), {"n": 1, "s": -0.7, "R": 0.5}))
    assert [r["p_s"] for r in rows] == pytest.approx([0.01, 0.02], abs=1e-9)


def test_sweep_records_point_errors():
    rows = run_sweep(SweepSpec("s", (0.5, 2.5), {"n": 1, "R": 0.98, "x0": 0.02}))
    assert rows[0]["error"] == ""
    assert "Error" in rows[1]["error"] and np.isnan(rows[1]["f_ave"])


def test_experiment_sweep(tmp_path):
    rows = run_sweep(SweepSpec("gamma", (0.2, 0.6, 1.0), {"reflectivity": 0.75, "threshold": 0.009}, kind="experiment"))
    assert all(r["f_ave"] > 0.8 for r in rows)
    assert rows[0]["g_minus"] == pytest.approx(0.5, abs=1e-6)
    write_table_csv(rows, tmp_path / "t.csv", "gamma")
    header = (tmp_path / "t.csv").read_text().splitlines()[0].split(",")
    assert header[0] == "gamma" and "p_norm" in header


def test_coherent_protocol_sweep():
    rows = run_sweep(SweepSpec("gamma", (0.5, 1.0), {"input": "coherent", "s": 0.5, "R": 0.5, "x0": 0.02}))
    assert all(r["f_ave"] > 0.999 for r in rows)
