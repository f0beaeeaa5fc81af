import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_model
from optolev import lam, presets, qlt, thermometry as th
from optolev.errors import ConfigError
from optolev.spectra import FrequencyGrid

TWO_PI = 2 * math.pi


def weak_model(nb=50.0, g=TWO_PI * 2e3, gamma=TWO_PI * 100.0):
    return make_model(TWO_PI * 3e5, TWO_PI * 2.2e5, TWO_PI * 8e4, g, 0.5 * g, 0.0, 0.0,
                      TWO_PI * 2e5, -TWO_PI * 3e5, gamma=gamma, nb=(nb, nb, nb))


def test_area_occupancy_matches_lyapunov(ground_model):
    grid = FrequencyGrid.for_model(ground_model)
    s = qlt.psd(ground_model, grid, ("x", "y"))
    n_lyap = th.lyapunov_occupancy(ground_model)
    for j, ax in enumerate("xy"):
        assert th.occupancy_from_psd(s, ax) == pytest.approx(n_lyap[j], rel=5e-3)


@settings(max_examples=15, deadline=None)
@given(st.floats(1.0, 500.0), st.floats(0.5, 3.0))
def test_cooling_formula_weak_coupling(nb, g_khz):
    m = weak_model(nb, TWO_PI * g_khz * 1e3)
    grid = FrequencyGrid.for_model(m)
    s = qlt.psd(m, grid, ("x",), one_d=True)
    assert th.cooling_formula_occupancy(m, "x") == pytest.approx(th.occupancy_from_psd(s, "x"), rel=0.05)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 200.0))
def test_uncoupled_sideband_asymmetry(nb):
    m = make_model(TWO_PI * 3e5, TWO_PI * 2.2e5, TWO_PI * 8e4, 0, 0, 0, 0, TWO_PI * 2e5,
                   -TWO_PI * 3e5, gamma=TWO_PI * 100.0, nb=(nb, nb, nb))
    s = qlt.psd(m, FrequencyGrid.for_model(m), ("x",))
    red, blue, ratio = th.sideband_occupancy(s, "x")
    assert ratio == pytest.approx(nb / (nb + 1), rel=1e-2)
    assert red == pytest.approx(blue, rel=1e-2)


def test_positive_only_grid_rejected(ground_model):
    s = qlt.psd(ground_model, FrequencyGrid(np.linspace(1e5, 3e6, 100)), ("x",))
    with pytest.raises(ConfigError):
        th.occupancy_from_psd(s, "x")
    with pytest.raises(ConfigError):
        th.sideband_occupancy(s, "x")


def test_self_energy_matches_eigenvalues():
    m = weak_model(g=TWO_PI * 8e3)
    for j in (0, 1):
        g = [0j, 0j, 0j]
        g[j] = m.g[j]
        sub = m.replace(g=tuple(g))
        eig = lam.build_drift(lam.system_from_model(sub)).eigenvalues
        # mechanical eigenvalue with positive frequency: -i w_eff - G_eff / 2 has Im < 0
        k = np.argmin(np.abs(eig + 1j * m.omega[j]))
        _, dw, dg = th.self_energy(m, np.array([0.0]), j, one_d=True)
        assert -eig[k].imag - m.omega[j] == pytest.approx(dw, rel=0.05)
        assert -2 * eig[k].real - m.gamma == pytest.approx(dg, rel=0.05)


def test_red_detuning_cools_and_softens():
    rep = th.spring_report(weak_model(), np.array([0.0]), one_d=True)
    assert np.all(rep.delta_gamma[:2] > 0)
    assert rep.delta_gamma[2] == 0.0


def test_heterodyne_ratio_bounds(ground_model):
    R, frac = th.heterodyne_ratio(ground_model)
    assert R > 0 and 0 < frac < 1
    assert frac == pytest.approx(R / (1 + R))


def test_heterodyne_ratio_without_y_coupling():
    m = weak_model().replace(g=(TWO_PI * 2e3 + 0j, 0j, 0j))
    assert th.heterodyne_ratio(m, omega=m.omega[1]) == (float("inf"), 1.0)


def test_occupancy_report_consistency(ground_model):
    rep = th.occupancy_report(ground_model)
    assert np.allclose(rep.n_3d[:2], rep.n_lyapunov[:2], rtol=5e-3)
    assert set(rep.as_dict()) >= {"n_1d_x", "n_3d_y", "asymmetry_z"}


def test_degeneracy_inside_bracket():
    s = presets.ground_state_setup()
    lo, hi = -TWO_PI * 700e3, -TWO_PI * 200e3
    d, gap = th.frequency_degeneracy(s, (lo, hi))
    assert lo <= d <= hi and gap >= 0
