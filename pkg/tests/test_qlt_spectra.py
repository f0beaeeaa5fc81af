import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from conftest import make_model, stable_models
from oracles import lorentzian_pair
from optolev import lam, qlt
from optolev.errors import ConfigError, SingularityError
from optolev.spectra import FrequencyGrid, build_spectrum_set, spectra_from_channels

TWO_PI = 2 * math.pi
OBS = ("x", "y", "z", "Y_out", "P_out", "X_out")


def _rel(a, b):
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))


@settings(max_examples=30, deadline=None)
@given(stable_models(), st.floats(0, math.pi))
def test_closed_form_matches_matrix_inversion(model, angle):
    assume(model.is_stable())
    w = np.linspace(-2.5, 2.5, 257) * max(model.omega) + 17.0
    grid = FrequencyGrid(w)
    a = qlt.psd(model, grid, OBS, homodyne_angle=angle)
    b = qlt.psd(model, grid, OBS, engine="lam", homodyne_angle=angle)
    for o in OBS:
        assert _rel(a.unsymmetrized[o], b.unsymmetrized[o]) < 1e-8, o
    assert np.allclose(a.cross, b.cross, rtol=1e-8, atol=1e-12 * np.abs(b.cross).max())


@settings(max_examples=20, deadline=None)
@given(stable_models())
def test_one_d_spectra_equal_single_axis_system(model):
    assume(model.is_stable())
    grid = FrequencyGrid(np.linspace(-2, 2, 201) * max(model.omega))
    one = qlt.psd(model, grid, ("x", "y", "z"), one_d=True)
    for j, ax in enumerate("xyz"):
        g = [0j, 0j, 0j]
        g[j] = model.g[j]
        sub = model.replace(g=tuple(g), g_direct=(0.0, 0.0, 0.0))
        ref = qlt.psd(sub, grid, (ax,), engine="lam")
        assert _rel(one.unsymmetrized[ax], ref.unsymmetrized[ax]) < 1e-8


@settings(max_examples=15, deadline=None)
@given(stable_models())
def test_spectra_are_positive_and_hermitian(model):
    assume(model.is_stable())
    grid = FrequencyGrid(np.linspace(-2, 2, 101) * max(model.omega))
    s = qlt.psd(model, grid, ("x", "y", "z", "Y_out"))
    for o in s.labels:
        assert np.all(s.unsymmetrized[o] > 0)
    assert np.allclose(s.cross, np.conj(np.swapaxes(s.cross, 1, 2)))


def test_area_matches_lyapunov(hybrid_model):
    grid = FrequencyGrid.for_model(hybrid_model)
    s = qlt.psd(hybrid_model, grid, ("x", "y", "z"))
    q2 = lam.stationary_moments(lam.system_from_model(hybrid_model))["q2"]
    for j, ax in enumerate("xyz"):
        assert s.area(ax) == pytest.approx(q2[j], rel=1e-3)


def test_uncoupled_closed_form_is_lorentzian():
    m = make_model(TWO_PI * 1e5, TWO_PI * 8e4, TWO_PI * 5e4, 0, 0, 0, 0, TWO_PI * 1e5, -TWO_PI * 1e5,
                   gamma=TWO_PI * 50.0, nb=(7.0, 2.0, 0.0))
    w = np.linspace(-1.5, 1.5, 301) * TWO_PI * 1e5
    s = qlt.psd(m, FrequencyGrid(w), ("x", "Y_out"))
    assert np.allclose(s.unsymmetrized["x"], lorentzian_pair(w, m.omega[0], m.gamma, 7.0), rtol=1e-10)
    assert np.allclose(s.unsymmetrized["Y_out"], 1.0, rtol=1e-12)


def test_hybrid_coupling_without_partner():
    m = make_model(TWO_PI * 1.2e5, TWO_PI * 1e5, TWO_PI * 5e4, TWO_PI * 2e4, 0, TWO_PI * 1e4, 0,
                   TWO_PI * 2e5, -TWO_PI * 3e5)
    G = qlt.hybrid_coupling(m, np.linspace(1e5, 1e6, 50))
    assert np.all(G[0, 1] == 0) and np.all(G[1, 0] == 0)
    assert np.all(G[0, 0] == 0)
    assert np.any(G[0, 2] != 0)


def test_closed_form_singularity_reported():
    m = make_model(TWO_PI * 1e5, TWO_PI * 8e4, TWO_PI * 5e4, 0, 0, 0, 0, TWO_PI * 1e5, -TWO_PI * 1e5,
                   gamma=0.0)
    with pytest.raises(SingularityError):
        qlt.psd(m, FrequencyGrid(np.array([-1.0, m.omega[1]])), ("y",))


def test_unknown_observable_rejected(hybrid_model):
    with pytest.raises(ValueError):
        qlt.psd(hybrid_model, FrequencyGrid(np.array([1.0, 2.0])), ("w",))


@pytest.mark.parametrize("pts", [[1.0], [0.0, 0.0, 1.0], [2.0, 1.0], [0.0, np.nan]])
def test_grid_validation(pts):
    with pytest.raises(ConfigError):
        FrequencyGrid(pts)


def test_symmetrization_and_one_sided(hybrid_model):
    grid = FrequencyGrid(np.linspace(-3e6, 3e6, 601))
    s = qlt.psd(hybrid_model, grid, ("x",))
    u = s.unsymmetrized["x"]
    assert np.allclose(s.symmetrized["x"], 0.5 * (u + u[::-1]))
    w, one = s.one_sided("x")
    assert np.all(w >= 0) and np.allclose(one, 2 * s.symmetrized["x"][300:])


def test_asymmetric_grid_evaluates_negative_frequencies(hybrid_model):
    w = np.linspace(-1e6, 3e6, 101)
    weights = qlt.channel_weights(hybrid_model)

    def evaluate(om):
        return spectra_from_channels(qlt.closed_form_channels(hybrid_model, om, ("x",)), weights)

    s = build_spectrum_set(FrequencyGrid(w), evaluate, ["x"])
    neg = evaluate(-w)[:, 0, 0].real
    assert np.allclose(s.symmetrized["x"], 0.5 * (s.unsymmetrized["x"] + neg), rtol=1e-14)


def test_adaptive_grid_is_symmetric_and_resolves_peaks(ground_model):
    grid = FrequencyGrid.for_model(ground_model)
    assert grid.is_symmetric()
    assert grid.covers_both_sidebands(max(ground_model.omega))
