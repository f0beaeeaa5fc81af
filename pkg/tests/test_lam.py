import math

import numpy as np
import pytest
from hypothesis import assume, given, settings

from conftest import make_model, stable_models
from oracles import heisenberg_matrix, lorentzian_pair, lyapunov_kron, noise_diag, spectra_by_solve
from optolev import lam
from optolev.errors import SingularityError
from optolev.spectra import FrequencyGrid

TWO_PI = 2 * math.pi


@settings(max_examples=30, deadline=None)
@given(stable_models())
def test_drift_matches_heisenberg_oracle(model):
    d = lam.build_drift(lam.system_from_model(model))
    A = heisenberg_matrix(model.omega, model.g, model.g_matrix, model.kappa, model.gamma,
                          model.detuning_eff)
    assert np.allclose(d.A, A, rtol=0, atol=1e-12 * np.abs(A).max())
    assert np.allclose(d.noise_diag, noise_diag(model.kappa, model.gamma, model.bath_occupancy))


@settings(max_examples=20, deadline=None)
@given(stable_models())
def test_displacement_spectra_match_per_frequency_solve(model):
    assume(model.is_stable())
    system = lam.system_from_model(model)
    w = np.linspace(-2, 2, 41) * max(model.omega) + 1.234
    T = lam.transfer(system, w).T
    rows = lam.displacement_rows(system, T)
    d = lam.build_drift(system)
    S = np.einsum("fik,k,fik->fi", rows, d.noise_diag, rows.conj()).real
    R = np.zeros((3, system.size))
    for k in range(3):
        R[k, 2 + 2 * k: 4 + 2 * k] = 1
    ref = spectra_by_solve(d.A, d.noise_diag, w, R)
    assert np.allclose(S, ref, rtol=1e-8)


@settings(max_examples=20, deadline=None)
@given(stable_models())
def test_lyapunov_matches_kronecker_solution(model):
    assume(model.is_stable())
    d = lam.build_drift(lam.system_from_model(model))
    ref = lyapunov_kron(d.A, d.noise)
    assert np.allclose(lam.lyapunov(d), ref, rtol=1e-7, atol=1e-9 * np.abs(ref).max())


def test_lyapunov_equals_integrated_spectrum(hybrid_model):
    system = lam.system_from_model(hybrid_model)
    grid = FrequencyGrid.for_model(hybrid_model)
    S = lam.spectral_matrix(system, grid.points)
    area = grid.integrate(S, axis=0)
    sigma = lam.lyapunov(system)
    for k in range(3):
        j = system.mechanical_index(k)
        assert area[j + 1, j + 1].real == pytest.approx(sigma[j + 1, j + 1].real, rel=1e-3)


def test_uncoupled_mode_is_lorentzian():
    m = make_model(TWO_PI * 1e5, TWO_PI * 8e4, TWO_PI * 5e4, 0, 0, 0, 0, TWO_PI * 1e5, -TWO_PI * 1e5,
                   gamma=TWO_PI * 50.0, nb=(7.0, 7.0, 7.0))
    system = lam.system_from_model(m)
    w = np.linspace(-1.5, 1.5, 301) * TWO_PI * 1e5
    rows = lam.displacement_rows(system, lam.transfer(system, w).T)
    d = lam.build_drift(system)
    S = np.einsum("fk,k,fk->f", rows[:, 0], d.noise_diag, rows[:, 0].conj()).real
    # positive frequencies carry the n + 1 (b_in) weight
    ref = lorentzian_pair(w, m.omega[0], m.gamma, 7.0)
    assert np.allclose(S, ref, rtol=1e-10)


def test_moments_of_uncoupled_modes():
    nb = (3.0, 40.0, 0.0)
    m = make_model(TWO_PI * 1e5, TWO_PI * 8e4, TWO_PI * 5e4, 0, 0, 0, 0, TWO_PI * 1e5, -TWO_PI * 1e5,
                   nb=nb)
    mom = lam.stationary_moments(lam.system_from_model(m))
    assert np.allclose(mom["n"], nb, atol=1e-9)
    assert np.allclose(mom["q2"], 2 * np.array(nb) + 1, atol=1e-9)
    brown = lam.stationary_moments(lam.system_from_model(m, bath_model="brownian"))
    assert np.allclose(brown["q2"][:2], 2 * np.array(nb[:2]), rtol=1e-9)


@pytest.mark.parametrize("n_opt", [0.0, 2.5])
def test_uncoupled_output_is_input_noise(n_opt):
    m = make_model(TWO_PI * 1e5, TWO_PI * 8e4, TWO_PI * 5e4, 0, 0, 0, 0, TWO_PI * 1e5, -TWO_PI * 1e5)
    system = lam.system_from_model(m, optical_bath=n_opt)
    w = np.linspace(-3e6, 3e6, 11)
    T = lam.transfer(system, w).T
    for angle in (0.0, 0.3, math.pi / 2):
        row = lam.output_rows(system, T, angle)
        S = np.einsum("fk,k,fk->f", row, lam.build_drift(system).noise_diag, row.conj()).real
        assert np.allclose(S, 2 * n_opt + 1, rtol=1e-12)


def test_undamped_resonance_is_singular():
    m = make_model(TWO_PI * 1e5, TWO_PI * 8e4, TWO_PI * 5e4, 0, 0, 0, 0, TWO_PI * 1e5, -TWO_PI * 1e5,
                   gamma=0.0)
    system = lam.system_from_model(m)
    with pytest.raises(SingularityError) as err:
        lam.transfer(system, np.array([0.0, -m.omega[0]]))
    assert err.value.omega == pytest.approx(-m.omega[0])


def test_stability_flag(hybrid_model):
    d = lam.build_drift(lam.system_from_model(hybrid_model))
    assert d.is_stable()
    blue = hybrid_model.replace(detuning_eff=-hybrid_model.detuning_eff)
    assert not lam.build_drift(lam.system_from_model(blue)).is_stable()
