"""Occupancies, optical spring and damping, and hybridisation diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lam, qlt
from .derivation import AXES, LinearizedModel
from .errors import ConfigError, SingularityError
from .spectra import FrequencyGrid, SpectrumSet, build_spectrum_set


def _axis(axis) -> int:
    return AXES.index(axis) if isinstance(axis, str) else int(axis)


def occupancy_from_psd(spectra: SpectrumSet, axis) -> float:
    """Phonon occupancy from the area of a displacement PSD.

    ``n = (int Sbar dw/2pi - 1) / 2``.

    Raises
    ------
    ConfigError
        If the grid does not reach both signs of frequency.
    """
    label = axis if isinstance(axis, str) else AXES[axis]
    if not (spectra.grid.points[0] < 0 < spectra.grid.points[-1]):
        raise ConfigError("grid must cover both sidebands (negative and positive frequencies)")
    return (spectra.area(label) - 1) / 2


def sideband_occupancy(spectra: SpectrumSet, axis):
    """Occupancies from the two sidebands separately.

    Returns ``(n_red, n_blue, red/blue)`` where the negative-frequency area is
    ``n`` and the positive-frequency area is ``n + 1``, so that the
    red/blue ratio of an uncoupled mode is ``n / (n + 1)``.
    """
    label = axis if isinstance(axis, str) else AXES[axis]
    if not (spectra.grid.points[0] < 0 < spectra.grid.points[-1]):
        raise ConfigError("grid must cover both sidebands (negative and positive frequencies)")
    red, blue = spectra.sideband_areas(label)
    return red, blue - 1, red / blue


@dataclass(frozen=True)
class SpringReport:
    """Optical spring and damping per axis.

    ``delta_omega = Im Sigma(omega_j)`` and ``delta_gamma = 2 Re Sigma(omega_j)``.
    """

    delta_omega: np.ndarray
    delta_gamma: np.ndarray
    sigma: dict = field(default_factory=dict)


def self_energy(model: LinearizedModel, grid, axis, one_d: bool = False):
    """Mechanical self-energy from the cavity.

    ``Sigma_x = g_x^2 eta^(0) / (1 + g_y^2 mu_y eta^(0))`` and x <-> y;
    ``Sigma_z = g_z^2 eta^(0)`` (the z coupling is not dressed).  With
    ``one_d`` the denominator is 1.  Sigma is in rad/s and adds to the
    inverse susceptibility ``-i (w - w_j) + Gamma/2`` near ``w ~ w_j``, so
    the frequency shifts by ``Im Sigma`` and the damping by ``2 Re Sigma``.

    Returns
    -------
    sigma : ndarray
        Sigma(w) on the grid.
    delta_omega, delta_gamma : float
        Evaluated at the bare frequency omega_j.

    Raises
    ------
    SingularityError
        Where the denominator vanishes.
    """
    j = _axis(axis)
    w = grid.points if isinstance(grid, FrequencyGrid) else np.atleast_1d(np.asarray(grid, float))

    def sig(om):
        e0 = qlt.eta(om, model.detuning_eff, model.kappa, 0.0)
        num = abs(model.g[j]) ** 2 * e0
        if one_d or j == 2:
            return num
        other = 1 - j
        den = 1 + abs(model.g[other]) ** 2 * qlt.mu(om, model.omega[other], model.gamma) * e0
        if np.any(np.abs(den) < qlt.SINGULAR_TOL):
            i = int(np.argmin(np.abs(den)))
            raise SingularityError("self-energy denominator vanishes",
                                   omega=float(np.atleast_1d(om)[i]))
        return num / den

    s = sig(w)
    s0 = complex(np.atleast_1d(sig(np.array([model.omega[j]])))[0])
    return s, s0.imag, 2 * s0.real


def spring_report(model: LinearizedModel, grid, one_d: bool = False) -> SpringReport:
    dw, dg, sig = [], [], {}
    for j, ax in enumerate(AXES):
        s, a, b = self_energy(model, grid, j, one_d)
        sig[ax] = s
        dw.append(a)
        dg.append(b)
    return SpringReport(np.array(dw), np.array(dg), sig)


def cooling_formula_occupancy(model: LinearizedModel, axis, one_d: bool = True) -> float:
    """Standard optomechanical cooling estimate.

    ``n = (Gamma n_B + A_+) / (Gamma + delta_Gamma)`` with the heating rate
    ``A_+ = |g|^2 kappa / (kappa^2/4 + (Delta - omega)^2)`` and
    ``delta_Gamma`` from the self-energy.  Without back-action heating
    this reduces to ``n_B Gamma / (Gamma + delta_Gamma)``.
    """
    j = _axis(axis)
    om = model.omega[j]
    _, _, dg = self_energy(model, np.array([om]), j, one_d)
    k, d = model.kappa, model.detuning_eff
    a_plus = abs(model.g[j]) ** 2 * k / (k ** 2 / 4 + (d - om) ** 2)
    return (model.gamma * model.bath_occupancy[j] + a_plus) / (model.gamma + dg)


def lyapunov_occupancy(model: LinearizedModel) -> np.ndarray:
    """``(<q_j^2> - 1) / 2`` from the stationary covariance."""
    mom = lam.stationary_moments(lam.system_from_model(model))
    return (mom["q2"] - 1) / 2


def rescaled_psd_model(model: LinearizedModel, grid) -> dict:
    """Approximate 3D spectra from 1D spectra and the x-y hybridisation.

    ``S_yy ~ S_yy^1D / |N|^2`` and ``S_xx ~ S_xx^1D + |G_xy|^2 S_yy``, with
    ``N = 1 - G_yx G_xy``.  Intended for a particle at a node (no direct
    couplings).

    Returns
    -------
    dict
        ``spectra`` (a SpectrumSet with x and y), ``n`` (occupancies).
    """
    if not isinstance(grid, FrequencyGrid):
        grid = FrequencyGrid(grid)
    weights = qlt.channel_weights(model)

    def evaluate(w):
        ch = qlt.closed_form_channels(model, w, ("x", "y"), one_d=True)
        s1 = np.einsum("foc,c,foc->fo", ch, weights, ch.conj()).real
        G = qlt.hybrid_coupling(model, w)
        Nrm = 1 - G[1, 0] * G[0, 1]
        syy = s1[:, 1] / np.abs(Nrm) ** 2
        sxx = s1[:, 0] + np.abs(G[0, 1]) ** 2 * syy
        out = np.zeros((w.size, 2, 2))
        out[:, 0, 0] = sxx
        out[:, 1, 1] = syy
        return out

    spec = build_spectrum_set(grid, evaluate, ["x", "y"])
    n = np.array([occupancy_from_psd(spec, "x"), occupancy_from_psd(spec, "y")])
    return {"spectra": spec, "n": n}


def y_peak_frequency(model: LinearizedModel, window: float = 0.2, n: int = 4001) -> float:
    """Location of the S_yy maximum within +-window*omega_y of omega_y."""
    wy = model.omega[1]
    w = np.linspace(wy * (1 - window), wy * (1 + window), n)
    s = qlt.psd(model, FrequencyGrid(w), ("y",)).unsymmetrized["y"]
    i = int(np.argmax(s))
    if 0 < i < n - 1:
        # refine on a finer local grid
        w2 = np.linspace(w[i - 1], w[i + 1], 401)
        s2 = qlt.psd(model, FrequencyGrid(w2), ("y",)).unsymmetrized["y"]
        return float(w2[int(np.argmax(s2))])
    return float(w[i])


def heterodyne_ratio(model: LinearizedModel, omega: float | None = None):
    """Weight of hybridisation in the omega ~ omega_y peak of the x signal.

    ``R = (g_x^2 / g_y^2) |G_xy(omega)|^2`` at the y-peak frequency.

    Returns
    -------
    R : float
    fraction : float
        ``R / (1 + R)``, the share of the peak due to hybridisation.
    """
    if omega is None:
        omega = y_peak_frequency(model)
    gx, gy = abs(model.g[0]), abs(model.g[1])
    if gy == 0:
        return float("inf"), 1.0
    G = qlt.hybrid_coupling(model, np.array([omega]))[0, 1, 0]
    R = (gx / gy) ** 2 * abs(G) ** 2
    return float(R), float(R / (1 + R))


@dataclass(frozen=True)
class OccupancyReport:
    """Per-axis occupancies from several methods.

    Attributes
    ----------
    n_1d, n_3d : ndarray
        Integrated-PSD occupancies without and with hybridisation.
    n_lyapunov : ndarray
        From the stationary covariance (3D).
    n_cooling : ndarray
        Cooling-formula estimate (1D self-energy).
    red, blue : ndarray
        Sideband areas of the 3D spectra (n and n + 1 for an uncoupled mode).
    asymmetry : ndarray
        red / blue.
    """

    n_1d: np.ndarray
    n_3d: np.ndarray
    n_lyapunov: np.ndarray
    n_cooling: np.ndarray
    red: np.ndarray
    blue: np.ndarray
    asymmetry: np.ndarray
    methods: tuple = ("integrated-psd", "lyapunov", "cooling-formula")

    def as_dict(self) -> dict:
        out = {}
        for name in ("n_1d", "n_3d", "n_lyapunov", "n_cooling", "red", "blue", "asymmetry"):
            for ax, v in zip(AXES, getattr(self, name)):
                out[f"{name}_{ax}"] = float(v)
        return out


def occupancy_report(model: LinearizedModel, grid: FrequencyGrid | None = None,
                     engine: str = "closed-form") -> OccupancyReport:
    if grid is None:
        grid = FrequencyGrid.for_model(model)
    s3 = qlt.psd(model, grid, AXES, engine=engine)
    s1 = qlt.psd(model, grid, AXES, one_d=True)
    n3 = np.array([occupancy_from_psd(s3, a) for a in AXES])
    n1 = np.array([occupancy_from_psd(s1, a) for a in AXES])
    red, blue = np.array([s3.sideband_areas(a) for a in AXES]).T
    return OccupancyReport(
        n_1d=n1, n_3d=n3, n_lyapunov=lyapunov_occupancy(model),
        n_cooling=np.array([cooling_formula_occupancy(model, j) for j in range(3)]),
        red=red, blue=blue, asymmetry=red / blue)


def shifted_frequencies(model: LinearizedModel, one_d: bool = True) -> np.ndarray:
    """Bare frequencies plus the optical spring, ``omega_j + Im Sigma_j(omega_j)``."""
    w = np.array([model.omega[j] for j in range(3)])
    rep = spring_report(model, np.array([0.0]), one_d)
    return w + rep.delta_omega


def frequency_degeneracy(setup, bounds, axes=(0, 1), gouy: bool = False, xatol: float = 2 * np.pi * 10.0):
    """Detuning where the spring-shifted frequencies of two axes are closest.

    The x and y optical springs pull the two frequencies together as the
    detuning varies; the returned detuning minimises
    ``|omega_x + delta omega_x - (omega_y + delta omega_y)|`` and coincides
    with the crossing when the gap closes.

    Parameters
    ----------
    setup : PhysicalSetup
        Detuning is replaced at each trial point and the model re-derived.
    bounds : (float, float)
        Detuning bracket in rad/s.

    Returns
    -------
    detuning : float
    gap : float
        Remaining frequency difference in rad/s (0 at a true crossing).
    """
    from scipy.optimize import minimize_scalar

    from .derivation import linearize

    i, k = axes

    def gap(d):
        w = shifted_frequencies(linearize(setup.replace(detuning=d), gouy=gouy))
        return abs(w[i] - w[k])

    lo, hi = sorted(bounds)
    # coarse scan first; the gap can have several local minima
    trial = np.linspace(lo, hi, 25)
    vals = np.array([gap(d) for d in trial])
    j = int(np.argmin(vals))
    a, b = trial[max(j - 1, 0)], trial[min(j + 1, trial.size - 1)]
    res = minimize_scalar(gap, bounds=(a, b), method="bounded", options={"xatol": xatol})
    best = (res.x, res.fun) if res.fun <= vals[j] else (trial[j], vals[j])
    return float(best[0]), float(best[1])
