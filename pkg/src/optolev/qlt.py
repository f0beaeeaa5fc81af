"""Closed-form quantum linear theory for one cavity mode and three mechanical modes.

Every observable is expressed as a linear map on the eight unit-normalized
input noises ``(a_in, a_in^dag, b_x,in, b_x,in^dag, b_y,in, ..., b_z,in^dag)``
with weights ``(n_c + 1, n_c, n_x + 1, n_x, ...)``.  The same weights
contract the coefficients into spectra, so results compare directly with
the matrix-inversion engine in :mod:`optolev.lam`.

Couplings enter as ``g = g_Y + i g_P`` (amplitude and phase quadrature).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lam
from .derivation import AXES, PHASE, LinearizedModel
from .errors import SingularityError
from .spectra import FrequencyGrid, SpectrumSet, build_spectrum_set, spectra_from_channels

# |M_j| or |N| below this (relative to 1) is reported as a singularity.
SINGULAR_TOL = 1e-12

N_CHANNELS = 8
OUTPUT_ANGLES = {"Y_out": 0.0, "P_out": np.pi / 2}


# -- susceptibilities -------------------------------------------------------

def chi(omega, omega0, gamma):
    """Lorentzian susceptibility ``1 / (-i (w - w0) + gamma/2)``."""
    return 1.0 / (-1j * (np.asarray(omega) - omega0) + gamma / 2)


def cavity_chi(omega, detuning, kappa):
    """Cavity susceptibility for ``da/dt = (i Delta - kappa/2) a``: chi(w; -Delta, kappa)."""
    return chi(omega, -detuning, kappa)


def mu(omega, omega_j, gamma):
    """Mechanical susceptibility ``chi(w) - chi^*(-w)`` of q = b + b^dag."""
    return chi(omega, omega_j, gamma) - np.conj(chi(-np.asarray(omega), omega_j, gamma))


def eta(omega, detuning, kappa, angle=0.0):
    """Optical susceptibility ``exp(-i angle) chi_c(w) - exp(i angle) chi_c^*(-w)``."""
    c = cavity_chi(omega, detuning, kappa)
    cm = np.conj(cavity_chi(-np.asarray(omega), detuning, kappa))
    return np.exp(-1j * angle) * c - np.exp(1j * angle) * cm


def normalization(omega, model: LinearizedModel, axis: int):
    """``M_j = 1 + |g_j|^2 mu_j eta^(0)``.

    The optical susceptibility enters at angle 0 for either quadrature: a
    phase-quadrature coupling produces the same self-interaction as an
    amplitude one.
    """
    return 1 + abs(model.g[axis]) ** 2 * mu(omega, model.omega[axis], model.gamma) * \
        eta(omega, model.detuning_eff, model.kappa, 0.0)


@dataclass(frozen=True)
class Susceptibilities:
    """Susceptibilities of a model on a grid."""

    omega: np.ndarray
    chi_c: np.ndarray
    chi_c_neg: np.ndarray  # chi_c^*(-w)
    chi_m: np.ndarray      # (3, F)
    chi_m_neg: np.ndarray  # (3, F) chi_j^*(-w)
    mu: np.ndarray         # (3, F)

    @classmethod
    def of(cls, model: LinearizedModel, omega) -> "Susceptibilities":
        w = np.asarray(omega, dtype=float)
        for om in model.omega:
            # undamped mechanical poles on the real axis
            _check_singular(np.abs(np.abs(w) - om) + model.gamma / 2, w, "mechanical susceptibility",
                            om * SINGULAR_TOL)
        cc = cavity_chi(w, model.detuning_eff, model.kappa)
        ccn = np.conj(cavity_chi(-w, model.detuning_eff, model.kappa))
        cm = np.stack([chi(w, om, model.gamma) for om in model.omega])
        cmn = np.stack([np.conj(chi(-w, om, model.gamma)) for om in model.omega])
        return cls(w, cc, ccn, cm, cmn, cm - cmn)

    def eta(self, angle: float = 0.0):
        return np.exp(-1j * angle) * self.chi_c - np.exp(1j * angle) * self.chi_c_neg


def _check_singular(values, omega, what, tol=SINGULAR_TOL):
    bad = np.abs(values) < tol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise SingularityError(f"{what} vanishes at omega={omega[i]:.6g} rad/s", omega=float(omega[i]))


# -- response blocks ---------------------------------------------------------

def _quadrature_response(model, sus):
    """J_jY, J_jP (mechanical response to Y, P) and J_Yj, J_Pj (field response to q_j)."""
    g = model.g_array[:, None]
    gy, gp = g.real, g.imag
    J_qY = 1j * gy * sus.mu
    J_qP = 1j * gp * sus.mu
    J_Yq = 1j * (g * sus.chi_c - np.conj(g) * sus.chi_c_neg)
    J_Pq = g * sus.chi_c + np.conj(g) * sus.chi_c_neg
    return J_qY, J_qP, J_Yq, J_Pq


def _input_fields(model, sus):
    """Coefficients of Y_in, P_in and thermal Q_j on the 8 unit input channels."""
    F = sus.omega.size
    sk = np.sqrt(model.kappa)
    sg = np.sqrt(model.gamma)
    Y_in = np.zeros((F, N_CHANNELS), dtype=complex)
    P_in = np.zeros((F, N_CHANNELS), dtype=complex)
    Y_in[:, 0] = sk * sus.chi_c
    Y_in[:, 1] = sk * sus.chi_c_neg
    P_in[:, 0] = -1j * sk * sus.chi_c
    P_in[:, 1] = 1j * sk * sus.chi_c_neg
    Q = np.zeros((3, F, N_CHANNELS), dtype=complex)
    for j in range(3):
        Q[j, :, 2 + 2 * j] = sg * sus.chi_m[j]
        Q[j, :, 3 + 2 * j] = sg * sus.chi_m_neg[j]
    return Y_in, P_in, Q


def displacement_noise_1d(model: LinearizedModel, axis, grid) -> dict:
    """Single-axis noise map ignoring the other two mechanical modes.

    q_j = M_j^-1 [Q_j + i mu_j (g_jY Y_in + g_jP P_in)], with the detection
    angle Phi = 0 for amplitude-coupled and pi/2 for phase-coupled axes.

    Returns
    -------
    dict
        ``thermal``: (F, 2) coefficients on (b_in, b_in^dag);
        ``optical``: (F, 2) coefficients on (a_in, a_in^dag);
        ``M``: normalization; ``angle``: detection angle.

    Raises
    ------
    SingularityError
        Where M_j vanishes on the grid.
    """
    j = AXES.index(axis) if isinstance(axis, str) else int(axis)
    w = grid.points if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)
    sus = Susceptibilities.of(model, w)
    M = normalization(w, model, j)
    _check_singular(M, w, f"M_{AXES[j]}")
    g = model.g[j]
    sk, sg = np.sqrt(model.kappa), np.sqrt(model.gamma)
    thermal = np.stack([sg * sus.chi_m[j], sg * sus.chi_m_neg[j]], axis=-1) / M[:, None]
    # i mu (g_Y Y_in + g_P P_in) = i mu sqrt(kappa) (g^* chi_c a_in + g chi_c^*(-w) a_in^dag)
    optical = 1j * sus.mu[j][:, None] * sk * np.stack(
        [np.conj(g) * sus.chi_c, g * sus.chi_c_neg], axis=-1) / M[:, None]
    angle = np.pi / 2 if model.quadrature_tags[j] == PHASE else 0.0
    return {"thermal": thermal, "optical": optical, "M": M, "angle": angle}


def hybrid_coupling(model: LinearizedModel, grid) -> np.ndarray:
    """Hybridisation couplings G_jk(w), shape (3, 3, F) with a zero diagonal.

    ``G_jk = M_j^-1 (J_jY J_Yk + J_jP J_Pk + i mu_j g_jk)``.  For amplitude
    couplings this is ``(i mu_j / M_j)(i eta^(0) g_j g_k + g_jk)``; for the
    phase-coupled z axis ``(i mu_j / M_j)(-i eta^(pi/2) g_j g_z + g_jz)``.
    G_jk and G_kj differ in general and are both returned.
    """
    w = grid.points if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)
    sus = Susceptibilities.of(model, w)
    return _coupling_matrix(model, sus)[0]


def _coupling_matrix(model, sus):
    J_qY, J_qP, J_Yq, J_Pq = _quadrature_response(model, sus)
    M = np.stack([normalization(sus.omega, model, j) for j in range(3)])
    for j in range(3):
        _check_singular(M[j], sus.omega, f"M_{AXES[j]}")
    gd = model.g_matrix
    G = np.zeros((3, 3, sus.omega.size), dtype=complex)
    for j in range(3):
        for k in range(3):
            if j != k:
                G[j, k] = (J_qY[j] * J_Yq[k] + J_qP[j] * J_Pq[k] + 1j * sus.mu[j] * gd[j, k]) / M[j]
    return G, M, (J_qY, J_qP)


def _adjugate(R):
    """Adjugate xi of (I - R) and N = 1/det(I - R) for a 3x3 R with zero diagonal."""
    xi = np.empty_like(R)
    for j in range(3):
        k, l = [m for m in range(3) if m != j]
        xi[j, j] = 1 - R[k, l] * R[l, k]
        for kk in range(3):
            if kk != j:
                ll = 3 - j - kk
                xi[j, kk] = R[j, kk] + R[j, ll] * R[ll, kk]
    det = (1 - R[0, 1] * R[1, 0] - R[0, 2] * R[2, 0] - R[1, 2] * R[2, 1]
           - R[0, 1] * R[1, 2] * R[2, 0] - R[0, 2] * R[2, 1] * R[1, 0])
    return xi, det


def displacement_coefficients_3d(model: LinearizedModel, grid) -> dict:
    """Exact three-mode displacement map.

    ``q_j = A_j Y_in + B_j P_in + C_j Q_x + D_j Q_y + E_j Q_z``, with

        A_j = N sum_k xi_jk N_k J_kY,   B_j = N sum_k xi_jk N_k J_kP,
        (C_j, D_j, E_j) = N xi_jk N_k   for k = x, y, z,

    where ``R_jk = G_jk``, ``xi = adj(I - R)``, ``N = 1/det(I - R)`` and
    ``N_k = 1/M_k``.

    Returns
    -------
    dict
        ``A``, ``B``: (3, F); ``thermal``: (3, 3, F) with
        ``thermal[j, k]`` the coefficient of Q_k in q_j; ``N``: (F,);
        ``channels``: (F, 3, 8) coefficients on the unit input channels.

    Raises
    ------
    SingularityError
        Where det(I - R) or any M_j vanishes.
    """
    w = grid.points if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)
    sus = Susceptibilities.of(model, w)
    R, M, (J_qY, J_qP) = _coupling_matrix(model, sus)
    xi, det = _adjugate(R)
    _check_singular(det, w, "det(I - R)")
    N = 1 / det
    Nk = 1 / M
    thermal = N * xi * Nk[None, :, :]
    A = np.einsum("jkf,kf->jf", thermal, J_qY)
    B = np.einsum("jkf,kf->jf", thermal, J_qP)
    Y_in, P_in, Q = _input_fields(model, sus)
    channels = (A.T[:, :, None] * Y_in[:, None, :] + B.T[:, :, None] * P_in[:, None, :]
                + np.einsum("jkf,kfc->fjc", thermal, Q))
    return {"A": A, "B": B, "thermal": thermal, "N": N, "channels": channels}


def channel_weights(model: LinearizedModel, optical_bath: float = 0.0) -> np.ndarray:
    nb = model.bath_occupancy
    return np.array([optical_bath + 1, optical_bath,
                     nb[0] + 1, nb[0], nb[1] + 1, nb[1], nb[2] + 1, nb[2]])


def _output_channels(model, sus, q_channels, angle):
    """Output quadrature coefficients from the displacement coefficients.

    a = chi_c (i sum_k g_k q_k + sqrt(kappa) a_in), a_out = a_in - sqrt(kappa) a.
    """
    sk = np.sqrt(model.kappa)
    g = model.g_array
    drive = np.einsum("k,fkc->fc", g, q_channels)
    drive_dag = np.einsum("k,fkc->fc", np.conj(g), q_channels)
    e_a = np.zeros(N_CHANNELS)
    e_a[0] = 1
    e_ad = np.zeros(N_CHANNELS)
    e_ad[1] = 1
    a = sus.chi_c[:, None] * (1j * drive + sk * e_a)
    a_dag = sus.chi_c_neg[:, None] * (-1j * drive_dag + sk * e_ad)
    a_out = e_a - sk * a
    if angle is None:
        return a_out
    a_out_dag = e_ad - sk * a_dag
    return np.exp(-1j * angle) * a_out + np.exp(1j * angle) * a_out_dag


def _observable_angles(observables, homodyne_angle):
    out = []
    for obs in observables:
        if obs in AXES:
            out.append((obs, "q"))
        elif obs in OUTPUT_ANGLES:
            out.append((obs, OUTPUT_ANGLES[obs]))
        elif obs == "X_out":
            out.append((obs, homodyne_angle))
        elif obs == "a_out":
            out.append((obs, None))
        else:
            raise ValueError(f"unknown observable {obs!r}")
    return out


DEFAULT_OBSERVABLES = ("x", "y", "z", "Y_out", "P_out")


def closed_form_channels(model, omega, observables=DEFAULT_OBSERVABLES, homodyne_angle=0.0,
                         one_d: bool = False):
    """(F, n_obs, 8) channel coefficients from the closed-form algebra."""
    w = np.asarray(omega, dtype=float)
    sus = Susceptibilities.of(model, w)
    if one_d:
        q = np.zeros((w.size, 3, N_CHANNELS), dtype=complex)
        for j in range(3):
            d = displacement_noise_1d(model, j, w)
            q[:, j, 0:2] = d["optical"]
            q[:, j, 2 + 2 * j:4 + 2 * j] = d["thermal"]
    else:
        q = displacement_coefficients_3d(model, w)["channels"]
    rows = []
    for obs, kind in _observable_angles(observables, homodyne_angle):
        if kind == "q":
            rows.append(q[:, AXES.index(obs)])
        else:
            if one_d:
                raise ValueError("output observables are not defined for 1D spectra")
            rows.append(_output_channels(model, sus, q, kind))
    return np.stack(rows, axis=1)


def lam_channels(model, omega, observables=DEFAULT_OBSERVABLES, homodyne_angle=0.0):
    """(F, n_obs, 8) channel coefficients from dense matrix inversion.

    Columns are rescaled to unit-normalized inputs so the weights match
    :func:`channel_weights`.
    """
    system = lam.system_from_model(model)
    T = lam.transfer(system, omega).T
    scale = np.array([np.sqrt(model.kappa)] * 2 + [np.sqrt(model.gamma)] * 6)
    qrows = lam.displacement_rows(system, T)
    rows = []
    for obs, kind in _observable_angles(observables, homodyne_angle):
        if kind == "q":
            rows.append(qrows[:, AXES.index(obs)])
        else:
            rows.append(lam.output_rows(system, T, kind))
    K = np.stack(rows, axis=1)
    K = K * scale
    # the bare input term a_in/sqrt(kappa) is already unit-normalized after scaling
    return K


def psd(model: LinearizedModel, grid, observables=DEFAULT_OBSERVABLES, engine: str = "closed-form",
        homodyne_angle: float = 0.0, one_d: bool = False, optical_bath: float = 0.0,
        classical: bool = False) -> SpectrumSet:
    """Spectra of displacements and output quadratures.

    Parameters
    ----------
    engine : {"closed-form", "lam"}
        Closed-form coefficient algebra or dense matrix inversion.
    one_d : bool
        Each axis on its own (all hybridisation switched off); closed form only.
    classical : bool
        Classical-noise limit: optical input noise off, mechanical noise
        symmetric with weight ``n_B + 1/2`` on both channels.

    Returns
    -------
    SpectrumSet
        With cross-spectra of whichever of x, y, z were requested.
    """
    if not isinstance(grid, FrequencyGrid):
        grid = FrequencyGrid(grid)
    observables = tuple(observables)
    weights = channel_weights(model, optical_bath)
    if classical:
        nb = np.array(model.bath_occupancy)
        weights = np.array([0.0, 0.0] + [v for n in nb for v in (n + 0.5, n + 0.5)])

    if engine == "closed-form":
        def channels(w):
            return closed_form_channels(model, w, observables, homodyne_angle, one_d)
    elif engine == "lam":
        if one_d:
            raise ValueError("one_d spectra use the closed-form engine")

        def channels(w):
            return lam_channels(model, w, observables, homodyne_angle)
    else:
        raise ValueError(f"unknown engine {engine!r}")

    def evaluate(w):
        return spectra_from_channels(channels(w), weights)

    cross = tuple(o for o in observables if o in AXES)
    out = build_spectrum_set(grid, evaluate, list(observables), cross)
    out.convention["engine"] = engine
    out.convention["one_d"] = one_d
    out.convention["classical"] = classical
    return out
