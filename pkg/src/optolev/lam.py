"""Linear amplifier model: generic N optical x M mechanical linearized system.

Mode vector ordering is ``(a_1, a_1^dag, ..., a_N, a_N^dag, b_1, b_1^dag, ...)``.
Quantum Langevin equations are written as ``dc/dt = A c + c_in`` with input
correlations ``<c_in(w) c_in(w')^dag> = N delta(w - w')``,

    N = diag(kappa (n + 1), kappa n, ..., Gamma (n_B + 1), Gamma n_B, ...).

In frequency space ``c(w) = T(w) c_in(w)`` with ``T = (-i w I - A)^-1`` and
the full spectral matrix is ``S(w) = T N T^dag``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import linalg

from .errors import SingularityError

# Condition number beyond which T(w) is reported as singular.
COND_LIMIT = 1e12


@dataclass(frozen=True)
class ModeSystem:
    """Linearized system of optical and mechanical modes.

    Parameters
    ----------
    detuning, kappa : (N,) arrays
        Optical detunings and full linewidths, rad/s.
    omega, gamma : (M,) arrays
        Mechanical frequencies and damping rates, rad/s.
    coupling : (M, N) complex array
        ``g_Y + i g_P``: coupling of mechanical mode k to the amplitude
        (real part) and phase (imaginary part) quadrature of optical mode l.
    direct : (M, M) real symmetric array
        Mechanical couplings ``g_kk'`` (diagonal ignored).
    bath : (M,) array
        Mechanical bath occupancies.
    optical_bath : (N,) array
        Optical input occupancies (zero for coherent light).
    bath_model : {"rotating", "brownian"}
        ``"rotating"``: damping ``-Gamma/2`` on b and b^dag with white
        input noise (standard quantum Langevin form).  ``"brownian"``:
        viscous damping ``-Gamma p`` on the momentum quadrature only, driven
        by a classical white force with ``<q^2> = <p^2> = 2 n`` at
        equilibrium (``bath`` then holds classical occupancies).
    """

    detuning: np.ndarray
    kappa: np.ndarray
    omega: np.ndarray
    gamma: np.ndarray
    coupling: np.ndarray
    direct: np.ndarray | None = None
    bath: np.ndarray | None = None
    optical_bath: np.ndarray | None = None
    bath_model: str = "rotating"

    def __post_init__(self):
        if self.bath_model not in ("rotating", "brownian"):
            raise ValueError(f"unknown bath model {self.bath_model!r}")
        det = np.atleast_1d(np.asarray(self.detuning, dtype=float))
        n_opt = det.size
        om = np.atleast_1d(np.asarray(self.omega, dtype=float))
        n_mech = om.size
        conv = {
            "detuning": det,
            "kappa": np.broadcast_to(np.asarray(self.kappa, dtype=float), (n_opt,)).copy(),
            "omega": om,
            "gamma": np.broadcast_to(np.asarray(self.gamma, dtype=float), (n_mech,)).copy(),
            "coupling": np.asarray(self.coupling, dtype=complex).reshape(n_mech, n_opt),
            "direct": (np.zeros((n_mech, n_mech)) if self.direct is None
                       else np.asarray(self.direct, dtype=float).reshape(n_mech, n_mech)),
            "bath": (np.zeros(n_mech) if self.bath is None
                     else np.broadcast_to(np.asarray(self.bath, dtype=float), (n_mech,)).copy()),
            "optical_bath": (np.zeros(n_opt) if self.optical_bath is None
                             else np.broadcast_to(np.asarray(self.optical_bath, dtype=float), (n_opt,)).copy()),
        }
        if not np.allclose(conv["direct"], conv["direct"].T):
            raise ValueError("direct coupling matrix must be symmetric")
        for key, value in conv.items():
            object.__setattr__(self, key, value)

    @property
    def n_optical(self) -> int:
        return self.detuning.size

    @property
    def n_mechanical(self) -> int:
        return self.omega.size

    @property
    def size(self) -> int:
        return 2 * (self.n_optical + self.n_mechanical)

    def optical_index(self, l: int = 0) -> int:
        return 2 * l

    def mechanical_index(self, k: int) -> int:
        return 2 * (self.n_optical + k)


@dataclass(frozen=True)
class DriftMatrix:
    """Drift matrix and input-noise correlations.

    ``noise_full`` is only set when the noise is not diagonal (Brownian bath).
    """

    A: np.ndarray
    noise_diag: np.ndarray
    noise_full: np.ndarray | None = None

    @property
    def noise(self) -> np.ndarray:
        return np.diag(self.noise_diag) if self.noise_full is None else self.noise_full

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.A)

    def is_stable(self) -> bool:
        return bool(np.all(self.eigenvalues.real < 0))


def build_drift(system: ModeSystem) -> DriftMatrix:
    """Drift and input-noise matrices of the quantum Langevin equations.

    With ``H/hbar = -sum_l Delta_l a_l^dag a_l + sum_k omega_k b_k^dag b_k
    - sum_{k,l} q_k (g_Y Y_l + g_P P_l) - sum_{k<k'} g_kk' q_k q_k'``::

        da/dt = (i Delta - kappa/2) a + i sum_k g_k q_k
        db/dt = (-i omega - Gamma/2) b + i sum_l (g_l^* a_l + g_l a_l^dag)
                + i sum_k' g_kk' q_k'
    """
    n = system.size
    A = np.zeros((n, n), dtype=complex)
    noise = np.zeros(n)
    for l in range(system.n_optical):
        i = system.optical_index(l)
        A[i, i] = 1j * system.detuning[l] - system.kappa[l] / 2
        A[i + 1, i + 1] = -1j * system.detuning[l] - system.kappa[l] / 2
        noise[i] = system.kappa[l] * (system.optical_bath[l] + 1)
        noise[i + 1] = system.kappa[l] * system.optical_bath[l]
    brownian = system.bath_model == "brownian"
    full = np.diag(noise).astype(complex) if brownian else None
    for k in range(system.n_mechanical):
        j = system.mechanical_index(k)
        A[j, j] = -1j * system.omega[k] - system.gamma[k] / 2
        A[j + 1, j + 1] = 1j * system.omega[k] - system.gamma[k] / 2
        if brownian:
            # db/dt = -i w b - (Gamma/2)(b - b^dag) + (i/2) f
            A[j, j + 1] = system.gamma[k] / 2
            A[j + 1, j] = system.gamma[k] / 2
            gn = system.gamma[k] * system.bath[k]
            full[j:j + 2, j:j + 2] = gn * np.array([[1, -1], [-1, 1]])
            noise[j] = noise[j + 1] = gn
        else:
            noise[j] = system.gamma[k] * (system.bath[k] + 1)
            noise[j + 1] = system.gamma[k] * system.bath[k]
        for l in range(system.n_optical):
            i = system.optical_index(l)
            g = system.coupling[k, l]
            # optical mode driven by q_k = b_k + b_k^dag
            A[i, j] += 1j * g
            A[i, j + 1] += 1j * g
            A[i + 1, j] += -1j * np.conj(g)
            A[i + 1, j + 1] += -1j * np.conj(g)
            # mechanical mode driven by g^* a + g a^dag
            A[j, i] += 1j * np.conj(g)
            A[j, i + 1] += 1j * g
            A[j + 1, i] += -1j * np.conj(g)
            A[j + 1, i + 1] += -1j * g
        for kk in range(system.n_mechanical):
            if kk == k:
                continue
            jj = system.mechanical_index(kk)
            gd = system.direct[k, kk]
            A[j, jj] += 1j * gd
            A[j, jj + 1] += 1j * gd
            A[j + 1, jj] += -1j * gd
            A[j + 1, jj + 1] += -1j * gd
    if brownian:
        for l in range(system.n_optical):
            i = system.optical_index(l)
            full[i:i + 2, i:i + 2] = np.diag(noise[i:i + 2])
    return DriftMatrix(A, noise, full)


def _as_drift(system) -> DriftMatrix:
    return system if isinstance(system, DriftMatrix) else build_drift(system)


class Transfer(NamedTuple):
    T: np.ndarray
    condition: np.ndarray


def transfer(system, omega, check: bool = True) -> Transfer:
    """Exact dense transfer matrix ``T(w) = (-i w I - A)^-1``.

    ``omega`` may be a scalar or a 1-D array; T then has shape (n, n) or
    (len(omega), n, n).  The 2-norm condition number is returned alongside.

    Raises
    ------
    SingularityError
        If the condition number exceeds ``COND_LIMIT`` at some frequency.
    """
    drift = _as_drift(system)
    w = np.asarray(omega, dtype=float)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    n = drift.A.shape[0]
    M = -1j * w[:, None, None] * np.eye(n) - drift.A
    cond = np.linalg.cond(M)
    if check:
        bad = ~(cond < COND_LIMIT)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise SingularityError(f"transfer matrix singular at omega={w[i]:.6g} rad/s "
                                   f"(condition {cond[i]:.3g})", omega=float(w[i]))
    T = np.linalg.inv(M)
    if scalar:
        return Transfer(T[0], cond[0])
    return Transfer(T, cond)


def spectral_matrix(system, omega) -> np.ndarray:
    """Full spectral matrix ``S(w) = T N T^dag`` with shape (F, n, n)."""
    drift = _as_drift(system)
    T = transfer(drift, omega).T
    if drift.noise_full is not None:
        return np.einsum("fik,kl,fjl->fij", T, drift.noise_full, T.conj())
    return np.einsum("fik,k,fjk->fij", T, drift.noise_diag, T.conj())


def displacement_rows(system: ModeSystem, T: np.ndarray) -> np.ndarray:
    """Rows mapping inputs to q_k = b_k + b_k^dag, shape (F, M, n)."""
    rows = []
    for k in range(system.n_mechanical):
        j = system.mechanical_index(k)
        rows.append(T[..., j, :] + T[..., j + 1, :])
    return np.stack(rows, axis=-2)


def output_rows(system: ModeSystem, T: np.ndarray, angle: float | None, l: int = 0) -> np.ndarray:
    """Row mapping inputs to the output field of optical mode l.

    ``a_out = a_in - sqrt(kappa) a`` with ``a_in = c_in[a] / sqrt(kappa)``.
    With ``angle`` None the bare ``a_out`` row is returned, otherwise the
    quadrature ``exp(-i angle) a_out + exp(i angle) a_out^dag``.
    """
    n = system.size
    i = system.optical_index(l)
    kap = system.kappa[l]
    e = np.eye(n)
    a_out = e[i] / np.sqrt(kap) - np.sqrt(kap) * T[..., i, :]
    if angle is None:
        return a_out
    a_out_dag = e[i + 1] / np.sqrt(kap) - np.sqrt(kap) * T[..., i + 1, :]
    return np.exp(-1j * angle) * a_out + np.exp(1j * angle) * a_out_dag


def lyapunov(system) -> np.ndarray:
    """Stationary covariance ``sigma_ij = <c_i c_j^dag>``.

    Solves ``A sigma + sigma A^dag + N = 0``, the time-domain counterpart of
    integrating ``S(w)`` over ``dw / 2 pi``.
    """
    drift = _as_drift(system)
    return linalg.solve_continuous_lyapunov(drift.A, -drift.noise)


def stationary_moments(system: ModeSystem) -> dict:
    """Phonon numbers <b^dag b> and variances <q^2> from the Lyapunov solution."""
    sigma = lyapunov(system)
    n_phonon, q2 = [], []
    for k in range(system.n_mechanical):
        j = system.mechanical_index(k)
        n_phonon.append(sigma[j + 1, j + 1].real)
        block = sigma[j:j + 2, j:j + 2]
        q2.append(block.sum().real)
    return {"n": np.array(n_phonon), "q2": np.array(q2), "sigma": sigma}


def system_from_model(model, optical_bath: float = 0.0, bath_model: str = "rotating",
                      bath=None) -> ModeSystem:
    """Single-cavity, three-mechanical-mode system of a LinearizedModel."""
    return ModeSystem(
        detuning=[model.detuning_eff], kappa=[model.kappa],
        omega=model.omega_array, gamma=model.gamma,
        coupling=model.g_array.reshape(3, 1), direct=model.g_matrix,
        bath=np.array(model.bath_occupancy) if bath is None else bath,
        optical_bath=[optical_bath], bath_model=bath_model)


def classical_displacement_spectra(model, omega, temperature_scale: float = 1.0) -> np.ndarray:
    """Displacement cross-spectra (F, 3, 3) of the classical Brownian-bath model.

    No optical input noise; each axis is driven by a white thermal force of
    a gas at ``temperature_scale`` times the bath temperature.  This is the
    linear-regime reference for the stochastic simulator.
    """
    nb = np.array(model.bath_occupancy) * temperature_scale
    system = system_from_model(model, bath_model="brownian", bath=nb)
    drift = build_drift(system)
    drift = DriftMatrix(drift.A, np.where(np.arange(8) < 2, 0.0, drift.noise_diag),
                        np.where(np.arange(8)[:, None] < 2, 0.0, drift.noise_full))
    T = transfer(drift, omega).T
    rows = displacement_rows(system, T)
    return np.einsum("fik,kl,fjl->fij", rows, drift.noise_full, rows.conj())
