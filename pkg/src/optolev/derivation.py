"""Linearized optomechanical model from a physical coherent-scattering setup.

The particle equilibrium is found self-consistently with the stationary cavity
field, and the full potential is expanded to second order about it.  The
expansion uses exact analytic derivatives, so it stays valid when the
equilibrium is displaced from the tweezer focus.  ``closed_form_couplings``
gives the familiar focus-centred expressions for comparison.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, InstabilityError
from .physical import (HBAR, KB, PhysicalSetup, _beta, _standing_wave, gradient_rate,
                       hessian_rate, local_detuning, potential_rate, snap_cos,
                       snap_sin, steady_field)

logger = logging.getLogger(__name__)

AXES = ("x", "y", "z")
PAIRS = ((0, 1), (0, 2), (1, 2))

AMPLITUDE = "amplitude"
PHASE = "phase"


@dataclass(frozen=True)
class LinearizedModel:
    """Complete parameter set of the linearized three-mode problem.

    All rates are angular (rad/s).  Couplings are stored as the complex
    ``g = g_Y + i g_P``: the real part couples q_j to the amplitude quadrature
    Y = a + a^dag, the imaginary part to the phase quadrature
    P = i(a^dag - a).  With this convention the interaction Hamiltonian reads

        H_int / hbar = -sum_j (g_jY q_j Y + g_jP q_j P) - sum_{j<k} g_jk q_j q_k

    Vectors are stored as tuples so that instances compare and hash exactly.
    """

    omega: tuple
    g: tuple
    g_direct: tuple
    kappa: float
    gamma: float
    detuning_eff: float
    bath_occupancy: tuple
    mean_field: complex = 0j
    drive: float = 0.0
    zpf: tuple = (0.0, 0.0, 0.0)
    mass: float = 0.0
    equilibrium_shift: tuple = (0.0, 0.0, 0.0)
    optical_occupancy: float = 0.0
    degenerate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(v) for v in self.omega))
        object.__setattr__(self, "g", tuple(complex(v) for v in self.g))
        object.__setattr__(self, "g_direct", tuple(float(v) for v in self.g_direct))
        object.__setattr__(self, "bath_occupancy", tuple(float(v) for v in self.bath_occupancy))
        object.__setattr__(self, "zpf", tuple(float(v) for v in self.zpf))
        object.__setattr__(self, "equilibrium_shift", tuple(float(v) for v in self.equilibrium_shift))
        object.__setattr__(self, "mean_field", complex(self.mean_field))
        if len(self.omega) != 3 or len(self.g) != 3 or len(self.g_direct) != 3:
            raise ValueError("omega, g and g_direct must have three entries")
        if min(self.omega) <= 0:
            raise InstabilityError(f"non-positive mechanical frequency: {self.omega}")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")

    # -- array views -------------------------------------------------------
    @property
    def omega_array(self) -> np.ndarray:
        return np.array(self.omega)

    @property
    def g_array(self) -> np.ndarray:
        return np.array(self.g, dtype=complex)

    @property
    def g_amplitude(self) -> np.ndarray:
        return np.array([v.real for v in self.g])

    @property
    def g_phase(self) -> np.ndarray:
        return np.array([v.imag for v in self.g])

    @property
    def g_matrix(self) -> np.ndarray:
        """Symmetric 3x3 matrix of direct couplings with a zero diagonal."""
        m = np.zeros((3, 3))
        for (j, k), v in zip(PAIRS, self.g_direct):
            m[j, k] = m[k, j] = v
        return m

    @property
    def photon_number(self) -> float:
        return abs(self.mean_field) ** 2

    @property
    def quadrature_tags(self) -> tuple:
        """Dominant quadrature each axis couples to."""
        return tuple(PHASE if abs(v.imag) > abs(v.real) else AMPLITUDE for v in self.g)

    def coupling(self, axis: int) -> float:
        """Signed coupling along the axis' dominant quadrature."""
        v = self.g[axis]
        return v.imag if self.quadrature_tags[axis] == PHASE else v.real

    def replace(self, **changes) -> "LinearizedModel":
        import dataclasses
        return dataclasses.replace(self, **changes)

    def is_stable(self) -> bool:
        from .lam import build_drift, system_from_model
        return bool(np.all(build_drift(system_from_model(self)).eigenvalues.real < 0))


class DriveField(NamedTuple):
    drive: float
    mean_field: complex
    detuning_shift: float
    degenerate: bool


def derive_drive_and_field(setup: PhysicalSetup, equilibrium=None) -> DriveField:
    """Drive rate E_d, stationary cavity field and dispersive detuning shift.

    Parameters
    ----------
    setup : PhysicalSetup
    equilibrium : array_like, optional
        Particle position at which to evaluate the field.  Defaults to the
        tweezer focus; pass the output of :func:`solve_equilibrium` to include
        the position-dependent phase correction.

    Returns
    -------
    DriveField
        ``degenerate`` is True when E_d vanishes (tilt = 0); the cavity is
        then empty and all optomechanical couplings are zero.
    """
    r = np.zeros(3) if equilibrium is None else np.asarray(equilibrium, dtype=float)
    c, _, _ = _standing_wave(setup, r)
    shift = setup.cavity_shift * c ** 2
    alpha = complex(steady_field(setup, r))
    degenerate = setup.drive == 0.0
    if degenerate:
        warnings.warn("zero coherent-scattering drive (tilt = 0): cavity is empty",
                      RuntimeWarning, stacklevel=2)
    return DriveField(float(setup.drive), alpha, float(shift), degenerate)


def _residual(setup, r, gouy):
    alpha = steady_field(setup, r, gouy)
    return gradient_rate(setup, r, alpha, gouy), alpha


def _nominal_zpf(setup):
    """zpf lengths of the bare tweezer trap, used to express residuals in rad/s."""
    v0 = setup.tweezer_depth
    kz = 2 * v0 / setup.rayleigh_range ** 2
    kx = 4 * v0 / setup.waist_x ** 2
    ky = 4 * v0 / setup.waist_y ** 2
    m = setup.mass
    return np.array([math.sqrt(HBAR / (2 * math.sqrt(kk * m))) for kk in (kx, ky, kz)])


def _force_scale(setup, r, alpha):
    """Magnitude of the individual force terms; sets the rounding floor."""
    hrr, _ = hessian_rate(setup, r, alpha)
    k = setup.k
    return (np.abs(np.diag(hrr)) * np.abs(r) + setup.drive * k * 2 * abs(alpha)
            + setup.cavity_shift * k * abs(alpha) ** 2 + np.abs(np.diag(hrr)) * 1e-12)


def solve_equilibrium(setup: PhysicalSetup, gouy: bool = False, atol: float = 1e-10,
                      rtol: float = 1e-12, max_iter: int = 60, r0=None):
    """Self-consistent particle equilibrium and stationary cavity field.

    Solves grad_r U(r, alpha(r)) = 0, where alpha(r) is the stationary
    cavity amplitude for a particle held at r, by damped Newton iteration
    with a finite-difference Jacobian.  If Newton stalls, an overdamped
    relaxation is run and Newton is restarted from its end point.

    The residual is measured as |dU/dr_j| * zpf_j (rad/s).  Convergence
    requires it to fall below ``atol`` or below ``rtol`` times the magnitude
    of the individual force terms, whichever is larger; in double precision
    the latter is the attainable floor whenever the shift is non-zero.

    Returns
    -------
    shift : ndarray, shape (3,)
        Equilibrium position relative to the tweezer focus, metres.
    alpha : complex
        Stationary cavity amplitude at that position.

    Raises
    ------
    ConvergenceError
        No equilibrium found; usually a trap-loss regime.
    """
    zpf = _nominal_zpf(setup)
    r = np.zeros(3) if r0 is None else np.asarray(r0, dtype=float).copy()

    def measure(pos):
        grad, alpha = _residual(setup, pos, gouy)
        res = np.abs(grad) * zpf
        tol = np.maximum(atol, rtol * _force_scale(setup, pos, alpha) * zpf)
        return grad, alpha, res, tol

    def newton(pos):
        grad, alpha, res, tol = measure(pos)
        h = 1e-3 / setup.k
        for it in range(max_iter):
            if np.all(res <= tol):
                return pos, alpha, res, True
            jac = np.empty((3, 3))
            for j in range(3):
                e = np.zeros(3)
                e[j] = h
                jac[:, j] = (_residual(setup, pos + e, gouy)[0] - _residual(setup, pos - e, gouy)[0]) / (2 * h)
            try:
                step = np.linalg.solve(jac, -grad)
            except np.linalg.LinAlgError:
                return pos, alpha, res, False
            norm0 = np.max(res / tol)
            lam = 1.0
            while lam > 1e-4:
                trial = pos + lam * step
                g2, a2, r2, t2 = measure(trial)
                if np.max(r2 / t2) < norm0 or np.all(r2 <= t2):
                    break
                lam /= 2
            else:
                return pos, alpha, res, False
            pos, grad, alpha, res, tol = trial, g2, a2, r2, t2
        return pos, alpha, res, bool(np.all(res <= tol))

    pos, alpha, res, ok = newton(r)
    if not ok:
        logger.info("Newton stalled (residual %s); relaxing", res)
        hrr0, _ = hessian_rate(setup, np.zeros(3), 0j, gouy)
        stiff = np.abs(np.diag(hrr0))
        for _ in range(2000):
            grad, _ = _residual(setup, pos, gouy)
            pos = pos - 0.5 * grad / stiff
            if not np.all(np.isfinite(pos)) or np.any(np.abs(pos) > 10 * setup.wavelength):
                break
        if np.all(np.isfinite(pos)):
            pos, alpha, res, ok = newton(pos)
    if not ok:
        raise ConvergenceError(f"equilibrium not found; last residual {np.max(res):.3e} rad/s",
                               residual=float(np.max(res)))
    return pos, complex(alpha)


def linearize(setup: PhysicalSetup, gouy: bool = False) -> LinearizedModel:
    """Quadratic expansion of the coherent-scattering Hamiltonian.

    The cavity field is displaced by its stationary value and the particle by
    its self-consistent equilibrium; the second derivatives of the full
    potential then give the trap frequencies, the light-matter couplings and
    the direct mechanical couplings:

        omega_j = sqrt(hbar U_jj / m)
        g_jk    = -U_jk zpf_j zpf_k
        g_j     = -zpf_j d^2U/dr_j da*       (complex, rotated into the cavity frame)

    Parameters
    ----------
    setup : PhysicalSetup
    gouy : bool
        Include the Gouy phase in the longitudinal phase.  Off by default.

    Raises
    ------
    InstabilityError
        The equilibrium is a saddle (some U_jj <= 0).
    ConvergenceError
        Propagated from :func:`solve_equilibrium`.
    """
    r0, alpha = solve_equilibrium(setup, gouy=gouy)
    hrr, hra = hessian_rate(setup, r0, alpha, gouy)
    diag = np.diag(hrr)
    if np.any(diag <= 0):
        raise InstabilityError(f"equilibrium is not a trap minimum: curvatures {diag}")
    omega = np.sqrt(HBAR * diag / setup.mass)
    zpf = np.sqrt(HBAR / (2 * setup.mass * omega))
    beta0, _, _ = _beta(setup, r0[2], gouy)
    rot = np.exp(-1j * beta0)
    g = -zpf * hra * rot
    g_direct = tuple(-hrr[j, k] * zpf[j] * zpf[k] for j, k in PAIRS)
    n_bath = KB * setup.gas_temperature / (HBAR * omega)
    return LinearizedModel(
        omega=tuple(omega), g=tuple(g), g_direct=g_direct, kappa=setup.kappa,
        gamma=setup.gamma, detuning_eff=float(local_detuning(setup, r0)),
        bath_occupancy=tuple(n_bath), mean_field=alpha * rot, drive=setup.drive,
        zpf=tuple(zpf), mass=setup.mass, equilibrium_shift=tuple(r0),
        degenerate=setup.drive == 0.0)


def closed_form_couplings(setup: PhysicalSetup, mean_field: complex | None = None,
                          zpf=None) -> dict:
    """Focus-centred closed forms for the couplings.

    Valid when the equilibrium coincides with the tweezer focus.  Returns a
    dict with ``g`` (x and y amplitude-coupled, z phase-coupled, as a complex
    3-vector) and ``g_direct`` (xy, xz, yz).
    """
    if mean_field is None:
        mean_field = derive_drive_and_field(setup).mean_field
    if zpf is None:
        zpf = _nominal_zpf(setup)
    ed, k = setup.drive, setup.k
    st, ct = snap_sin(setup.tilt), snap_cos(setup.tilt)
    sp, cp = snap_sin(setup.node_phase), snap_cos(setup.node_phase)
    y0, p0 = 2 * mean_field.real, 2 * mean_field.imag
    xz, yz, zz = zpf
    g = (-ed * k * st * sp * xz + 0j, -ed * k * ct * sp * yz + 0j, 1j * ed * k * cp * zz)
    g_direct = (-ed * k ** 2 * y0 * st * ct * cp * xz * yz,
                -ed * k ** 2 * p0 * st * sp * xz * zz,
                -ed * k ** 2 * p0 * ct * sp * yz * zz)
    return {"g": g, "g_direct": g_direct}


def cancellation_factor(node_phase: float) -> float:
    """``1 - cot^2(phi)`` written as ``-cos(2 phi) / sin^2(phi)``.

    This form is exactly zero at ``phi = pi/4`` in floating point.
    """
    return -snap_cos(2 * node_phase) / snap_sin(node_phase) ** 2


def direct_coupling_estimate(model: LinearizedModel, node_phase: float) -> float:
    """Large-detuning estimate g_xy ~ g_x g_y 2 Delta cot^2(phi) / (Delta^2 + kappa^2/4)."""
    d, k = model.detuning_eff, model.kappa
    cot2 = (snap_cos(node_phase) / snap_sin(node_phase)) ** 2
    return model.coupling(0) * model.coupling(1) * 2 * d * cot2 / (d ** 2 + k ** 2 / 4)


# -- finite-difference oracle -------------------------------------------------

def _fd_hessian(setup, r0, alpha, gouy):
    """Richardson-extrapolated central differences of the full potential."""
    h = np.full(3, 2e-3 / setup.k)

    def u(dr, da=0j):
        return potential_rate(setup, r0 + dr, alpha + da, gouy)

    def second(j, kk, s):
        ej = np.zeros(3)
        ej[j] = s * h[j]
        if j == kk:
            return (u(ej) - 2 * u(np.zeros(3)) + u(-ej)) / (s * h[j]) ** 2
        ek = np.zeros(3)
        ek[kk] = s * h[kk]
        return (u(ej + ek) - u(ej - ek) - u(-ej + ek) + u(-ej - ek)) / (4 * s * h[j] * s * h[kk])

    hrr = np.empty((3, 3))
    for j in range(3):
        for kk in range(j, 3):
            d1, d2 = second(j, kk, 1.0), second(j, kk, 0.5)
            hrr[j, kk] = hrr[kk, j] = (4 * d2 - d1) / 3

    ha = 1e-3 * max(1.0, abs(alpha))

    def d_astar(dr):
        # U is quadratic in a, so central differences in a are exact
        gr = (u(dr, ha) - u(dr, -ha)) / (2 * ha)
        gi = (u(dr, 1j * ha) - u(dr, -1j * ha)) / (2 * ha)
        return 0.5 * (gr + 1j * gi)

    hra = np.empty(3, dtype=complex)
    for j in range(3):
        ej = np.zeros(3)
        ej[j] = h[j]
        d1 = (d_astar(ej) - d_astar(-ej)) / (2 * h[j])
        d2 = (d_astar(ej / 2) - d_astar(-ej / 2)) / h[j]
        hra[j] = (4 * d2 - d1) / 3
    return hrr, hra


def hessian_check(setup: PhysicalSetup, gouy: bool = False, model: LinearizedModel | None = None,
                  detail: bool = False):
    """Worst relative error of the linearized model against finite differences.

    The finite differences are taken on the full potential at the model's
    equilibrium.  With ``gouy=True`` the (Gouy-free) model is compared with
    the Gouy-inclusive potential, which bounds the error of neglecting it.

    Errors are relative to the natural scale of each quantity: omega_j itself;
    max(|g_j|, E_d k zpf_j) for light-matter couplings; and
    max(|g_jk|, E_d k^2 zpf_j zpf_k max(|alpha|, 1)) for direct couplings.
    """
    if model is None:
        model = linearize(setup)
    r0 = np.array(model.equilibrium_shift)
    beta0, _, _ = _beta(setup, r0[2], False)
    alpha = model.mean_field * np.exp(1j * beta0)
    hrr, hra = _fd_hessian(setup, r0, alpha, gouy)
    omega = np.sqrt(HBAR * np.abs(np.diag(hrr)) / setup.mass)
    zpf = np.array(model.zpf)
    g = -zpf * hra * np.exp(-1j * beta0)
    ed, k = setup.drive, setup.k
    tiny = np.finfo(float).tiny
    errs = {}
    for j in range(3):
        errs[f"omega_{AXES[j]}"] = abs(omega[j] - model.omega[j]) / model.omega[j]
        scale = max(abs(model.g[j]), ed * k * zpf[j], tiny)
        errs[f"g_{AXES[j]}"] = abs(g[j] - model.g[j]) / scale
    for (j, kk), gd in zip(PAIRS, model.g_direct):
        val = -hrr[j, kk] * zpf[j] * zpf[kk]
        scale = max(abs(gd), ed * k ** 2 * zpf[j] * zpf[kk] * max(abs(alpha), 1.0), tiny)
        errs[f"g_{AXES[j]}{AXES[kk]}"] = abs(val - gd) / scale
    worst = max(errs.values())
    return (worst, errs) if detail else worst
