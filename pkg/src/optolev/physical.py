"""Physical coherent-scattering setup and its full (un-linearized) potential.

All energies returned by the ``*_rate`` helpers are divided by hbar, i.e. in
rad/s, which keeps the numbers of the tweezer, cavity and interaction terms
within a few orders of magnitude of each other.  Positions are in metres,
measured from the tweezer focus.  The classical cavity amplitude ``a`` is
dimensionless (``|a|**2`` = photon number) and lives in the frame rotating at
the tweezer frequency.

Potential (divided by hbar)::

    U(r, a) = -(V0/hbar) (E(r)**2 - 1) - D0 c(r)**2 |a|**2
              - E_d E(r) c(r) (a exp(-i beta(z)) + c.c.)

with the tweezer amplitude envelope
``E = exp(-x**2/w_x**2 - y**2/w_y**2) / sqrt(1 + z**2/z_R**2)``, the cavity
standing wave ``c = cos(phi + k (x sin(theta) + y cos(theta)))``,
``V0 = alpha eps_tw**2 / 4``, ``D0 = alpha eps_c**2 / hbar`` and
``beta = k z`` (optionally ``- arctan(z/z_R)``, the Gouy phase).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import constants as sc

from .errors import ConfigError

HBAR = sc.hbar
KB = sc.k
C_LIGHT = sc.c
EPS0 = sc.epsilon_0

# |cos| or |sin| below this is treated as an exact zero (nodes, theta = pi/2).
_TRIG_SNAP = 1e-15


def snap_cos(x):
    v = np.cos(x)
    return np.where(np.abs(v) < _TRIG_SNAP, 0.0, v) if np.ndim(v) else (0.0 if abs(v) < _TRIG_SNAP else float(v))


def snap_sin(x):
    v = np.sin(x)
    return np.where(np.abs(v) < _TRIG_SNAP, 0.0, v) if np.ndim(v) else (0.0 if abs(v) < _TRIG_SNAP else float(v))


@dataclass(frozen=True)
class PhysicalSetup:
    """Raw experimental parameters, SI units, angular frequencies in rad/s.

    The cavity mode volume is either given directly (``mode_volume``) or
    computed from ``cavity_waist`` and ``cavity_length`` as
    ``pi w_c**2 L / 4``.  ``detuning`` is negative for a red-detuned cavity.
    """

    tweezer_power: float
    wavelength: float
    waist_x: float
    waist_y: float
    tilt: float
    node_phase: float
    particle_radius: float
    particle_density: float
    relative_permittivity: float
    cavity_length: float
    finesse: float
    detuning: float
    gas_pressure: float
    cavity_waist: float | None = None
    mode_volume: float | None = None
    gas_temperature: float = 300.0
    mechanical_damping_override: float | None = None
    gas_molar_mass: float = 28.97e-3

    def __post_init__(self):
        positive = ("tweezer_power", "wavelength", "waist_x", "waist_y",
                    "particle_radius", "particle_density", "cavity_length",
                    "gas_pressure", "gas_temperature", "gas_molar_mass")
        for name in positive:
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be strictly positive, got {value!r}")
        if not self.relative_permittivity > 1:
            raise ConfigError(f"relative_permittivity must exceed 1, got {self.relative_permittivity!r}")
        if not self.finesse > 1:
            raise ConfigError(f"finesse must exceed 1, got {self.finesse!r}")
        if not 0.0 <= self.tilt <= math.pi / 2 + 1e-12:
            raise ConfigError(f"tilt must lie in [0, pi/2] rad, got {self.tilt!r}")
        if not np.isfinite(self.node_phase) or not np.isfinite(self.detuning):
            raise ConfigError("node_phase and detuning must be finite")
        if self.mode_volume is None and self.cavity_waist is None:
            raise ConfigError("either cavity waist or mode_volume is required")
        for name in ("mode_volume", "cavity_waist"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"{name} must be strictly positive, got {value!r}")
        if self.mechanical_damping_override is not None and self.mechanical_damping_override < 0:
            raise ConfigError("mechanical_damping_override must be >= 0")

    def replace(self, **changes) -> "PhysicalSetup":
        return dataclasses.replace(self, **changes)

    # -- derived optical quantities ---------------------------------------
    @cached_property
    def k(self) -> float:
        return 2 * math.pi / self.wavelength

    @cached_property
    def omega_cavity(self) -> float:
        return 2 * math.pi * C_LIGHT / self.wavelength

    @cached_property
    def rayleigh_range(self) -> float:
        return math.pi * self.waist_x * self.waist_y / self.wavelength

    @cached_property
    def tweezer_field(self) -> float:
        """Peak tweezer field amplitude eps_tw in V/m."""
        return math.sqrt(4 * self.tweezer_power / (self.waist_x * self.waist_y * math.pi * EPS0 * C_LIGHT))

    @cached_property
    def cavity_volume(self) -> float:
        if self.mode_volume is not None:
            return self.mode_volume
        return math.pi * self.cavity_waist ** 2 * self.cavity_length / 4

    @cached_property
    def cavity_field(self) -> float:
        """Single-photon cavity field eps_c in V/m."""
        return math.sqrt(HBAR * self.omega_cavity / (2 * EPS0 * self.cavity_volume))

    @cached_property
    def kappa(self) -> float:
        """Full cavity energy linewidth, 2 pi FSR / F, in rad/s."""
        return math.pi * C_LIGHT / (self.cavity_length * self.finesse)

    # -- particle ----------------------------------------------------------
    @cached_property
    def particle_volume(self) -> float:
        return 4 / 3 * math.pi * self.particle_radius ** 3

    @cached_property
    def mass(self) -> float:
        return self.particle_density * self.particle_volume

    @cached_property
    def polarizability(self) -> float:
        er = self.relative_permittivity
        return 3 * EPS0 * self.particle_volume * (er - 1) / (er + 2)

    # -- couplings and potential scales -----------------------------------
    @cached_property
    def drive(self) -> float:
        """Coherent-scattering drive rate E_d in rad/s."""
        return (self.polarizability * self.cavity_field * self.tweezer_field
                * snap_sin(self.tilt) / (2 * HBAR))

    @cached_property
    def tweezer_depth(self) -> float:
        """V0 = alpha eps_tw^2 / 4 in joules (trap depth at the focus)."""
        return self.polarizability * self.tweezer_field ** 2 / 4

    @cached_property
    def cavity_shift(self) -> float:
        """D0 = alpha eps_c^2 / hbar in rad/s; Delta_0 = D0 cos^2(phi)."""
        return self.polarizability * self.cavity_field ** 2 / HBAR

    @cached_property
    def gas_damping(self) -> float:
        """Epstein drag rate (diffuse reflection, full accommodation), rad/s.

        Gamma = (4 pi / 3) (1 + pi/8) R^2 rho_gas v_mean / m, with
        rho_gas = P m_gas / (k_B T) and v_mean = sqrt(8 k_B T / (pi m_gas)).
        """
        m_gas = self.gas_molar_mass / sc.N_A
        rho_gas = self.gas_pressure * m_gas / (KB * self.gas_temperature)
        v_mean = math.sqrt(8 * KB * self.gas_temperature / (math.pi * m_gas))
        return (4 * math.pi / 3 * (1 + math.pi / 8) * self.particle_radius ** 2
                * rho_gas * v_mean / self.mass)

    @property
    def damping_from_gas(self) -> bool:
        return self.mechanical_damping_override is None

    @cached_property
    def gamma(self) -> float:
        if self.mechanical_damping_override is not None:
            return float(self.mechanical_damping_override)
        return self.gas_damping


# -- potential pieces --------------------------------------------------------

def _envelope(setup: PhysicalSetup, r):
    """Tweezer amplitude envelope E, psi = ln E and the derivatives of psi."""
    x, y, z = r[0], r[1], r[2]
    zr = setup.rayleigh_range
    s = 1 + (z / zr) ** 2
    psi = -(x / setup.waist_x) ** 2 - (y / setup.waist_y) ** 2 - 0.5 * np.log1p((z / zr) ** 2)
    dpsi = (-2 * x / setup.waist_x ** 2, -2 * y / setup.waist_y ** 2, -(z / zr ** 2) / s)
    d2psi = (-2 / setup.waist_x ** 2 + 0 * x, -2 / setup.waist_y ** 2 + 0 * y,
             -(1 - (z / zr) ** 2) / (zr ** 2 * s ** 2))
    return np.exp(psi), psi, dpsi, d2psi


def _standing_wave(setup: PhysicalSetup, r):
    """cos and sin of phi + k (x sin(theta) + y cos(theta)) and the axis vector."""
    n = (snap_sin(setup.tilt), snap_cos(setup.tilt), 0.0)
    arg = setup.node_phase + setup.k * (n[0] * r[0] + n[1] * r[1])
    return snap_cos(arg), snap_sin(arg), n


def _beta(setup: PhysicalSetup, z, gouy: bool):
    """Longitudinal phase beta(z) and its first two derivatives."""
    k = setup.k
    if not gouy:
        return k * z, k + 0 * z, 0 * z
    zr = setup.rayleigh_range
    s = 1 + (z / zr) ** 2
    return k * z - np.arctan(z / zr), k - 1 / (zr * s), 2 * z / (zr ** 3 * s ** 2)


def potential_rate(setup: PhysicalSetup, r, a, gouy: bool = False):
    """U(r, a) = V_total / hbar in rad/s; broadcasts over trailing axes of r."""
    r = np.asarray(r, dtype=float)
    env, psi, _, _ = _envelope(setup, r)
    c, _, _ = _standing_wave(setup, r)
    beta, _, _ = _beta(setup, r[2], gouy)
    w = a * np.exp(-1j * beta)
    # zero of energy at the bottom of the bare tweezer trap
    tweezer = -setup.tweezer_depth / HBAR * np.expm1(2 * psi)
    cavity = -setup.cavity_shift * c ** 2 * np.abs(a) ** 2
    interaction = -setup.drive * env * c * 2 * np.real(w)
    return tweezer + cavity + interaction


def potential_energy(setup: PhysicalSetup, r, a, gouy: bool = False):
    """Full potential V_total(r, a) in joules."""
    return HBAR * potential_rate(setup, r, a, gouy)


def gradient_rate(setup: PhysicalSetup, r, a, gouy: bool = False):
    """Exact gradient of ``potential_rate`` with respect to r, at fixed a.

    Returns an array shaped like ``r`` (rad/s per metre).
    """
    r = np.asarray(r, dtype=float)
    env, _, dpsi, _ = _envelope(setup, r)
    c, s, n = _standing_wave(setup, r)
    beta, dbeta, _ = _beta(setup, r[2], gouy)
    w = a * np.exp(-1j * beta)
    big_w = 2 * np.real(w)
    absa2 = np.abs(a) ** 2
    v0 = setup.tweezer_depth / HBAR
    grads = []
    for i in range(3):
        dc = -setup.k * n[i] * s
        d_env2 = 2 * dpsi[i] * env ** 2
        dF = env * (dpsi[i] * c + dc)
        dW = 2 * dbeta * np.imag(w) if i == 2 else 0.0
        g = (-v0 * d_env2 - setup.cavity_shift * 2 * c * dc * absa2
             - setup.drive * (dF * big_w + env * c * dW))
        grads.append(g)
    return np.stack(np.broadcast_arrays(*grads))


def force(setup: PhysicalSetup, r, a, gouy: bool = False):
    """Force -grad V_total in newtons."""
    return -HBAR * gradient_rate(setup, r, a, gouy)


def local_detuning(setup: PhysicalSetup, r):
    """Delta + D0 c(r)^2: detuning including the particle's dispersive shift."""
    c, _, _ = _standing_wave(setup, np.asarray(r, dtype=float))
    return setup.detuning + setup.cavity_shift * c ** 2


def cavity_source(setup: PhysicalSetup, r, gouy: bool = False):
    """Coherent-scattering source term i E_d E(r) c(r) exp(i beta(z)), rad/s."""
    r = np.asarray(r, dtype=float)
    env, _, _, _ = _envelope(setup, r)
    c, _, _ = _standing_wave(setup, r)
    beta, _, _ = _beta(setup, r[2], gouy)
    return 1j * setup.drive * env * c * np.exp(1j * beta)


def steady_field(setup: PhysicalSetup, r, gouy: bool = False):
    """Stationary cavity amplitude for a particle held fixed at r."""
    lam = 1j * local_detuning(setup, r) - setup.kappa / 2
    return -cavity_source(setup, r, gouy) / lam


def hessian_rate(setup: PhysicalSetup, r, a, gouy: bool = False):
    """Analytic second derivatives of U at a single point.

    Returns
    -------
    hrr : (3, 3) float array
        d^2 U / dr_i dr_j at fixed a.
    hra : (3,) complex array
        d^2 U / dr_i da*  (the Wirtinger derivative with respect to conj(a)).
    """
    r = np.asarray(r, dtype=float).reshape(3)
    env, _, dpsi, d2psi = _envelope(setup, r)
    c, s, n = _standing_wave(setup, r)
    beta, dbeta, d2beta = _beta(setup, r[2], gouy)
    k = setup.k
    w = a * np.exp(-1j * beta)
    big_w = 2 * np.real(w)
    dW = np.array([0.0, 0.0, 2 * dbeta * np.imag(w)])
    d2W_zz = 2 * d2beta * np.imag(w) - 2 * dbeta ** 2 * np.real(w)
    absa2 = abs(a) ** 2
    v0 = setup.tweezer_depth / HBAR
    dc = np.array([-k * n[0] * s, -k * n[1] * s, 0.0])
    dF = env * (np.array(dpsi) * c + dc)

    hrr = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            dij = 1.0 if i == j else 0.0
            psi_ij = d2psi[i] * dij
            env2_ij = (2 * psi_ij + 4 * dpsi[i] * dpsi[j]) * env ** 2
            c_ij = -k ** 2 * n[i] * n[j] * c
            c2_ij = 2 * (dc[i] * dc[j] + c * c_ij)
            F_ij = env * ((psi_ij + dpsi[i] * dpsi[j]) * c + dpsi[i] * dc[j] + dpsi[j] * dc[i] + c_ij)
            W_ij = d2W_zz if (i == 2 and j == 2) else 0.0
            FW_ij = F_ij * big_w + dF[i] * dW[j] + dF[j] * dW[i] + env * c * W_ij
            hrr[i, j] = -v0 * env2_ij - setup.cavity_shift * c2_ij * absa2 - setup.drive * FW_ij

    phase = np.exp(1j * beta)
    hra = np.empty(3, dtype=complex)
    for i in range(3):
        dFe = (dF[i] + (1j * dbeta * env * c if i == 2 else 0.0)) * phase
        hra[i] = -setup.cavity_shift * 2 * c * dc[i] * a - setup.drive * dFe
    return hrr, hra
