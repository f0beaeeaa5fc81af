"""Reference setups for the three experimental configurations studied.

Values not pinned down by the experiments (cavity geometry, silica density,
tweezer power for the ground-state setup, waists of the hybridisation setup)
are chosen to match the quoted trap frequencies and cavity linewidths.
"""

from __future__ import annotations

import math

from .physical import PhysicalSetup

TWO_PI = 2 * math.pi
MBAR = 100.0  # Pa

_COMMON = dict(
    wavelength=1064e-9,
    particle_density=2200.0,
    relative_permittivity=2.1,
    cavity_length=1.07e-2,
    cavity_waist=41.1e-6,
)


def hybridisation_setup(node_phase: float = 0.25 * math.pi, **changes) -> PhysicalSetup:
    """Strong-hybridisation setup (tilt 0.2 pi, 100 nm particle, F = 150000)."""
    params = dict(
        _COMMON,
        tweezer_power=0.17,
        waist_x=0.66e-6,
        waist_y=0.77e-6,
        tilt=0.2 * math.pi,
        node_phase=node_phase,
        particle_radius=100e-9,
        finesse=150000.0,
        detuning=-TWO_PI * 300e3,
        gas_pressure=1e-6 * MBAR,
    )
    params.update(changes)
    return PhysicalSetup(**params)


def squeezing_setup(node_phase: float = 0.25 * math.pi, **changes) -> PhysicalSetup:
    """Far-detuned variant at lower pressure used for output-field spectra."""
    params = dict(detuning=-TWO_PI * 1e6, gas_pressure=1e-7 * MBAR)
    params.update(changes)
    return hybridisation_setup(node_phase, **params)


def ground_state_setup(detuning: float = -TWO_PI * 580e3, **changes) -> PhysicalSetup:
    """Ground-state cooling setup: particle at a node, tilt 0.47 pi."""
    params = dict(
        _COMMON,
        tweezer_power=0.4,
        waist_x=0.600e-6,
        waist_y=0.705e-6,
        tilt=0.47 * math.pi,
        node_phase=0.5 * math.pi,
        particle_radius=71.5e-9,
        finesse=73000.0,
        detuning=detuning,
        gas_pressure=1e-6 * MBAR,
    )
    params.update(changes)
    return PhysicalSetup(**params)


PRESETS = {
    "hybridisation": hybridisation_setup,
    "squeezing": squeezing_setup,
    "ground-state": ground_state_setup,
}
