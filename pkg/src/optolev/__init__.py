"""Levitated cavity optomechanics with coherent scattering."""

__version__ = "0.1.0"

from .config import emit_model, emit_setup, parse_config, parse_model  # noqa: E402
from .derivation import LinearizedModel, hessian_check, linearize, solve_equilibrium  # noqa: E402
from .errors import (ConfigError, ConvergenceError, InstabilityError, OptolevError,  # noqa: E402
                     SingularityError, TrapLossError)
from .physical import PhysicalSetup  # noqa: E402
from .qlt import hybrid_coupling, psd  # noqa: E402
from .spectra import FrequencyGrid, SpectrumSet  # noqa: E402

__all__ = [
    "ConfigError", "ConvergenceError", "FrequencyGrid", "InstabilityError", "LinearizedModel",
    "OptolevError", "PhysicalSetup", "SingularityError", "SpectrumSet", "TrapLossError",
    "emit_model", "emit_setup", "hessian_check", "hybrid_coupling", "linearize", "parse_config",
    "parse_model", "psd", "solve_equilibrium",
]
