"""INI configuration files, unit conversion and exact text round trips.

Keys carry their unit as a suffix.  Where two spellings exist the first one
listed is what :func:`emit_setup` writes.

========== ======================================= ==============================
section    key                                     notes
========== ======================================= ==============================
tweezer    power_W                                 required
tweezer    wavelength_m | wavelength_nm            required
tweezer    waist_x_m | waist_x_um                  required
tweezer    waist_y_m | waist_y_um                  required
tweezer    tilt_rad | tilt_pi                      required, tilt_pi in units of pi
tweezer    node_phase_rad | node_phase_pi          required
cavity     length_m                                required
cavity     waist_m | waist_um | mode_volume_m3     one required
cavity     finesse                                 required
cavity     detuning_rad_s | detuning_Hz | _kHz     required; Hz values are x 2 pi
particle   radius_m | radius_nm                    required
particle   density_kg_m3                           required
particle   permittivity                            required (relative)
gas        pressure_Pa | pressure_mbar             required; 1 mbar = 100 Pa
gas        temperature_K                           default 300
gas        damping_rad_s | damping_Hz              optional override of the drag formula
gas        molar_mass_kg_mol                       default 0.02897
run        engine, points, seed, duration_s, timestep_s, trajectories,
           record_stride, segment_length, include_gouy, burn_in_s
========== ======================================= ==============================

Without a damping override the mechanical damping follows the free-molecular
(Epstein) drag formula, which is not part of the underlying model; the run
manifest flags this.
"""

from __future__ import annotations

import configparser
import io
import math
from pathlib import Path

from .derivation import LinearizedModel
from .errors import ConfigError
from .physical import PhysicalSetup

TWO_PI = 2 * math.pi

# field -> (section, [(key, factor)], required)
_SETUP_KEYS = {
    "tweezer_power": ("tweezer", [("power_W", 1.0)], True),
    "wavelength": ("tweezer", [("wavelength_m", 1.0), ("wavelength_nm", 1e-9)], True),
    "waist_x": ("tweezer", [("waist_x_m", 1.0), ("waist_x_um", 1e-6)], True),
    "waist_y": ("tweezer", [("waist_y_m", 1.0), ("waist_y_um", 1e-6)], True),
    "tilt": ("tweezer", [("tilt_rad", 1.0), ("tilt_pi", math.pi)], True),
    "node_phase": ("tweezer", [("node_phase_rad", 1.0), ("node_phase_pi", math.pi)], True),
    "cavity_length": ("cavity", [("length_m", 1.0)], True),
    "cavity_waist": ("cavity", [("waist_m", 1.0), ("waist_um", 1e-6)], False),
    "mode_volume": ("cavity", [("mode_volume_m3", 1.0)], False),
    "finesse": ("cavity", [("finesse", 1.0)], True),
    "detuning": ("cavity", [("detuning_rad_s", 1.0), ("detuning_Hz", TWO_PI),
                            ("detuning_kHz", TWO_PI * 1e3)], True),
    "particle_radius": ("particle", [("radius_m", 1.0), ("radius_nm", 1e-9)], True),
    "particle_density": ("particle", [("density_kg_m3", 1.0)], True),
    "relative_permittivity": ("particle", [("permittivity", 1.0)], True),
    "gas_pressure": ("gas", [("pressure_Pa", 1.0), ("pressure_mbar", 100.0)], True),
    "gas_temperature": ("gas", [("temperature_K", 1.0)], False),
    "mechanical_damping_override": ("gas", [("damping_rad_s", 1.0), ("damping_Hz", TWO_PI)], False),
    "gas_molar_mass": ("gas", [("molar_mass_kg_mol", 1.0)], False),
}

_RUN_KEYS = {
    "engine": str, "points": int, "seed": int, "duration_s": float, "timestep_s": float,
    "trajectories": int, "record_stride": int, "segment_length": int,
    "include_gouy": "bool", "burn_in_s": float,
}

SECTIONS = ("tweezer", "cavity", "particle", "gas", "run")


def required_keys() -> list:
    out = []
    for field_name, (section, keys, required) in _SETUP_KEYS.items():
        if required:
            out.append(f"{section}.{' | '.join(k for k, _ in keys)}")
    out.append("cavity.waist_m | waist_um | mode_volume_m3")
    return out


def read_sections(path) -> dict:
    """Read an INI file into ``{section: {key: value}}`` (values are strings)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_sections(path.read_text())


def parse_sections(text: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return {s: dict(parser.items(s)) for s in parser.sections()}


def _number(section, key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected a number, got {raw!r}") from None


def setup_from_sections(sections: dict) -> PhysicalSetup:
    """Build a validated PhysicalSetup; unknown sections or keys are rejected."""
    known = {}
    for field_name, (section, keys, _) in _SETUP_KEYS.items():
        for key, factor in keys:
            known[(section, key)] = (field_name, factor)
    for section, entries in sections.items():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key in entries:
            if section == "run":
                if key not in _RUN_KEYS:
                    raise ConfigError(f"unknown key run.{key}")
            elif (section, key) not in known:
                raise ConfigError(f"unknown key {section}.{key}")
    values, missing = {}, []
    for field_name, (section, keys, required) in _SETUP_KEYS.items():
        given = [(k, f) for k, f in keys if k in sections.get(section, {})]
        if len(given) > 1:
            raise ConfigError(f"{section}: give only one of {', '.join(k for k, _ in given)}")
        if given:
            key, factor = given[0]
            v = _number(section, key, sections[section][key])
            values[field_name] = v if factor == 1.0 else v * factor
        elif required:
            missing.append(f"{section}.{' | '.join(k for k, _ in keys)}")
    if "cavity_waist" not in values and "mode_volume" not in values:
        missing.append("cavity.waist_m | waist_um | mode_volume_m3")
    if missing:
        raise ConfigError("missing required keys: " + "; ".join(missing))
    return PhysicalSetup(**values)


def run_options(sections: dict) -> dict:
    out = {}
    for key, raw in sections.get("run", {}).items():
        kind = _RUN_KEYS[key]
        try:
            if kind == "bool":
                out[key] = raw.strip().lower() in ("1", "true", "yes", "on")
            else:
                out[key] = kind(raw)
        except ValueError:
            raise ConfigError(f"run.{key}: cannot parse {raw!r}") from None
    if out.get("engine", "closed-form") not in ("closed-form", "lam"):
        raise ConfigError("run.engine must be 'closed-form' or 'lam'")
    return out


def parse_config(path):
    """Parse a config file.

    Returns
    -------
    setup : PhysicalSetup
    options : dict
        Contents of the ``[run]`` section with types applied.
    """
    sections = read_sections(path)
    return setup_from_sections(sections), run_options(sections)


def setup_sections(setup: PhysicalSetup) -> dict:
    """Canonical SI-keyed sections for a setup (first key spelling, exact repr)."""
    out = {s: {} for s in SECTIONS[:4]}
    for field_name, (section, keys, _) in _SETUP_KEYS.items():
        value = getattr(setup, field_name)
        if value is None:
            continue
        out[section][keys[0][0]] = repr(float(value))
    return out


def emit_sections(sections: dict) -> str:
    buf = io.StringIO()
    for section in SECTIONS:
        entries = sections.get(section)
        if not entries:
            continue
        buf.write(f"[{section}]\n")
        for key, value in entries.items():
            buf.write(f"{key} = {value}\n")
        buf.write("\n")
    return buf.getvalue()


def emit_setup(setup: PhysicalSetup, run: dict | None = None) -> str:
    sections = setup_sections(setup)
    if run:
        sections["run"] = {k: (str(v).lower() if isinstance(v, bool) else str(v)) for k, v in run.items()}
    return emit_sections(sections)


# -- LinearizedModel text form --------------------------------------------------

_VECTOR_FIELDS = ("omega", "g", "g_direct", "bath_occupancy", "zpf", "equilibrium_shift")
_SCALAR_FIELDS = ("kappa", "gamma", "detuning_eff", "mean_field", "drive", "mass",
                  "optical_occupancy", "degenerate")
_VECTOR_LABELS = {"omega": "xyz", "g": "xyz", "bath_occupancy": "xyz", "zpf": "xyz",
                  "equilibrium_shift": "xyz", "g_direct": ("xy", "xz", "yz")}


def emit_model(model: LinearizedModel) -> str:
    """``key = value`` lines with exact (repr) numbers, one per model entry."""
    lines = []
    for name in _VECTOR_FIELDS:
        for label, value in zip(_VECTOR_LABELS[name], getattr(model, name)):
            lines.append(f"{name}_{label} = {value!r}")
    for name in _SCALAR_FIELDS:
        lines.append(f"{name} = {getattr(model, name)!r}")
    lines.append("quadrature_tags = " + ",".join(model.quadrature_tags))
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> LinearizedModel:
    """Inverse of :func:`emit_model`."""
    kv = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith(("#", "[")):
            continue
        key, _, value = line.partition("=")
        kv[key.strip()] = value.strip()
    try:
        fields = {}
        for name in _VECTOR_FIELDS:
            conv = complex if name == "g" else float
            fields[name] = tuple(conv(kv[f"{name}_{label}"]) for label in _VECTOR_LABELS[name])
        for name in _SCALAR_FIELDS:
            raw = kv[name]
            if name == "mean_field":
                fields[name] = complex(raw)
            elif name == "degenerate":
                fields[name] = raw == "True"
            else:
                fields[name] = float(raw)
    except KeyError as exc:
        raise ConfigError(f"model text is missing {exc.args[0]}") from None
    return LinearizedModel(**fields)
