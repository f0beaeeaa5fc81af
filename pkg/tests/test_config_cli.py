import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import stable_models
from optolev import cli, config, presets, sweep
from optolev.derivation import linearize
from optolev.errors import ConfigError

FIX = Path(__file__).parent / "fixtures"
NAMES = ("hybridisation", "squeezing", "ground_state")
TWO_PI = 2 * math.pi


@pytest.mark.parametrize("name", NAMES)
def test_fixture_models_match_snapshot(name):
    setup, _ = config.parse_config(FIX / f"{name}.ini")
    snap = config.parse_model((FIX / f"{name}_model.txt").read_text())
    model = linearize(setup)
    for field in ("omega", "g", "g_direct", "zpf", "bath_occupancy"):
        a, b = np.array(getattr(model, field)), np.array(getattr(snap, field))
        assert np.allclose(a, b, rtol=1e-9, atol=1e-9 * np.abs(b).max()), field
    assert model.kappa == snap.kappa and model.detuning_eff == pytest.approx(snap.detuning_eff, rel=1e-12)


@pytest.mark.parametrize("name", NAMES)
def test_model_text_round_trip_of_fixtures(name):
    m = config.parse_model((FIX / f"{name}_model.txt").read_text())
    assert config.parse_model(config.emit_model(m)) == m


@settings(max_examples=40, deadline=None)
@given(stable_models())
def test_model_text_round_trip(model):
    assert config.parse_model(config.emit_model(model)) == model


@pytest.mark.parametrize("factory", [presets.hybridisation_setup, presets.ground_state_setup])
def test_setup_round_trip(factory, tmp_path):
    s = factory()
    p = tmp_path / "c.ini"
    p.write_text(config.emit_setup(s, {"engine": "lam", "seed": 4}))
    back, opts = config.parse_config(p)
    assert back == s
    assert opts == {"engine": "lam", "seed": 4}


def test_lab_units_are_converted():
    s, _ = config.parse_config(FIX / "ground_state_lab_units.ini")
    ref = presets.ground_state_setup()
    assert s.detuning == pytest.approx(-TWO_PI * 580e3, rel=1e-15)
    assert s.gas_pressure == pytest.approx(1e-4, rel=1e-15)
    assert s.tilt == pytest.approx(0.47 * math.pi, rel=1e-15)
    for f in ("waist_x", "waist_y", "particle_radius", "cavity_waist", "wavelength"):
        assert getattr(s, f) == pytest.approx(getattr(ref, f), rel=1e-14)


def test_empty_file_lists_required_keys(tmp_path):
    p = tmp_path / "e.ini"
    p.write_text("")
    with pytest.raises(ConfigError) as err:
        config.parse_config(p)
    for key in config.required_keys():
        assert key.split(".")[1].split(" ")[0] in str(err.value)


@pytest.mark.parametrize("text,needle", [
    ("[tweezer]\npower_kW = 1\n", "tweezer.power_kW"),
    ("[laser]\npower_W = 1\n", "laser"),
    ("[run]\nthreads = 2\n", "run.threads"),
])
def test_unknown_keys_rejected(tmp_path, text, needle):
    p = tmp_path / "u.ini"
    p.write_text(text)
    with pytest.raises(ConfigError, match=needle.replace(".", r"\.")):
        config.parse_config(p)


def test_bad_value_names_key(tmp_path):
    text = (FIX / "ground_state.ini").read_text().replace("finesse = 73000.0", "finesse = lots")
    p = tmp_path / "b.ini"
    p.write_text(text)
    with pytest.raises(ConfigError, match="cavity.finesse"):
        config.parse_config(p)


def test_missing_file():
    with pytest.raises(ConfigError):
        config.parse_config("/nonexistent/config.ini")


def test_manifest_flags_drag_formula():
    s = presets.ground_state_setup()
    assert any("drag" in n for n in sweep.manifest_notes(s))
    assert sweep.manifest_notes(s.replace(mechanical_damping_override=1.0)) == []


def test_sweep_spec_validation():
    with pytest.raises(ConfigError):
        sweep.SweepSpec("cavity.detuning_kHz", (), "occupancy")
    with pytest.raises(ConfigError):
        sweep.SweepSpec("cavity.detuning_kHz", (1.0,), "plot")
    sections = config.read_sections(FIX / "ground_state.ini")
    with pytest.raises(ConfigError, match="no config key"):
        sweep.SweepSpec("cavity.colour", (1.0,)).point_sections(sections)
    with pytest.raises(ConfigError, match="particle.radius_m"):
        sweep.SweepSpec("particle.radius", (-1.0,)).point_sections(sections)


def _run(*argv):
    return cli.main([str(a) for a in argv])


def test_cli_exit_codes(tmp_path, capsys):
    gs = FIX / "ground_state.ini"
    assert _run("derive", "--config", gs, "--out-dir", tmp_path) == 0
    out = capsys.readouterr().out
    assert config.parse_model(out.split("# machine-readable")[0]) == linearize(presets.ground_state_setup())
    assert _run("derive", "--config", tmp_path / "missing.ini") == 2
    blue = tmp_path / "blue.ini"
    blue.write_text(config.emit_setup(presets.ground_state_setup(detuning=TWO_PI * 580e3)))
    assert _run("occupancy", "--config", blue, "--out-dir", tmp_path) == 3
    cold = tmp_path / "cold.ini"
    cold.write_text(config.emit_setup(presets.ground_state_setup(mechanical_damping_override=0.0)))
    assert _run("spectra", "--config", cold, "--out-dir", tmp_path) == 4


def test_sweep_is_deterministic_and_ordered(tmp_path):
    gs = FIX / "ground_state.ini"
    args = ("sweep", "--config", gs, "--parameter", "cavity.detuning", "--values=-3.5e6,-2.5e6,-1.9e6")
    assert _run(*args, "--out-dir", tmp_path / "a") == 0
    assert _run(*args, "--out-dir", tmp_path / "b", "--threads", 3) == 0
    a = (tmp_path / "a" / "sweep_occupancy.csv").read_bytes()
    assert a == (tmp_path / "b" / "sweep_occupancy.csv").read_bytes()
    lines = a.decode().splitlines()
    assert lines[0].startswith("# manifest: ")
    digest = lines[0].split(": ")[1]
    assert (tmp_path / "a" / f"manifest-{digest[:12]}.json").exists()
    assert [r.split(",")[0] for r in lines[3:]] == ["0", "1", "2"]


def test_sweep_records_unstable_points(tmp_path):
    sections = config.read_sections(FIX / "ground_state.ini")
    spec = sweep.SweepSpec("cavity.detuning_rad_s", (-3.6e6, 3.6e6))
    rows = sweep.run_sweep(spec, sections, tmp_path)["rows"]
    assert [r["status"] for r in rows] == ["OK", "UNSTABLE"]


def test_single_point_sweep_equals_direct_command(tmp_path):
    gs = FIX / "ground_state.ini"
    sections = config.read_sections(gs)
    value = float(sections["cavity"]["detuning_rad_s"])
    rows = sweep.run_sweep(sweep.SweepSpec("cavity.detuning_rad_s", (value,)), sections, tmp_path)["rows"]
    direct = sweep.occupancy_point(config.setup_from_sections(sections), {})
    for k, v in direct.items():
        assert rows[0][k] == v


def test_spectra_and_hybrid_sweeps(tmp_path):
    sections = config.read_sections(FIX / "hybridisation.ini")
    out = sweep.run_sweep(sweep.SweepSpec("tweezer.node_phase_rad", (0.1 * math.pi, 0.25 * math.pi),
                                          "hybrid"), sections, tmp_path)
    g = [r["max_abs_G_xy"] for r in out["rows"]]
    assert g[1] < g[0]
    sp = sweep.run_sweep(sweep.SweepSpec("cavity.finesse", (1.5e5,), "spectra"), sections, tmp_path)
    assert sp["files"][0].read_text().startswith("# manifest: ")


def test_sweep_in_other_unit_replaces_base_spelling():
    sections = config.read_sections(FIX / "ground_state.ini")
    points = sweep.SweepSpec("cavity.detuning_kHz", (-580.0,)).point_sections(sections)
    assert "detuning_rad_s" not in points[0]["cavity"]
    setup = config.setup_from_sections(points[0])
    assert setup.detuning == pytest.approx(-TWO_PI * 580e3)
