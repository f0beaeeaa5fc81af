"""Parameter sweeps, run manifests and CSV output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import _SETUP_KEYS, emit_sections, run_options, setup_from_sections
from .derivation import AXES, linearize
from .errors import ConfigError, ConvergenceError, InstabilityError, OptolevError, SingularityError
from .spectra import CONVENTION

TASKS = ("occupancy", "spectra", "simulate", "hybrid")


def _resolve(sections: dict, path: str):
    """Map ``section.name`` onto exactly one config key.

    ``name`` is either a full key (``cavity.detuning_kHz``) or a key stem
    (``cavity.detuning``); a stem resolves to the spelling already present
    in the base config.
    """
    section, _, name = path.partition(".")
    if not name:
        raise ConfigError(f"sweep parameter {path!r} must look like section.key")
    spellings = [k for s, keys, _ in _SETUP_KEYS.values() if s == section for k, _ in keys]
    if name in spellings:
        return section, name
    stem = [k for k in spellings if k.startswith(name + "_")]
    present = [k for k in stem if k in sections.get(section, {})]
    if len(present) == 1:
        return section, present[0]
    if not stem:
        raise ConfigError(f"sweep parameter {path!r} matches no config key")
    raise ConfigError(f"sweep parameter {path!r} is ambiguous; use one of "
                      + ", ".join(f"{section}.{k}" for k in stem))


@dataclass(frozen=True)
class SweepSpec:
    """One swept config key, its values and the task run at each point."""

    parameter: str
    values: tuple
    task: str = "occupancy"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"sweep task must be one of {', '.join(TASKS)}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ConfigError("sweep needs at least one value")
        if not all(math.isfinite(v) for v in values):
            raise ConfigError("sweep values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_range(cls, parameter: str, start: float, stop: float, num: int, task: str = "occupancy"):
        return cls(parameter, tuple(np.linspace(start, stop, int(num))), task)

    def point_sections(self, sections: dict) -> list:
        """Config sections for every point; each is validated eagerly."""
        section, key = _resolve(sections, self.parameter)
        # other spellings of the swept field give way to the swept key
        others = [k for sec, keys, _ in _SETUP_KEYS.values() if sec == section
                  and key in [n for n, _ in keys] for k, _ in keys if k != key]
        out = []
        for v in self.values:
            s = {k: dict(e) for k, e in sections.items()}
            entries = s.setdefault(section, {})
            for k in others:
                entries.pop(k, None)
            entries[key] = repr(v)
            try:
                setup_from_sections(s)
            except ConfigError as exc:
                raise ConfigError(f"sweep value {v!r} for {section}.{key}: {exc}") from None
            out.append(s)
        return out


@dataclass
class RunManifest:
    """Provenance of one run.  The hash covers everything except timing."""

    config: str
    seed: int | None
    command: str
    options: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    version: str = __version__
    convention: dict = field(default_factory=lambda: dict(CONVENTION))

    def hashed_fields(self) -> dict:
        return {"config": self.config, "seed": self.seed, "command": self.command,
                "options": self.options, "notes": self.notes, "version": self.version,
                "convention": self.convention}

    @property
    def digest(self) -> str:
        text = json.dumps(self.hashed_fields(), sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()

    @property
    def filename(self) -> str:
        return f"manifest-{self.digest[:12]}.json"

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / self.filename
        data = dict(self.hashed_fields(), digest=self.digest, timing=self.timing)
        path.write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")
        return path


def manifest_notes(setup) -> list:
    notes = []
    if setup.damping_from_gas:
        notes.append("damping from free-molecular gas drag formula (not part of the model)")
    return notes


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        return repr(complex(v))
    return str(v)


def csv_text(manifest: RunManifest, columns, rows) -> str:
    """CSV with a comment header naming the manifest; numbers as exact reprs."""
    buf = io.StringIO()
    buf.write(f"# manifest: {manifest.digest}\n")
    buf.write(f"# manifest_file: {manifest.filename}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        values = [row.get(c, "") for c in columns] if isinstance(row, dict) else row
        writer.writerow([_fmt(v) for v in values])
    return buf.getvalue()


def write_csv(path, manifest: RunManifest, columns, rows) -> Path:
    path = Path(path)
    path.write_text(csv_text(manifest, columns, rows))
    return path


# -- per-point tasks -----------------------------------------------------------

def spectra_columns(observables) -> list:
    return ["omega_rad_s"] + list(observables)


def spectra_rows(spec, observables, symmetrized: bool = True):
    data = spec.symmetrized if symmetrized else spec.unsymmetrized
    return [[w] + [data[o][i] for o in observables] for i, w in enumerate(spec.grid.points)]


def occupancy_point(setup, options: dict) -> dict:
    from . import thermometry

    model = linearize(setup, gouy=options.get("include_gouy", False))
    if not model.is_stable():
        raise InstabilityError("linearized model is unstable")
    rep = thermometry.occupancy_report(model, engine=options.get("engine", "closed-form"))
    row = rep.as_dict()
    spring = thermometry.spring_report(model, np.array([0.0]), one_d=True)
    for ax, dw, dg in zip(AXES, spring.delta_omega, spring.delta_gamma):
        row[f"delta_omega_{ax}"] = float(dw)
        row[f"delta_gamma_{ax}"] = float(dg)
    R, frac = thermometry.heterodyne_ratio(model)
    row["heterodyne_ratio"] = R
    row["hybrid_fraction"] = frac
    return row


def hybrid_point(setup, options: dict) -> dict:
    from . import qlt

    model = linearize(setup, gouy=options.get("include_gouy", False))
    w = np.linspace(0.5 * model.omega[1], 1.5 * model.omega[0], int(options.get("points", 4001)))
    G = qlt.hybrid_coupling(model, w)
    return {"max_abs_G_xy": float(np.max(np.abs(G[0, 1]))),
            "max_abs_G_yx": float(np.max(np.abs(G[1, 0]))),
            "g_xy": model.g_direct[0]}


def simulate_point(setup, options: dict, seed: int):
    from . import langevin

    model = linearize(setup, gouy=options.get("include_gouy", False))
    dt = options.get("timestep_s", 2 * np.pi / max(model.omega) / 80)
    cfg = langevin.SimConfig(setup, duration=options.get("duration_s", 5e-3), timestep=dt,
                             trajectories=options.get("trajectories", 8), seed=seed,
                             record_stride=options.get("record_stride", 4),
                             include_gouy=options.get("include_gouy", False),
                             burn_in=options.get("burn_in_s", 0.0), min_periods=0)
    cfg.validate(model)
    rec = langevin.integrate(cfg, model)
    est = langevin.estimate_psd(rec, model, segment_length=options.get("segment_length", 4096))
    cmp = langevin.compare_with_linear(est, model, rec.sample_interval)
    row = {}
    for ax in AXES:
        row[f"power_{ax}"] = cmp[ax]["power_sim"]
        row[f"power_ref_{ax}"] = cmp[ax]["power_ref"]
        row[f"ratio_{ax}"] = cmp[ax]["ratio"]
    row["peaks_match"] = langevin.peaks_match(cmp)
    return row, est


def spectra_point(setup, options: dict):
    from . import qlt
    from .spectra import FrequencyGrid

    model = linearize(setup, gouy=options.get("include_gouy", False))
    n = options.get("points")
    grid = FrequencyGrid.default(model, n) if n else FrequencyGrid.for_model(model)
    return qlt.psd(model, grid, AXES, engine=options.get("engine", "closed-form"))


def _status(exc) -> str:
    if isinstance(exc, InstabilityError):
        return "UNSTABLE"
    if isinstance(exc, (SingularityError, ConvergenceError)):
        return "NUMERICAL_FAILURE"
    return "ERROR"


def run_sweep(spec: SweepSpec, sections: dict, out_dir, seed: int = 0, threads: int = 1,
              engine: str | None = None) -> dict:
    """Run ``spec`` over a base configuration and write its tables.

    Points run as independent tasks; a single collector writes results in
    sweep order.  Failing points become rows with status UNSTABLE,
    NUMERICAL_FAILURE or ERROR and do not stop the sweep.

    Returns
    -------
    dict
        ``table`` (path of the main CSV), ``files`` (per-point files),
        ``manifest`` (RunManifest) and ``rows``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    options = run_options(sections)
    if engine:
        options["engine"] = engine
    points = spec.point_sections(sections)
    section, key = _resolve(sections, spec.parameter)
    base_setup = setup_from_sections(sections)
    manifest = RunManifest(config=emit_sections(sections), seed=seed, command="sweep",
                           options={**options, "parameter": f"{section}.{key}",
                                    "values": list(spec.values), "task": spec.task},
                           notes=manifest_notes(base_setup))
    seeds = np.random.SeedSequence(seed).generate_state(len(points))

    def work(i):
        s = setup_from_sections(points[i])
        try:
            if spec.task == "occupancy":
                return occupancy_point(s, options), None
            if spec.task == "hybrid":
                return hybrid_point(s, options), None
            if spec.task == "simulate":
                return simulate_point(s, options, int(seeds[i]))
            return {}, spectra_point(s, options)
        except OptolevError as exc:
            return {"status": _status(exc), "message": str(exc)}, None

    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        results = list(pool.map(work, range(len(points))))
    elapsed = time.perf_counter() - t0

    rows, files = [], []
    for i, (v, (row, spectrum)) in enumerate(zip(spec.values, results)):
        row = dict(row)
        row.setdefault("status", "OK")
        row = {"index": i, key: v, **row}
        if spectrum is not None:
            name = out_dir / f"{spec.task}_{i:03d}.csv"
            obs = list(spectrum.symmetrized)
            write_csv(name, manifest, spectra_columns(obs), spectra_rows(spectrum, obs))
            row["file"] = name.name
            files.append(name)
        rows.append(row)
    columns = []
    for row in rows:
        for c in row:
            if c not in columns and c != "message":
                columns.append(c)
    columns.append("message")
    table = write_csv(out_dir / f"sweep_{spec.task}.csv", manifest, columns, rows)
    manifest.timing = {"seconds": elapsed, "points": len(points), "threads": threads}
    manifest.write(out_dir)
    return {"table": table, "files": files, "manifest": manifest, "rows": rows}
