"""Classical stochastic simulation under the full, un-linearized potentials.

Equations of motion (cavity amplitude in the frame of the tweezer laser)::

    dr/dt = p / m
    dp/dt = -hbar grad_r U(r, a) - Gamma p + sqrt(2 m Gamma k_B T) xi(t)
    da/dt = (i (Delta + D0 c(r)^2) - kappa/2) a + i E_d E(r) c(r) exp(i beta(z))

Integrator (one step of length h, weak order 2 in the linear regime)::

    kick h/2 -> drift h/2 -> exact Ornstein-Uhlenbeck step h on p
             -> exact exponential cavity step h (source at the midpoint)
             -> drift h/2 -> kick h/2

The cavity update is exact for a frozen particle, so the stiff decay
``kappa/2`` never limits the step.  No optical (shot) noise is injected: the
simulation is the classical, thermally dominated limit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from . import lam
from .derivation import AXES, LinearizedModel, linearize
from .errors import ConfigError, TrapLossError
from .physical import (HBAR, KB, PhysicalSetup, _beta, cavity_source, gradient_rate,
                       local_detuning, steady_field)
from .spectra import CONVENTION, FrequencyGrid, SpectrumSet

logger = logging.getLogger(__name__)

# Samples of noise drawn per trajectory at a time.
_NOISE_BLOCK = 4096


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``min_periods`` is the least aggregate number of x-oscillation periods
    (duration times trajectories) accepted by :meth:`validate`.
    """

    setup: PhysicalSetup
    duration: float
    timestep: float
    trajectories: int = 1
    seed: int = 0
    record_stride: int = 1
    include_gouy: bool = False
    observables: tuple = ("x", "y", "z", "cavity")
    burn_in: float = 0.0
    initial: str = "lyapunov"
    temperature_scale: float = 1.0
    min_periods: float = 1e4

    def validate(self, model: LinearizedModel | None = None) -> LinearizedModel:
        if model is None:
            model = linearize(self.setup, gouy=self.include_gouy)
        if not (self.duration > 0 and self.timestep > 0 and self.trajectories >= 1
                and self.record_stride >= 1):
            raise ConfigError("duration, timestep, trajectories and record_stride must be positive")
        limit = 0.05 * min(2 * np.pi / max(model.omega), 2 * np.pi / model.kappa)
        if self.timestep >= limit:
            raise ConfigError(f"timestep {self.timestep:.3g} s must be below {limit:.3g} s")
        periods = self.duration * self.trajectories * model.omega[0] / (2 * np.pi)
        if periods < self.min_periods:
            raise ConfigError(f"aggregate run covers {periods:.0f} periods; need {self.min_periods:.0f}")
        if self.initial not in ("lyapunov", "equilibrium"):
            raise ConfigError("initial must be 'lyapunov' or 'equilibrium'")
        return model

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.timestep))


@dataclass
class TrajectoryRecord:
    """Sampled trajectories.

    Attributes
    ----------
    times : (T,) seconds
    positions : (n_traj, 3, T) metres
    momenta : (n_traj, 3, T) kg m/s
    cavity : (n_traj, T) complex
    """

    times: np.ndarray
    positions: np.ndarray
    momenta: np.ndarray
    cavity: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def sample_interval(self) -> float:
        return float(self.times[1] - self.times[0])


def force_field(setup: PhysicalSetup, r, a, gouy: bool = False):
    """Force on the particle and coherent-scattering source for the cavity.

    Returns
    -------
    force : ndarray
        ``-hbar grad_r U(r, a)`` in newtons, shaped like ``r``.
    cavity_drive : complex or ndarray
        ``i E_d E(r) c(r) exp(i beta(z))`` in rad/s.
    """
    return -HBAR * gradient_rate(setup, r, a, gouy), cavity_source(setup, r, gouy)


def _linear_state_sampler(model: LinearizedModel, setup: PhysicalSetup, gouy: bool,
                          temperature_scale: float):
    """Gaussian sampler of the classical stationary state of the linear model."""
    nb = np.array(model.bath_occupancy) * temperature_scale
    drift = lam.build_drift(lam.system_from_model(model, bath_model="brownian", bath=nb))
    noise = drift.noise_full.copy()
    noise[:2, :2] = 0.0
    sigma = lam.lyapunov(lam.DriftMatrix(drift.A, drift.noise_diag, noise))
    # c = (da, da*, b_x, b_x*, ...) -> v = (Re, Im) pairs
    L = np.zeros((8, 8), dtype=complex)
    for i in range(4):
        L[2 * i, 2 * i] = L[2 * i, 2 * i + 1] = 0.5
        L[2 * i + 1, 2 * i] = -0.5j
        L[2 * i + 1, 2 * i + 1] = 0.5j
    cov = (L @ sigma @ L.conj().T).real
    cov = 0.5 * (cov + cov.T)
    w, v = np.linalg.eigh(cov)
    root = v * np.sqrt(np.clip(w, 0, None))
    zpf = np.array(model.zpf)
    r0 = np.array(model.equilibrium_shift)
    beta0, _, _ = _beta(setup, r0[2], False)
    phase = np.exp(1j * beta0)

    def sample(rng):
        x = root @ rng.standard_normal(8)
        da = x[0] + 1j * x[1]
        b = x[2::2] + 1j * x[3::2]
        q = 2 * b.real
        pq = 2 * b.imag
        r = r0 + zpf * q
        p = model.mass * model.omega_array * zpf * pq
        a = (model.mean_field + da) * phase
        return r, p, a

    return sample


def integrate(config: SimConfig, model: LinearizedModel | None = None) -> TrajectoryRecord:
    """Integrate all trajectories of ``config``.

    Trajectory ``i`` uses its own generator spawned from ``config.seed``, so
    results do not depend on how trajectories are batched.

    Raises
    ------
    TrapLossError
        A trajectory diverged or left the trap (time of failure attached).
    """
    setup = config.setup
    gouy = config.include_gouy
    if model is None:
        model = linearize(setup, gouy=gouy)
    n = config.trajectories
    h = config.timestep
    m = setup.mass
    gamma = setup.gamma
    temp = setup.gas_temperature * config.temperature_scale
    seeds = np.random.SeedSequence(config.seed).spawn(n)
    rngs = [np.random.default_rng(s) for s in seeds]

    r = np.empty((3, n))
    p = np.empty((3, n))
    a = np.empty(n, dtype=complex)
    if config.initial == "lyapunov":
        sampler = _linear_state_sampler(model, setup, gouy, config.temperature_scale)
        for i, rng in enumerate(rngs):
            r[:, i], p[:, i], a[i] = sampler(rng)
    else:
        r0 = np.array(model.equilibrium_shift)
        r[:] = r0[:, None]
        p[:] = 0.0
        a[:] = steady_field(setup, r0, gouy)

    decay = np.exp(-gamma * h)
    kick_sd = np.sqrt(m * KB * temp * (1 - decay ** 2))
    bound = 0.5 * min(setup.waist_x, setup.waist_y, setup.wavelength)
    r_ref = np.array(model.equilibrium_shift)[:, None]

    burn = int(round(config.burn_in / h))
    total = burn + config.steps
    stride = config.record_stride
    n_rec = config.steps // stride
    pos = np.empty((n, 3, n_rec))
    mom = np.empty((n, 3, n_rec))
    cav = np.empty((n, n_rec), dtype=complex)

    force, _ = force_field(setup, r, a, gouy)
    block = None
    k_rec = 0
    for step in range(total):
        j = step % _NOISE_BLOCK
        if j == 0:
            size = min(_NOISE_BLOCK, total - step)
            block = np.stack([g.standard_normal((3, size)) for g in rngs], axis=-1)
        p += 0.5 * h * force
        r += 0.5 * h * p / m
        p *= decay
        p += kick_sd * block[:, j, :]
        lam_c = 1j * local_detuning(setup, r) - setup.kappa / 2
        src = cavity_source(setup, r, gouy)
        a_ss = -src / lam_c
        a = a_ss + (a - a_ss) * np.exp(lam_c * h)
        r += 0.5 * h * p / m
        force, _ = force_field(setup, r, a, gouy)
        p += 0.5 * h * force
        if step % 256 == 0 or step == total - 1:
            if not (np.all(np.isfinite(r)) and np.all(np.isfinite(a))) or \
                    np.any(np.abs(r - r_ref) > bound):
                raise TrapLossError(f"trajectory left the trap at t={(step + 1) * h:.6g} s",
                                    time=(step + 1 - burn) * h)
        s = step - burn
        if s >= 0 and (s + 1) % stride == 0 and k_rec < n_rec:
            pos[:, :, k_rec] = r.T
            mom[:, :, k_rec] = p.T
            cav[:, k_rec] = a
            k_rec += 1
    times = (np.arange(n_rec) + 1) * stride * h
    meta = {"seed": config.seed, "timestep": h, "trajectories": n, "include_gouy": gouy,
            "integrator": "kick-drift-OU-cavity-drift-kick", "temperature_scale": config.temperature_scale}
    return TrajectoryRecord(times, pos, mom, cav, meta)


def estimate_psd(records: TrajectoryRecord, model: LinearizedModel, segment_length: int = 4096,
                 window: str = "hann", overlap: float = 0.5) -> SpectrumSet:
    """Segment-averaged periodogram of displacements in zero-point units.

    Displacements are ``q_j = (r_j - r0_j) / zpf_j`` using the model's
    equilibrium and zpf lengths.  Two-sided density estimates ``P(f)`` are
    mapped to angular frequency as ``Sbar(2 pi f) = P(f)``, which preserves
    ``int Sbar dw/2pi = <q^2>``.  Estimates are averaged over trajectories;
    the standard error is the trajectory-to-trajectory spread divided by
    sqrt(n_traj) (or, for one trajectory, the segment-count estimate).

    Raises
    ------
    ConfigError
        If a trajectory is shorter than one segment.
    """
    n_samples = records.times.size
    if n_samples < segment_length:
        raise ConfigError(f"record of {n_samples} samples shorter than segment length {segment_length}")
    fs = 1.0 / records.sample_interval
    r0 = np.array(model.equilibrium_shift)[None, :, None]
    zpf = np.array(model.zpf)[None, :, None]
    q = (records.positions - r0) / zpf
    f, P = signal.welch(q, fs=fs, window=window, nperseg=segment_length,
                        noverlap=int(overlap * segment_length), return_onesided=False,
                        scaling="density", axis=-1, detrend="constant")
    order = np.argsort(f)
    f = f[order]
    P = P[..., order]
    n_traj = q.shape[0]
    mean = P.mean(axis=0)
    n_seg = 1 + (n_samples - segment_length) // (segment_length - int(overlap * segment_length))
    if n_traj > 1:
        err = P.std(axis=0, ddof=1) / np.sqrt(n_traj)
    else:
        err = mean / np.sqrt(n_seg)
    grid = FrequencyGrid(2 * np.pi * f)
    sym = {ax: 0.5 * (mean[i] + mean[i][::-1]) if grid.is_symmetric() else mean[i]
           for i, ax in enumerate(AXES)}
    unsym = {ax: mean[i] for i, ax in enumerate(AXES)}
    stderr = {ax: err[i] for i, ax in enumerate(AXES)}
    conv = dict(CONVENTION)
    conv.update({"estimator": "welch", "window": window, "overlap": overlap,
                 "segment_length": segment_length, "segments_per_trajectory": n_seg,
                 "trajectories": n_traj})
    return SpectrumSet(grid, unsym, sym, None, stderr, conv)


def expected_welch(model: LinearizedModel, sample_interval: float, segment_length: int = 4096,
                   window: str = "hann", temperature_scale: float = 1.0):
    """Mean of the Welch estimator for the linear classical (Brownian) model.

    Built from the exact autocovariance ``C(k dt) = row exp(A k dt) Sigma row^T``
    of the stationary linear process weighted by the window's lag product
    ``r(k) = sum_n w_n w_{n+k}``, so leakage and aliasing of the finite
    segment are reproduced exactly.  Peak positions and band powers of a
    simulated estimate can then be compared bin by bin.

    Returns
    -------
    omega : ndarray
        Sorted two-sided angular frequencies of the Welch bins.
    expected : ndarray
        (3, F) expected two-sided densities in zero-point units.
    """
    from scipy.linalg import expm

    nb = np.array(model.bath_occupancy) * temperature_scale
    system = lam.system_from_model(model, bath_model="brownian", bath=nb)
    drift = lam.build_drift(system)
    noise = drift.noise_full.copy()
    noise[:2, :] = 0.0
    noise[:, :2] = 0.0
    sigma = lam.lyapunov(lam.DriftMatrix(drift.A, drift.noise_diag, noise))
    step = expm(drift.A * sample_interval)
    N = segment_length
    rows = np.zeros((3, 8))
    for j in range(3):
        rows[j, 2 + 2 * j: 4 + 2 * j] = 1.0
    cov = np.empty((3, N))
    state = sigma.copy()
    for k in range(N):
        cov[:, k] = np.einsum("ji,ik,jk->j", rows, state, rows).real
        state = step @ state
    w = signal.get_window(window, N)
    lag = np.correlate(w, w, mode="full")[N - 1:]
    c = cov * lag
    P = (2 * np.fft.fft(c, axis=-1).real - c[:, :1]) * sample_interval / np.sum(w ** 2)
    f = np.fft.fftfreq(N, sample_interval)
    order = np.argsort(f)
    return 2 * np.pi * f[order], P[:, order]


def _peak_centres(w, s, prominence):
    """Peak indices, prominences and centres of local maxima of ``log10 s``.

    A centre is the mean frequency over the half-prominence contour of the
    peak, weighted by the excess of ``log10 s`` above that contour.
    """
    y = np.log10(np.clip(s, 1e-300, None))
    idx, props = signal.find_peaks(y, prominence=prominence)
    if idx.size == 0:
        return idx, props.get("prominences", np.array([])), np.array([])
    _, level, left, right = signal.peak_widths(y, idx, rel_height=0.5, prominence_data=(
        props["prominences"], props["left_bases"], props["right_bases"]))
    centres = []
    for k, lv, lo, hi in zip(idx, level, left, right):
        sl = slice(int(np.ceil(lo)), int(np.floor(hi)) + 1)
        excess = np.clip(y[sl] - lv, 0, None)
        centres.append(float(np.sum(w[sl] * excess) / np.sum(excess)) if excess.sum() > 0 else float(w[k]))
    return idx, props["prominences"], np.array(centres)


def compare_with_linear(estimate: SpectrumSet, model: LinearizedModel, sample_interval: float,
                        band=None, prominence: float | None = None, temperature_scale: float = 1.0) -> dict:
    """Peak structure and band power of a simulated PSD against the linear model.

    Peaks are local maxima of ``log10 S`` inside the band, located by the
    weighted centre of their half-prominence contour.  The prominence
    threshold defaults to ten times the statistical scatter of
    ``log10 S`` (from the estimate's standard errors), with a floor of 0.15
    decades.  Band power is the two-sided integral over ``band`` and its
    mirror image.

    Returns
    -------
    dict
        Per axis: ``ratio`` (simulated / expected power), ``ratio_stderr``,
        ``peaks_sim``, ``peaks_ref`` (rad/s), their ``prominence_sim`` and
        ``prominence_ref`` (decades), ``threshold`` and ``resolution`` (bin
        width, rad/s).
    """
    seg = int(estimate.convention.get("segment_length", len(estimate.grid)))
    w_ref, P_ref = expected_welch(model, sample_interval, seg,
                                  estimate.convention.get("window", "hann"), temperature_scale)
    w = estimate.grid.points
    if not np.allclose(w, w_ref, rtol=1e-9, atol=1e-9 * np.max(np.abs(w))):
        raise ConfigError("estimate grid does not match the Welch bins of the model reference")
    if band is None:
        band = (0.25 * min(model.omega), 1.5 * max(model.omega))
    lo, hi = band
    sel = (np.abs(w) >= lo) & (np.abs(w) <= hi)
    pos = (w >= lo) & (w <= hi)
    dw = w[1] - w[0]
    out = {}
    for i, ax in enumerate(AXES):
        sim = estimate.symmetrized[ax]
        ref = 0.5 * (P_ref[i] + P_ref[i][::-1]) if estimate.grid.is_symmetric() else P_ref[i]
        p_sim = sim[sel].sum() * dw / (2 * np.pi)
        p_ref = ref[sel].sum() * dw / (2 * np.pi)
        err = np.sqrt(np.sum(estimate.stderr[ax][sel] ** 2)) * dw / (2 * np.pi)
        thr = prominence
        if thr is None:
            scatter = np.median(estimate.stderr[ax][pos] / sim[pos]) / np.log(10)
            thr = max(0.15, 10 * scatter)
        entry = {"ratio": p_sim / p_ref, "ratio_stderr": err / p_ref, "power_sim": p_sim,
                 "power_ref": p_ref, "threshold": thr, "resolution": dw}
        for name, arr in (("sim", sim), ("ref", ref)):
            _, prom, centres = _peak_centres(w[pos], arr[pos], 0.5 * thr)
            entry[f"peaks_{name}"] = centres
            entry[f"prominence_{name}"] = prom
        out[ax] = entry
    return out


def peaks_match(result: dict, tolerance_bins: float = 1.0) -> bool:
    """Whether simulated and reference peaks correspond one to one, per axis.

    Every peak above the threshold on either side must have a partner on
    the other side (above half the threshold, to avoid flicker at the
    cut) within ``tolerance_bins`` bins.
    """
    for entry in result.values():
        tol = tolerance_bins * entry["resolution"] * (1 + 1e-9)
        thr = entry["threshold"]
        for a, b, pa in (("sim", "ref", "prominence_sim"), ("ref", "sim", "prominence_ref")):
            strong = entry[f"peaks_{a}"][entry[pa] >= thr]
            other = entry[f"peaks_{b}"]
            for p in strong:
                if other.size == 0 or np.min(np.abs(other - p)) > tol:
                    return False
    return True
