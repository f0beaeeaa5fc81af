"""Frequency grids and spectrum containers shared by all spectral engines.

Conventions
-----------
Spectra are two-sided in angular frequency, ``S(w) = <X(w) X(w)^dag>`` with
``X(w) = int exp(i w t) X(t) dt``.  For a mechanical mode the positive-
frequency sideband (phonon emission into the bath picture of ``b``) carries
area ``n + 1`` and the negative one carries ``n``.  The symmetrized spectrum
``Sbar(w) = (S(w) + S(-w)) / 2`` obeys

    int Sbar_qq(w) dw / 2pi = <q^2> = 2 n + 1

for ``q = b + b^dag`` (displacement in zero-point units).  Output-field
quadratures are in shot-noise units (vacuum level 1).  One-sided reporting
uses ``2 Sbar(w)`` for ``w >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

DEFAULT_POINTS = 2 ** 14

CONVENTION = {
    "sidedness": "two-sided internal, one-sided reporting (2*Sbar, w >= 0)",
    "symmetrization": "Sbar(w) = (S(w) + S(-w))/2",
    "normalization": "int Sbar_qq dw/2pi = 2n+1 (zpf units); output quadratures in shot-noise units",
    "frequency": "angular, rad/s",
}


class FrequencyGrid:
    """Strictly increasing signed angular frequencies (rad/s)."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float).ravel()
        if pts.size < 2:
            raise ConfigError("a frequency grid needs at least two points")
        if not np.all(np.isfinite(pts)) or np.any(np.diff(pts) <= 0):
            raise ConfigError("frequency grid must be finite and strictly increasing")
        self.points = pts
        self.points.setflags(write=False)

    def __len__(self):
        return self.points.size

    def __repr__(self):
        return f"FrequencyGrid(n={len(self)}, [{self.points[0]:.4g}, {self.points[-1]:.4g}])"

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int = DEFAULT_POINTS) -> "FrequencyGrid":
        return cls(np.linspace(lo, hi, n))

    @classmethod
    def default(cls, model, n: int = DEFAULT_POINTS) -> "FrequencyGrid":
        """Symmetric grid over +-1.5 max(omega_j, |Delta|)."""
        span = 1.5 * max(max(model.omega), abs(model.detuning_eff))
        return cls(np.linspace(-span, span, n))

    @classmethod
    def adaptive(cls, poles, background: float, per_decade: int = 60, n_background: int = 2001,
                 clip: float = 1e-4) -> "FrequencyGrid":
        """Grid that resolves Lorentzian features and the far tails.

        Around each pole ``p = -gamma/2 - i w_p`` (a drift-matrix eigenvalue)
        points are placed at ``w_p +- d`` with ``d`` log-spaced from
        ``1e-3 gamma/2`` out to ``10 background``; a global map
        ``background * tan(u)`` covers the real line up to
        ``background / clip``.  The grid is symmetrized about zero so that
        both sidebands of every feature are present.
        """
        u = np.linspace(-np.pi / 2 + clip, np.pi / 2 - clip, n_background)
        pts = [background * np.tan(u)]
        for p in np.atleast_1d(poles):
            half = max(-p.real, 1e-300)
            lo, hi = np.log10(1e-3 * half), np.log10(10 * background)
            if hi <= lo:
                continue
            d = np.logspace(lo, hi, max(int((hi - lo) * per_decade), 2))
            centre = -p.imag
            pts.append(np.concatenate([centre - d, [centre], centre + d]))
        allp = np.concatenate(pts)
        allp = np.concatenate([allp, -allp])
        allp = np.unique(np.round(allp, 9))
        return cls(allp)

    @classmethod
    def for_model(cls, model, **kwargs) -> "FrequencyGrid":
        """Adaptive grid built from the model's drift-matrix eigenvalues."""
        from .lam import build_drift, system_from_model
        poles = [build_drift(system_from_model(model)).eigenvalues]
        # single-axis subsystems, so that 1D spectra are resolved as well
        for j in range(3):
            g = [0j, 0j, 0j]
            g[j] = model.g[j]
            sub = model.replace(g=tuple(g), g_direct=(0.0, 0.0, 0.0))
            poles.append(build_drift(system_from_model(sub)).eigenvalues)
        poles = np.unique(np.round(np.concatenate(poles), 6))
        scale = max(max(model.omega), abs(model.detuning_eff), model.kappa)
        return cls.adaptive(poles, scale, **kwargs)

    def integrate(self, values, axis: int = -1):
        """Trapezoidal ``int values dw / 2pi``."""
        return np.trapezoid(values, self.points, axis=axis) / (2 * np.pi)

    def covers_both_sidebands(self, omega: float) -> bool:
        return self.points[0] <= -abs(omega) and self.points[-1] >= abs(omega)

    def is_symmetric(self, rtol: float = 1e-12) -> bool:
        p = self.points
        return bool(np.allclose(p, -p[::-1], rtol=rtol, atol=rtol * np.max(np.abs(p))))


@dataclass
class SpectrumSet:
    """Per-observable spectra on a common grid.

    Attributes
    ----------
    grid : FrequencyGrid
    unsymmetrized : dict
        Two-sided ``S(w)``; real and non-negative for single observables.
    symmetrized : dict
        ``Sbar(w) = (S(w) + S(-w)) / 2``.
    cross : ndarray or None
        Unsymmetrized cross-spectral matrix of the displacements
        (shape ``(F, 3, 3)``), Hermitian at each frequency.
    stderr : dict
        Optional standard errors (estimated spectra only).
    """

    grid: FrequencyGrid
    unsymmetrized: dict
    symmetrized: dict
    cross: np.ndarray | None = None
    stderr: dict = field(default_factory=dict)
    convention: dict = field(default_factory=lambda: dict(CONVENTION))

    @property
    def labels(self):
        return tuple(self.symmetrized)

    def __getitem__(self, label):
        return self.symmetrized[label]

    def area(self, label: str) -> float:
        """``int Sbar dw / 2pi``."""
        return float(self.grid.integrate(self.symmetrized[label]))

    def sideband_areas(self, label: str):
        """(negative-frequency, positive-frequency) areas of the unsymmetrized spectrum."""
        w = self.grid.points
        s = self.unsymmetrized[label]
        neg = w <= 0
        pos = w >= 0
        return (float(np.trapezoid(s[neg], w[neg]) / (2 * np.pi)),
                float(np.trapezoid(s[pos], w[pos]) / (2 * np.pi)))

    def one_sided(self, label: str):
        """Frequencies w >= 0 and the one-sided PSD 2 Sbar(w)."""
        w = self.grid.points
        sel = w >= 0
        return w[sel], 2 * self.symmetrized[label][sel]


def spectra_from_channels(coeff, weights) -> np.ndarray:
    """Cross-spectral matrix ``K diag(w) K^dag`` from channel coefficients.

    ``coeff`` has shape (F, n_obs, n_channels); ``weights`` (n_channels,).
    """
    return np.einsum("foc,c,fpc->fop", coeff, weights, coeff.conj())


def build_spectrum_set(grid: FrequencyGrid, evaluate, labels, cross_labels=()) -> SpectrumSet:
    """Assemble a SpectrumSet from an evaluator of the cross-spectral matrix.

    ``evaluate(w)`` must return the (F, n_obs, n_obs) cross-spectral matrix
    for the observables ``labels`` at angular frequencies ``w``.
    """
    w = grid.points
    s_pos = evaluate(w)
    if grid.is_symmetric():
        s_neg = s_pos[::-1]
    else:
        s_neg = evaluate(-w)
    unsym, sym = {}, {}
    for i, label in enumerate(labels):
        a = s_pos[:, i, i].real
        b = s_neg[:, i, i].real
        unsym[label] = a
        sym[label] = 0.5 * (a + b)
    cross = None
    if cross_labels:
        idx = [labels.index(c) for c in cross_labels]
        cross = s_pos[:, idx][:, :, idx]
    return SpectrumSet(grid, unsym, sym, cross)
