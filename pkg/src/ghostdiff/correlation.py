"""Ghost pattern: idler-diffracted cross-correlation, g1, and signal intensity."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .diffraction import Aperture, DiffractionKernel, NSlit, check_same_grid
from .exceptions import DarkModeError, GhostDiffError, SweepOutOfBandError
from .modes import DetectorMap, SourceSpectrum, position_to_kx
from .optics import BeamSplitter, signal_convolution

CSV_HEADER = ("x_m", "k_x", "g1_re", "g1_im", "g1_abs", "g1_approx", "signal_intensity")


@dataclass(frozen=True, eq=False)
class GhostSetup:
    """Everything needed to evaluate the ghost pattern.

    ``fixed_signal_mode_k0`` is the diffracted mode seen by the fibre tip fixed
    on the axis of L2. ``aperture`` is optional and only used for the
    closed-form comparison shape.
    """

    spectrum: SourceSpectrum
    bs: BeamSplitter
    kernel: DiffractionKernel
    detector: DetectorMap
    fixed_signal_mode_k0: float = 0.0
    aperture: Optional[Aperture] = None

    def __post_init__(self):
        grid = check_same_grid(self.spectrum, self.kernel)
        if not math.isclose(self.detector.optical_wavelength, grid.optical_wavelength,
                            rel_tol=1e-12):
            raise GhostDiffError("detector and mode grid disagree on the optical wavelength")
        grid.index_of(self.fixed_signal_mode_k0)

    @property
    def grid(self):
        return self.spectrum.grid

    @property
    def i0(self) -> int:
        return self.grid.index_of(self.fixed_signal_mode_k0)

    @property
    def detector_mode_weight(self) -> float:
        """sum_k <N_k> |f(k0' - k)|^2, the denominator under the square root of g1."""
        n = self.spectrum.mean_photons
        f = self.kernel.at(self.i0, np.arange(self.grid.count))
        return float(np.sum(n * np.abs(f) ** 2))


def cross_correlation(setup: GhostSetup, k: float) -> complex:
    """<c_k^dag d_k0'> = r t sqrt(lambda_t) <N_k> f(k0' - k)."""
    i = setup.grid.index_of(k)
    bs, lam = setup.bs, setup.kernel.transmissivity_lambda_t
    n = setup.spectrum.mean_photons[i]
    return complex(bs.r * bs.t * math.sqrt(lam) * n * setup.kernel.at(setup.i0, i))


def _g1_at_indices(setup: GhostSetup, idx: np.ndarray, weight: float) -> np.ndarray:
    n = setup.spectrum.mean_photons[idx]
    if np.any(n == 0):
        bad = setup.grid.kx[idx[np.argmax(n == 0)]]
        raise DarkModeError(f"idler mode k = {bad:.6g} rad/m")
    return np.sqrt(n) * setup.kernel.at(setup.i0, idx) / math.sqrt(weight)


def _checked_weight(setup: GhostSetup) -> float:
    w = setup.detector_mode_weight
    if w <= 0:
        raise DarkModeError(f"diffracted mode k0' = {setup.fixed_signal_mode_k0:.6g} rad/m")
    return w


def g1(setup: GhostSetup, k: float) -> complex:
    """First-order degree of correlation between c_k and d_k0'.

    r, t and lambda_t cancel, so they are never used here.
    """
    i = setup.grid.index_of(k)
    return complex(_g1_at_indices(setup, np.array([i]), _checked_weight(setup))[0])


def g1_vector(setup: GhostSetup) -> np.ndarray:
    """g1 on every grid mode (modes with no light give 0)."""
    weight = _checked_weight(setup)
    idx = np.arange(setup.grid.count)
    n = setup.spectrum.mean_photons
    return np.sqrt(n) * setup.kernel.at(setup.i0, idx) / math.sqrt(weight)


def signal_intensity(setup: GhostSetup, k_prime: float) -> float:
    """<d_k'^dag d_k'> = r^2 lambda_t sum_k <N_k> |f(k' - k)|^2."""
    i = setup.grid.index_of(k_prime)
    return float(signal_intensity_profile(setup)[i])


def signal_intensity_profile(setup: GhostSetup) -> np.ndarray:
    scale = setup.bs.r**2 * setup.kernel.transmissivity_lambda_t
    return scale * signal_convolution(setup.spectrum, setup.kernel)


def printed_pattern(kappa, aperture: NSlit) -> np.ndarray:
    """Closed-form N-slit ghost pattern, normalised to unit peak.

    sinc(kappa a / 2) * sin(N kappa d / 2) / (N kappa d / 2). With one slit the
    grating factor is dropped.
    """
    kappa = np.asarray(kappa, dtype=float)
    out = np.sinc(kappa * aperture.slit_width / (2 * math.pi))
    if aperture.n_slits > 1:
        phi = 0.5 * kappa * aperture.slit_separation
        n = aperture.n_slits
        safe = np.where(phi == 0, 1.0, phi)
        out = out * np.where(phi == 0, 1.0, np.sin(n * phi) / (n * safe))
    return out


def approximate_pattern(setup: GhostSetup, idx: np.ndarray) -> np.ndarray:
    """Broad-source approximation of g1 at grid indices, unit peak."""
    kappa = setup.fixed_signal_mode_k0 - setup.grid.kx[idx]
    if isinstance(setup.aperture, NSlit):
        return printed_pattern(kappa, setup.aperture)
    # no closed form for masks: use |f(k0' - k)| itself
    f = np.abs(setup.kernel.values)
    return np.abs(setup.kernel.at(setup.i0, idx)) / f.max()


def approximation_quality(setup: GhostSetup) -> float:
    """Source FWHM over kernel main-lobe FWHM (both in k_x)."""
    return setup.spectrum.fwhm / setup.kernel.main_lobe_fwhm


@dataclass(frozen=True, eq=False)
class CorrelationPattern:
    positions_x: np.ndarray
    kx: np.ndarray
    g1: np.ndarray
    g1_approx: np.ndarray
    signal_intensity: np.ndarray
    approximation_quality: float
    max_snap_error: float
    g1_peak: complex
    x_per_k: float

    def __post_init__(self):
        n = len(self.positions_x)
        for name in ("kx", "g1", "g1_approx", "signal_intensity"):
            if len(getattr(self, name)) != n:
                raise GhostDiffError(f"pattern field {name} has the wrong length")

    @property
    def g1_abs(self) -> np.ndarray:
        return np.abs(self.g1)

    @property
    def g1_shape(self) -> np.ndarray:
        """|g1| relative to its value at k = k0' (the zero-offset peak)."""
        return self.g1_abs / abs(self.g1_peak)

    def approximation_gap(self) -> float:
        """sup |g1 shape - |g1_approx||."""
        return float(np.max(np.abs(self.g1_shape - np.abs(self.g1_approx))))

    def rows(self):
        for i in range(len(self.positions_x)):
            g = self.g1[i]
            yield (self.positions_x[i], self.kx[i], g.real, g.imag, abs(g),
                   self.g1_approx[i], self.signal_intensity[i])

    def to_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in self.rows():
            w.writerow([repr(float(v)) for v in row])

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()

    def minima_positions(self) -> np.ndarray:
        """Detector positions of local minima of |g1| over the distinct swept modes."""
        k, first = np.unique(self.kx, return_index=True)
        a = self.g1_abs[first]
        inner = (a[1:-1] < a[:-2]) & (a[1:-1] <= a[2:])
        return self.positions_of(k[1:-1][inner])

    def positions_of(self, kx) -> np.ndarray:
        return np.asarray(kx) * self.x_per_k

    def first_zero(self) -> float:
        m = self.minima_positions()
        pos = m[m > 0]
        return float(pos.min()) if pos.size else math.nan

    def fringe_spacing(self) -> float:
        m = np.sort(self.minima_positions())
        if m.size < 2:
            return math.nan
        return float(np.median(np.diff(m)))


def sweep_pattern(setup: GhostSetup, x_min: float, x_max: float, n_points: int,
                  n_workers: int = 1) -> CorrelationPattern:
    """Scan the idler fibre tip over [x_min, x_max] at the focal plane of L3.

    Each position is snapped to the nearest grid mode; the result keeps input
    order regardless of ``n_workers``.
    """
    if int(n_points) != n_points or n_points < 2:
        raise GhostDiffError(f"n_points must be an integer >= 2, got {n_points}")
    if not x_max > x_min:
        raise GhostDiffError("x_max must exceed x_min")
    grid = setup.grid
    xs = np.linspace(x_min, x_max, int(n_points))
    kx = position_to_kx(setup.detector, xs)
    edge = grid.k_max * (1 + 1e-12)
    worst = kx[np.argmax(np.abs(kx))]
    if abs(worst) > edge:
        raise SweepOutOfBandError(worst, grid.k_max)
    idx = np.clip(grid.nearest_index(kx), 0, grid.count - 1)
    weight = _checked_weight(setup)
    intensity = signal_intensity_profile(setup)

    def work(sl):
        return _g1_at_indices(setup, idx[sl], weight)

    if n_workers > 1:
        bounds = np.linspace(0, idx.size, n_workers + 1).astype(int)
        slices = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
        with ThreadPoolExecutor(n_workers) as pool:
            g = np.concatenate(list(pool.map(work, slices)))
    else:
        g = work(slice(None))

    k_snap = grid.kx[idx]
    peak = _g1_at_indices(setup, np.array([setup.i0]), weight)[0]
    pattern = CorrelationPattern(
        positions_x=xs,
        kx=k_snap,
        g1=g,
        g1_approx=approximate_pattern(setup, idx),
        signal_intensity=intensity[idx],
        approximation_quality=approximation_quality(setup),
        max_snap_error=float(np.max(np.abs(kx - k_snap))),
        g1_peak=complex(peak),
        x_per_k=1.0 / setup.detector.scale,
    )
    return pattern
