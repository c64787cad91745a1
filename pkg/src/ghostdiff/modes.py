"""Transverse-wavevector mode grid, source spectra and the detector-plane map.

Everything is 1-D along k_x (k_y = 0). All lengths are SI.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .exceptions import GhostDiffError, OffGridError

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModeGrid:
    """Uniform k_x grid of odd size, symmetric about (and containing) zero.

    Attributes
    ----------
    k_max : float
        Half-extent of the k_x axis in rad/m.
    count : int
        Number of grid points M.
    optical_wavelength : float
        Vacuum wavelength in metres.
    """

    k_max: float
    count: int
    optical_wavelength: float

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 3 or self.count % 2 == 0:
            raise GhostDiffError(f"grid count must be an odd integer >= 3, got {self.count}")
        if not (self.k_max > 0 and math.isfinite(self.k_max)):
            raise GhostDiffError(f"k_max must be positive, got {self.k_max}")
        if not (self.optical_wavelength > 0 and math.isfinite(self.optical_wavelength)):
            raise GhostDiffError(
                f"optical_wavelength must be positive, got {self.optical_wavelength}"
            )
        if self.k_max >= self.k_total:
            raise GhostDiffError(
                f"k_max = {self.k_max:.6g} rad/m must be below the total wavevector "
                f"2*pi/lambda = {self.k_total:.6g} rad/m"
            )

    @property
    def k_total(self) -> float:
        return 2.0 * math.pi / self.optical_wavelength

    @property
    def spacing(self) -> float:
        return 2.0 * self.k_max / (self.count - 1)

    @property
    def center(self) -> int:
        return (self.count - 1) // 2

    @cached_property
    def kx(self) -> np.ndarray:
        # symmetric construction keeps kx[center] == 0 and kx[-i] == -kx[i] exactly
        return _readonly((np.arange(self.count) - self.center) * self.spacing)

    @cached_property
    def offsets(self) -> np.ndarray:
        """Wavevector offsets k' - k, length 2M - 1, centred on zero."""
        return _readonly((np.arange(2 * self.count - 1) - (self.count - 1)) * self.spacing)

    def index_of(self, k: float) -> int:
        """Index of grid point ``k``; raises :class:`OffGridError` if ``k`` is not on the grid."""
        pos = k / self.spacing + self.center
        i = int(round(pos))
        if not (0 <= i < self.count) or abs(pos - i) > 1e-9:
            raise OffGridError(f"k = {k!r} rad/m is not a grid point")
        return i

    def nearest_index(self, k):
        """Nearest grid index for scalar or array ``k`` (no range check)."""
        idx = np.rint(np.asarray(k, dtype=float) / self.spacing) + self.center
        return idx.astype(int)


def build_grid(k_max: float, count: int, optical_wavelength: float) -> ModeGrid:
    return ModeGrid(float(k_max), int(count), float(optical_wavelength))


@dataclass(frozen=True, eq=False)
class SourceSpectrum:
    """Mean photon number per grid mode of the thermal source.

    ``nominal_fwhm`` is the analytic full width at half maximum in rad/m when
    the spectrum came from a parametric family; otherwise the width is
    measured from the samples.
    """

    grid: ModeGrid
    mean_photons: np.ndarray
    nominal_fwhm: Optional[float] = field(default=None)

    def __post_init__(self):
        n = np.array(self.mean_photons, dtype=float)
        if n.shape != (self.grid.count,):
            raise GhostDiffError(
                f"mean_photons must have shape ({self.grid.count},), got {n.shape}"
            )
        if not np.all(np.isfinite(n)) or np.any(n < 0):
            raise GhostDiffError("mean photon numbers must be finite and non-negative")
        if not np.any(n > 0):
            raise GhostDiffError("spectrum must have at least one mode with light")
        object.__setattr__(self, "mean_photons", _readonly(n))

    def scaled(self, gamma: float) -> "SourceSpectrum":
        return SourceSpectrum(self.grid, gamma * self.mean_photons, self.nominal_fwhm)

    @property
    def fwhm(self) -> float:
        if self.nominal_fwhm is not None:
            return self.nominal_fwhm
        return measure_fwhm(self.grid.kx, self.mean_photons)


def measure_fwhm(x: np.ndarray, y: np.ndarray) -> float:
    """FWHM of the lobe containing the maximum of ``y``, linearly interpolated.

    Returns ``inf`` when the profile does not fall to half maximum on one side.
    """
    y = np.asarray(y, dtype=float)
    i0 = int(np.argmax(y))
    half = 0.5 * y[i0]
    below = np.nonzero(y[i0:] < half)[0]
    above = np.nonzero(y[: i0 + 1][::-1] < half)[0]
    if below.size == 0 or above.size == 0:
        return math.inf
    j = i0 + below[0]
    right = x[j - 1] + (y[j - 1] - half) / (y[j - 1] - y[j]) * (x[j] - x[j - 1])
    j = i0 - above[0]
    left = x[j + 1] - (y[j + 1] - half) / (y[j + 1] - y[j]) * (x[j + 1] - x[j])
    return float(right - left)


def gaussian_spectrum(grid: ModeGrid, peak: float, sigma_k: float) -> SourceSpectrum:
    if not peak > 0 or not sigma_k > 0:
        raise GhostDiffError("gaussian spectrum needs peak > 0 and sigma_k > 0")
    n = peak * np.exp(-0.5 * (grid.kx / sigma_k) ** 2)
    return SourceSpectrum(grid, n, nominal_fwhm=FWHM_PER_SIGMA * sigma_k)


def flat_spectrum(grid: ModeGrid, level: float) -> SourceSpectrum:
    if not level > 0:
        raise GhostDiffError(f"flat spectrum level must be positive, got {level}")
    return SourceSpectrum(grid, np.full(grid.count, float(level)), nominal_fwhm=math.inf)


def single_mode_spectrum(grid: ModeGrid, k: float, level: float = 1.0) -> SourceSpectrum:
    """All light in the single grid mode ``k`` (the angularly narrow limit)."""
    n = np.zeros(grid.count)
    n[grid.index_of(k)] = level
    return SourceSpectrum(grid, n, nominal_fwhm=0.0)


@dataclass(frozen=True)
class DetectorMap:
    """Lens L3 maps focal-plane position x to k_x = 2*pi*x / (lambda * f3)."""

    focal_length_f3: float
    optical_wavelength: float

    def __post_init__(self):
        if not self.focal_length_f3 > 0:
            raise GhostDiffError(f"focal_length_f3 must be positive, got {self.focal_length_f3}")
        if not self.optical_wavelength > 0:
            raise GhostDiffError(
                f"optical_wavelength must be positive, got {self.optical_wavelength}"
            )

    @property
    def scale(self) -> float:
        """rad/m of k_x per metre of detector displacement."""
        return 2.0 * math.pi / (self.optical_wavelength * self.focal_length_f3)


def position_to_kx(dmap: DetectorMap, x):
    return dmap.scale * np.asarray(x, dtype=float) if np.ndim(x) else dmap.scale * float(x)


def kx_to_position(dmap: DetectorMap, kx):
    return np.asarray(kx, dtype=float) / dmap.scale if np.ndim(kx) else float(kx) / dmap.scale
