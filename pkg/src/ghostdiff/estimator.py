"""scikit-learn style facade over the ghost-pattern pipeline.

``fit`` takes the source spectrum <N_k> sampled on the mode grid; ``predict``
maps detector positions to complex g1 and ``transform`` to the real columns
(|g1|, g1_approx, signal_intensity).
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .correlation import (GhostSetup, approximate_pattern, approximation_quality,
                          signal_intensity_profile, _checked_weight, _g1_at_indices)
from .diffraction import NSlit, build_kernel
from .exceptions import GhostDiffError, SweepOutOfBandError
from .modes import DetectorMap, SourceSpectrum, build_grid, position_to_kx
from .optics import make_beam_splitter


def _as_vector(X, name):
    a = check_array(X, ensure_2d=False, dtype=float, input_name=name)
    if a.ndim == 2:
        if a.shape[1] != 1:
            raise ValueError(f"{name} must be a vector or a single-column array, got {a.shape}")
        a = a[:, 0]
    return a


class GhostPatternEstimator(TransformerMixin, BaseEstimator):
    def __init__(self, k_max=4e6, count=4097, optical_wavelength=500e-9, r=1 / math.sqrt(2),
                 n_slits=1, slit_width=10e-6, slit_separation=0.0, plane_extent=1e-3,
                 focal_length=0.5, k0=0.0):
        self.k_max = k_max
        self.count = count
        self.optical_wavelength = optical_wavelength
        self.r = r
        self.n_slits = n_slits
        self.slit_width = slit_width
        self.slit_separation = slit_separation
        self.plane_extent = plane_extent
        self.focal_length = focal_length
        self.k0 = k0

    def fit(self, X, y=None):
        """Fix the source spectrum; ``X`` holds <N_k> for each of the ``count`` modes."""
        n = _as_vector(X, "X")
        grid = build_grid(self.k_max, self.count, self.optical_wavelength)
        if n.size != grid.count:
            raise GhostDiffError(f"expected {grid.count} mean photon numbers, got {n.size}")
        aperture = NSlit(self.n_slits, self.slit_width, self.slit_separation)
        self.setup_ = GhostSetup(
            SourceSpectrum(grid, n),
            make_beam_splitter(self.r),
            build_kernel(grid, aperture, self.plane_extent),
            DetectorMap(self.focal_length, self.optical_wavelength),
            self.k0,
            aperture,
        )
        self.weight_ = _checked_weight(self.setup_)
        self.approximation_quality_ = approximation_quality(self.setup_)
        self.n_features_in_ = 1
        return self

    def _indices(self, X):
        check_is_fitted(self, "setup_")
        x = _as_vector(X, "X")
        kx = position_to_kx(self.setup_.detector, x)
        grid = self.setup_.grid
        if kx.size and np.max(np.abs(kx)) > grid.k_max * (1 + 1e-12):
            raise SweepOutOfBandError(kx[np.argmax(np.abs(kx))], grid.k_max)
        return grid.nearest_index(kx)

    def predict(self, X):
        """Complex g1 at detector positions ``X`` (metres), snapped to grid modes."""
        idx = self._indices(X)
        return _g1_at_indices(self.setup_, idx, self.weight_)

    def transform(self, X):
        idx = self._indices(X)
        g = _g1_at_indices(self.setup_, idx, self.weight_)
        intensity = signal_intensity_profile(self.setup_)[idx]
        return np.column_stack([np.abs(g), approximate_pattern(self.setup_, idx), intensity])
