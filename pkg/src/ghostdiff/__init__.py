"""Ghost interference-diffraction with thermal light and a beam splitter."""
from .correlation import (CorrelationPattern, GhostSetup, cross_correlation, g1, g1_vector,
                          signal_intensity, signal_intensity_profile, sweep_pattern)
from .diffraction import (DiffractionKernel, Mask, NSlit, build_kernel, kernel_nslit,
                          kernel_quadrature, normalize_kernel, read_mask, transmissivity)
from .estimator import GhostPatternEstimator
from .exceptions import (DarkModeError, GhostDiffError, GridMismatchError, OffGridError,
                         SweepOutOfBandError, UnresolvedKernelError)
from .modes import (DetectorMap, ModeGrid, SourceSpectrum, build_grid, flat_spectrum,
                    gaussian_spectrum, position_to_kx, single_mode_spectrum)
from .optics import (BeamSplitter, ChiArgument, JointMomentTable, analytic_moments, chi_diffracted_joint,
                     chi_output, chi_thermal, make_beam_splitter)
from .oracle import (estimate_cross_correlation, exact_moments_by_matrix, monte_carlo_moments,
                     propagate, sample_thermal_field)

__version__ = "0.1.0"

__all__ = [
    "BeamSplitter",
    "ChiArgument",
    "CorrelationPattern",
    "DarkModeError",
    "DetectorMap",
    "DiffractionKernel",
    "GhostDiffError",
    "GhostPatternEstimator",
    "GhostSetup",
    "GridMismatchError",
    "JointMomentTable",
    "Mask",
    "ModeGrid",
    "NSlit",
    "OffGridError",
    "SourceSpectrum",
    "SweepOutOfBandError",
    "UnresolvedKernelError",
    "analytic_moments",
    "build_grid",
    "build_kernel",
    "chi_diffracted_joint",
    "chi_output",
    "chi_thermal",
    "cross_correlation",
    "estimate_cross_correlation",
    "exact_moments_by_matrix",
    "flat_spectrum",
    "g1",
    "g1_vector",
    "gaussian_spectrum",
    "kernel_nslit",
    "kernel_quadrature",
    "make_beam_splitter",
    "monte_carlo_moments",
    "normalize_kernel",
    "position_to_kx",
    "propagate",
    "read_mask",
    "sample_thermal_field",
    "signal_intensity",
    "signal_intensity_profile",
    "single_mode_spectrum",
    "sweep_pattern",
    "transmissivity",
]
