"""Beam splitter and normal characteristic functions of the thermal network.

The splitter acts on each mode as

    b_k =  r a_k + t a'_k        (signal)
    c_k = -t a_k + r a'_k        (idler)

with r, t real and r^2 + t^2 = 1. The ancilla a'_k is vacuum, whose normally
ordered characteristic function is identically 1, so it never appears below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffraction import DiffractionKernel, check_same_grid
from .exceptions import GhostDiffError
from .modes import SourceSpectrum

# Literal propagation of c = -t a gives <c^dag d> = -r t sqrt(lam) N f; the printed
# closed form drops the sign. |g1| does not depend on this phase.
IDLER_PHASE = -1.0


@dataclass(frozen=True)
class BeamSplitter:
    r: float
    t: float

    def __post_init__(self):
        if not (0 < self.r < 1 and 0 < self.t < 1):
            raise GhostDiffError(f"r and t must lie in (0, 1), got r={self.r}, t={self.t}")
        if abs(self.r**2 + self.t**2 - 1.0) > 1e-12:
            raise GhostDiffError(f"r^2 + t^2 must equal 1, got {self.r**2 + self.t**2!r}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.r, self.t], [-self.t, self.r]])


def make_beam_splitter(r: float) -> BeamSplitter:
    r = float(r)
    if not 0 < r < 1:
        raise GhostDiffError(f"reflectivity amplitude r must lie in (0, 1), got {r}")
    return BeamSplitter(r, math.sqrt(1.0 - r * r))


@dataclass(frozen=True, eq=False)
class ChiArgument:
    xi1: np.ndarray
    xi2: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.xi1, dtype=complex)
        b = np.asarray(self.xi2, dtype=complex)
        if a.ndim != 1 or a.shape != b.shape:
            raise GhostDiffError("xi1 and xi2 must be 1-D vectors of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise GhostDiffError("characteristic-function arguments must be finite")
        object.__setattr__(self, "xi1", a)
        object.__setattr__(self, "xi2", b)

    @classmethod
    def zeros(cls, m: int) -> "ChiArgument":
        return cls(np.zeros(m, complex), np.zeros(m, complex))


def _check_len(v: np.ndarray, m: int) -> None:
    if v.shape != (m,):
        raise GhostDiffError(f"argument length {v.shape} does not match grid size {m}")


def chi_thermal(spectrum: SourceSpectrum, xi) -> complex:
    """Normal characteristic function of independent thermal modes."""
    xi = np.asarray(xi, dtype=complex)
    _check_len(xi, spectrum.grid.count)
    return complex(math.exp(-float(np.sum(np.abs(xi) ** 2 * spectrum.mean_photons))))


def chi_output(bs: BeamSplitter, spectrum: SourceSpectrum, arg: ChiArgument) -> complex:
    """Joint characteristic function of the signal and idler outputs."""
    _check_len(arg.xi1, spectrum.grid.count)
    _check_len(arg.xi2, spectrum.grid.count)
    u = bs.r * arg.xi1 - bs.t * arg.xi2
    return complex(math.exp(-float(np.sum(spectrum.mean_photons * np.abs(u) ** 2))))


def diffraction_substitution(kernel: DiffractionKernel, xi) -> np.ndarray:
    """Map diffracted-mode variables to signal-mode variables.

    Returns sqrt(lambda_t) * sum_{k'} xi_{k'} f(k' - k) for every k.
    """
    m = kernel.grid.count
    xi = np.asarray(xi, dtype=complex)
    _check_len(xi, m)
    full = np.convolve(xi, kernel.values[::-1])
    return math.sqrt(kernel.transmissivity_lambda_t) * full[m - 1 : 2 * m - 1]


def chi_diffracted_joint(
    bs: BeamSplitter, spectrum: SourceSpectrum, kernel: DiffractionKernel, arg: ChiArgument
) -> complex:
    """Joint characteristic function of diffracted modes (xi1) and idler modes (xi2)."""
    check_same_grid(spectrum, kernel)
    _check_len(arg.xi2, spectrum.grid.count)
    u = bs.r * diffraction_substitution(kernel, arg.xi1) - bs.t * arg.xi2
    return complex(math.exp(-float(np.sum(spectrum.mean_photons * np.abs(u) ** 2))))


@dataclass(frozen=True, eq=False)
class JointMomentTable:
    """Second moments of the idler (c) and diffracted (d) modes.

    ``cd[k, k']`` holds <c_k^dag d_k'>.
    """

    cc: np.ndarray
    dd: np.ndarray
    cd: np.ndarray

    def cauchy_schwarz_excess(self) -> float:
        """Largest relative violation of |cd|^2 <= cc dd (<= 0 when satisfied)."""
        bound = np.outer(self.cc, self.dd)
        lhs = np.abs(self.cd) ** 2
        scale = np.where(bound > 0, bound, 1.0)
        return float(np.max((lhs - bound) / scale))


def signal_convolution(spectrum: SourceSpectrum, kernel: DiffractionKernel) -> np.ndarray:
    """sum_k <N_k> |f(k' - k)|^2 for every k' (exact direct sum)."""
    m = spectrum.grid.count
    full = np.convolve(spectrum.mean_photons, np.abs(kernel.values) ** 2)
    return full[m - 1 : 2 * m - 1]


def analytic_moments(
    bs: BeamSplitter, spectrum: SourceSpectrum, kernel: DiffractionKernel
) -> JointMomentTable:
    check_same_grid(spectrum, kernel)
    n = spectrum.mean_photons
    lam = kernel.transmissivity_lambda_t
    cc = bs.t**2 * n
    dd = bs.r**2 * lam * signal_convolution(spectrum, kernel)
    cd = (bs.r * bs.t * math.sqrt(lam)) * n[:, None] * kernel.matrix.T
    return JointMomentTable(cc, dd, cd)

