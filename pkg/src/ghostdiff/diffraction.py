"""Apertures and the Fraunhofer diffraction factor f on the wavevector-offset grid.

f is sampled at the 2M - 1 offsets k' - k of a :class:`~ghostdiff.modes.ModeGrid`
and normalised so that sum |f|^2 = 1. The energy transmissivity lambda_t is
carried alongside, never folded into f.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Union

import numpy as np

from .exceptions import GhostDiffError, GridMismatchError, UnresolvedKernelError
from .modes import ModeGrid, measure_fwhm

# minimum number of grid samples across the first sinc lobe (0 .. 2*pi/a)
SAMPLES_PER_LOBE = 5
MIN_QUAD_POINTS = 64
_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class NSlit:
    """``n_slits`` slits of width ``slit_width`` at pitch ``slit_separation``.

    The slit array is centred on ``offset_x`` along the x axis.
    """

    n_slits: int
    slit_width: float
    slit_separation: float = 0.0
    offset_x: float = 0.0

    def __post_init__(self):
        if int(self.n_slits) != self.n_slits or self.n_slits < 1:
            raise GhostDiffError(f"n_slits must be a positive integer, got {self.n_slits}")
        if not self.slit_width > 0:
            raise GhostDiffError(f"slit_width must be positive, got {self.slit_width}")
        if self.n_slits > 1 and not self.slit_separation > self.slit_width:
            raise GhostDiffError(
                "slit_separation must exceed slit_width so slits do not overlap"
            )

    @property
    def open_length(self) -> float:
        return self.n_slits * self.slit_width

    @property
    def span(self) -> float:
        return (self.n_slits - 1) * self.slit_separation + self.slit_width

    @property
    def centers(self) -> np.ndarray:
        j = np.arange(self.n_slits) - 0.5 * (self.n_slits - 1)
        return self.offset_x + j * self.slit_separation

    def intervals(self):
        """(left edge, width, transverse weight) of each open interval."""
        return [(c - 0.5 * self.slit_width, self.slit_width, 1.0) for c in self.centers]

    @property
    def feature_width(self) -> float:
        return self.slit_width


@dataclass(frozen=True, eq=False)
class Mask:
    """Binary pixel mask; row 0 is the top (largest y), centred on the origin."""

    pixels: np.ndarray
    pixel_pitch: float

    def __post_init__(self):
        p = np.array(self.pixels, dtype=bool)
        if p.ndim != 2 or p.size == 0:
            raise GhostDiffError("mask pixels must be a non-empty 2-D array")
        if not p.any():
            raise GhostDiffError("mask has no open pixel")
        if not self.pixel_pitch > 0:
            raise GhostDiffError(f"pixel_pitch must be positive, got {self.pixel_pitch}")
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @property
    def open_area(self) -> float:
        return float(self.pixels.sum()) * self.pixel_pitch**2

    def _column_x(self) -> np.ndarray:
        ncols = self.pixels.shape[1]
        return (np.arange(ncols) - 0.5 * (ncols - 1)) * self.pixel_pitch

    def _row_y(self) -> np.ndarray:
        nrows = self.pixels.shape[0]
        return (0.5 * (nrows - 1) - np.arange(nrows)) * self.pixel_pitch

    def intervals(self):
        """Open x-intervals at k_y = 0, weighted by the open height of each column.

        Adjacent columns with equal open height are merged into one interval.
        """
        heights = self.pixels.sum(axis=0) * self.pixel_pitch
        xs = self._column_x()
        out = []
        j = 0
        n = heights.size
        while j < n:
            if heights[j] == 0:
                j += 1
                continue
            start = j
            while j + 1 < n and heights[j + 1] == heights[start]:
                j += 1
            left = xs[start] - 0.5 * self.pixel_pitch
            out.append((left, (j - start + 1) * self.pixel_pitch, float(heights[start])))
            j += 1
        return out

    @property
    def feature_width(self) -> float:
        """Widest contiguous open run along x in any row."""
        best = 0
        for row in self.pixels:
            run = 0
            for v in row:
                run = run + 1 if v else 0
                best = max(best, run)
        return best * self.pixel_pitch


Aperture = Union[NSlit, Mask]


def read_mask(path) -> Mask:
    """Read a mask file: a ``pitch=<meters>`` header then rows of '0'/'1'."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].strip().startswith("pitch="):
        raise GhostDiffError(f"{path}: first line must be 'pitch=<meters>'")
    try:
        pitch = float(lines[0].strip()[len("pitch="):])
    except ValueError:
        raise GhostDiffError(f"{path}: bad pitch value {lines[0]!r}") from None
    rows = [ln.strip() for ln in lines[1:] if ln.strip()]
    if not rows:
        raise GhostDiffError(f"{path}: no pixel rows")
    width = len(rows[0])
    for lineno, row in enumerate(rows, start=2):
        if len(row) != width:
            raise GhostDiffError(f"{path}:{lineno}: row length {len(row)} != {width}")
        if set(row) - {"0", "1"}:
            raise GhostDiffError(f"{path}:{lineno}: only '0' and '1' are allowed")
    pixels = np.array([[c == "1" for c in row] for row in rows], dtype=bool)
    return Mask(pixels, pitch)


def transmissivity(aperture: Aperture, plane_extent: float) -> float:
    """Energy transmissivity Sigma / S.

    For :class:`NSlit` the 1-D model uses lengths (Sigma = n * a, S = extent);
    for :class:`Mask` the plane is a square of side ``plane_extent``.
    """
    if not plane_extent > 0:
        raise GhostDiffError(f"plane_extent must be positive, got {plane_extent}")
    if isinstance(aperture, NSlit):
        if aperture.span > plane_extent * (1 + 1e-12):
            raise GhostDiffError(
                f"aperture span {aperture.span:.6g} m exceeds plane extent {plane_extent:.6g} m"
            )
        sigma, s = aperture.open_length, plane_extent
    else:
        sigma, s = aperture.open_area, plane_extent**2
    if sigma > s * (1 + 1e-12):
        raise GhostDiffError(f"open area {sigma:.6g} exceeds plane area {s:.6g}")
    return min(sigma / s, 1.0)


def normalize_kernel(values) -> np.ndarray:
    v = np.asarray(values, dtype=complex)
    norm = math.sqrt(float(np.sum(v.real**2 + v.imag**2)))
    if norm == 0.0:
        raise GhostDiffError("cannot normalise an all-zero kernel")
    return v / norm


@dataclass(frozen=True, eq=False)
class DiffractionKernel:
    grid: ModeGrid
    values: np.ndarray
    transmissivity_lambda_t: float

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (2 * self.grid.count - 1,):
            raise GhostDiffError(
                f"kernel needs {2 * self.grid.count - 1} offset samples, got {v.shape}"
            )
        lam = self.transmissivity_lambda_t
        if not (0 < lam <= 1):
            raise GhostDiffError(f"transmissivity must lie in (0, 1], got {lam}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def offsets(self) -> np.ndarray:
        return self.grid.offsets

    def at(self, i_prime, i):
        """f(k'_{i_prime} - k_i) for grid indices (broadcasting)."""
        return self.values[np.asarray(i_prime) - np.asarray(i) + self.grid.count - 1]

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense M x M matrix F[k', k] = f(k' - k)."""
        m = self.grid.count
        idx = np.arange(m)
        out = self.values[idx[:, None] - idx[None, :] + m - 1]
        out.setflags(write=False)
        return out

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))

    @cached_property
    def main_lobe_fwhm(self) -> float:
        """FWHM in rad/m of the |f|^2 lobe containing its maximum."""
        return measure_fwhm(self.offsets, np.abs(self.values) ** 2)

    def check_grid(self, grid: ModeGrid) -> None:
        if grid != self.grid:
            raise GridMismatchError("kernel and spectrum are defined on different grids")


def _check_resolved(grid: ModeGrid, feature_width: float) -> None:
    limit = 2.0 * math.pi / (SAMPLES_PER_LOBE * feature_width)
    if grid.spacing > limit:
        raise UnresolvedKernelError(grid.spacing, limit)


def _sinc_half(kappa, width):
    # sin(k w / 2) / (k w / 2), with the limit 1 at k = 0
    return np.sinc(kappa * width / (2.0 * math.pi))


def grating_factor(phi, n: int):
    """sin(n phi) / sin(phi), taking the limit where sin(phi) vanishes."""
    phi = np.asarray(phi, dtype=float)
    if n == 1:
        return np.ones_like(phi)
    s = np.sin(phi)
    m = np.rint(phi / math.pi)
    near = np.abs(phi - m * math.pi) < 1e-8
    limit = n * np.where(((n - 1) * m) % 2 == 0, 1.0, -1.0)
    safe = np.where(near, 1.0, s)
    return np.where(near, limit, np.sin(n * phi) / safe)


def nslit_amplitude(kappa, aperture: NSlit) -> np.ndarray:
    """Unnormalised Fraunhofer integral of an N-slit in closed form."""
    kappa = np.asarray(kappa, dtype=float)
    amp = aperture.slit_width * _sinc_half(kappa, aperture.slit_width)
    amp = amp * grating_factor(0.5 * kappa * aperture.slit_separation, aperture.n_slits)
    if aperture.offset_x:
        return amp * np.exp(-1j * kappa * aperture.offset_x)
    return amp.astype(complex)


def kernel_nslit(grid: ModeGrid, aperture: NSlit, lambda_t: float) -> DiffractionKernel:
    _check_resolved(grid, aperture.slit_width)
    values = normalize_kernel(nslit_amplitude(grid.offsets, aperture))
    return DiffractionKernel(grid, values, lambda_t)


def _midpoint_nodes(aperture: Aperture, quad_points: int):
    xs, ws = [], []
    for left, width, weight in aperture.intervals():
        h = width / quad_points
        xs.append(left + h * (np.arange(quad_points) + 0.5))
        ws.append(np.full(quad_points, h * weight))
    return np.concatenate(xs), np.concatenate(ws)


def _exp_sum(kappa: np.ndarray, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """sum_n w_n exp(-i kappa x_n), chunked over kappa."""
    out = np.empty(kappa.size, dtype=complex)
    step = max(1, _CHUNK_ELEMENTS // max(1, x.size))
    for s in range(0, kappa.size, step):
        k = kappa[s : s + step]
        out[s : s + step] = np.exp(-1j * np.outer(k, x)) @ w
    return out


def fraunhofer_integral(aperture: Aperture, kx, quad_points: int = 2048) -> np.ndarray:
    """Midpoint-rule Fraunhofer integral at (k_x, k_y = 0)."""
    if quad_points < MIN_QUAD_POINTS:
        raise GhostDiffError(f"quad_points must be >= {MIN_QUAD_POINTS}, got {quad_points}")
    x, w = _midpoint_nodes(aperture, quad_points)
    return _exp_sum(np.atleast_1d(np.asarray(kx, dtype=float)), x, w)


def fraunhofer_integral_2d(aperture: Aperture, kx, ky, quad_points: int = 256) -> np.ndarray:
    """Midpoint-rule integral of exp(-i(k_x x + k_y y)) over the open area.

    ``kx`` and ``ky`` broadcast against each other. Each open pixel (or slit)
    gets ``quad_points`` nodes per axis; an :class:`NSlit` is treated as
    unit height in y.
    """
    if quad_points < MIN_QUAD_POINTS:
        raise GhostDiffError(f"quad_points must be >= {MIN_QUAD_POINTS}, got {quad_points}")
    kx, ky = np.broadcast_arrays(np.asarray(kx, dtype=float), np.asarray(ky, dtype=float))
    u = (np.arange(quad_points) + 0.5) / quad_points - 0.5
    if isinstance(aperture, NSlit):
        cx = aperture.centers
        cy = np.zeros_like(cx)
        wx = np.full_like(cx, aperture.slit_width)
        wy = np.ones_like(cx)
    else:
        rows, cols = np.nonzero(aperture.pixels)
        cx = aperture._column_x()[cols]
        cy = aperture._row_y()[rows]
        wx = wy = np.full(cx.size, aperture.pixel_pitch)
    # per-element midpoint sums factorise in x and y
    out = np.zeros(kx.shape, dtype=complex)
    for x0, y0, ax, ay in zip(cx, cy, wx, wy):
        fx = np.exp(-1j * np.multiply.outer(kx, x0 + ax * u)).mean(-1) * ax
        fy = np.exp(-1j * np.multiply.outer(ky, y0 + ay * u)).mean(-1) * ay
        out += fx * fy
    return out


def kernel_quadrature(
    grid: ModeGrid, aperture: Aperture, lambda_t: float, quad_points: int = 2048
) -> DiffractionKernel:
    """Kernel from direct midpoint quadrature of the aperture integral at k_y = 0."""
    _check_resolved(grid, aperture.feature_width)
    values = normalize_kernel(fraunhofer_integral(aperture, grid.offsets, quad_points))
    return DiffractionKernel(grid, values, lambda_t)


def build_kernel(grid: ModeGrid, aperture: Aperture, plane_extent: float,
                 quad_points: int = 2048) -> DiffractionKernel:
    """Closed form for slit arrays, quadrature for masks; lambda_t from the plane."""
    lam = transmissivity(aperture, plane_extent)
    if isinstance(aperture, NSlit):
        return kernel_nslit(grid, aperture, lam)
    return kernel_quadrature(grid, aperture, lam, quad_points)


def check_same_grid(*objs) -> ModeGrid:
    grids = [o.grid for o in objs]
    for g in grids[1:]:
        if g != grids[0]:
            raise GridMismatchError("inputs are defined on different mode grids")
    return grids[0]
