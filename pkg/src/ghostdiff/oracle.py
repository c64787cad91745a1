"""Independent ground truth for the closed-form moments.

Two engines, neither of which touches the closed-form expressions:

* :func:`exact_moments_by_matrix` composes the splitter and diffraction maps
  as matrices and pushes the diagonal input covariance diag(<N_k>) through them.
* Monte Carlo over classical fields. A thermal mode has a Gaussian, positive
  Glauber P-function, so normally ordered moments equal moments of a
  circular complex Gaussian amplitude alpha_k with E|alpha_k|^2 = <N_k>. The
  vacuum port adds nothing to normally ordered moments and is dropped.

Random streams come from numpy's PCG64 seeded through ``SeedSequence``;
chunk ``j`` of a run always uses child ``j`` of the run's seed, so results do
not depend on how chunks are spread across workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .diffraction import DiffractionKernel, check_same_grid
from .exceptions import GhostDiffError
from .modes import SourceSpectrum
from .optics import IDLER_PHASE, BeamSplitter, JointMomentTable

DEFAULT_N_SAMPLES = 1_000_000
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True, eq=False)
class FieldSample:
    amplitudes: np.ndarray


@dataclass(frozen=True)
class OracleEstimate:
    mean: complex
    std_error: float
    n_samples: int

    def z_score(self, reference: complex) -> float:
        if self.std_error == 0:
            return 0.0 if self.mean == reference else math.inf
        return abs(self.mean - reference) / self.std_error


def _unit_normals(rng: np.random.Generator, size: int, m: int) -> np.ndarray:
    # interleaved real/imaginary parts, each N(0, 1/2): E|z|^2 = 1, E[z^2] = 0
    z = rng.standard_normal((size, 2 * m)).view(np.complex128)
    z *= math.sqrt(0.5)
    return z


def _draw(rng: np.random.Generator, n_photons: np.ndarray, size: int) -> np.ndarray:
    return _unit_normals(rng, size, n_photons.size) * np.sqrt(n_photons)


def sample_thermal_field(spectrum: SourceSpectrum, seed: int) -> FieldSample:
    rng = np.random.default_rng(seed)
    return FieldSample(_draw(rng, spectrum.mean_photons, 1)[0])


def propagate(sample: FieldSample, bs: BeamSplitter, kernel: DiffractionKernel):
    """Push classical amplitudes through the splitter and the slit.

    Returns ``(diffracted, idler)``. Accepts a single sample or a stack of
    samples along the leading axis.
    """
    alpha = np.asarray(sample.amplitudes if isinstance(sample, FieldSample) else sample)
    if alpha.shape[-1] != kernel.grid.count:
        raise GhostDiffError("sample length does not match the kernel grid")
    signal = bs.r * alpha
    idler = -bs.t * alpha
    diffracted = math.sqrt(kernel.transmissivity_lambda_t) * signal @ kernel.matrix.T
    return diffracted, idler


def exact_moments_by_matrix(
    spectrum: SourceSpectrum, bs: BeamSplitter, kernel: DiffractionKernel
) -> JointMomentTable:
    """Second moments from explicit linear maps; ``cd`` keeps the literal idler sign.

    The splitter maps are diagonal and stored as vectors; the diffraction map
    is the dense matrix F[k', k] = f(k' - k). With c = C alpha, d = D alpha and
    E[conj(alpha_m) alpha_n] = <N_m> delta_mn,

        E[conj(c_k) d_k'] = sum_m conj(C[k, m]) <N_m> D[k', m].
    """
    grid = check_same_grid(spectrum, kernel)
    n = spectrum.mean_photons
    signal_diag = np.full(grid.count, bs.r)
    idler_diag = np.full(grid.count, -bs.t)
    diffracted_map = math.sqrt(kernel.transmissivity_lambda_t) * (kernel.matrix * signal_diag[None, :])
    weighted = diffracted_map * n[None, :]
    cd = idler_diag.conj()[:, None] * weighted.T
    cc = np.abs(idler_diag) ** 2 * n
    dd = np.einsum("pm,pm->p", diffracted_map.conj(), weighted).real
    return JointMomentTable(cc=cc, dd=dd, cd=cd)


def table_deviation(analytic: JointMomentTable, oracle: JointMomentTable) -> float:
    """Largest entrywise relative deviation, aligning the idler phase on ``cd``."""

    def rel(a, b):
        a, b = np.asarray(a), np.asarray(b)
        diff = np.abs(a - b)
        scale = np.abs(b)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(scale > 0, diff / scale, np.where(diff > 0, np.inf, 0.0))
        return float(np.max(r))

    return max(
        rel(oracle.cc, analytic.cc),
        rel(oracle.dd, analytic.dd),
        rel(oracle.cd, IDLER_PHASE * analytic.cd),
    )


@dataclass
class RunningMoments:
    """Streaming mean and sum of squared deviations (Chan et al. merge)."""

    n: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def from_batch(cls, z: np.ndarray) -> "RunningMoments":
        mean = z.mean(axis=0)
        return cls(z.shape[0], mean, np.sum(np.abs(z - mean) ** 2, axis=0))

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + np.abs(delta) ** 2 * (self.n * other.n / n)
        return RunningMoments(n, mean, m2)

    def std_error(self) -> np.ndarray:
        return np.sqrt(self.m2 / (self.n - 1) / self.n)


@dataclass(frozen=True, eq=False)
class MonteCarloMoments:
    """Sampled <c_k^dag d_k0'>, <c_k^dag c_k> at probe modes and <d_k0'^dag d_k0'>."""

    probe_indices: np.ndarray
    k0_index: int
    cd: RunningMoments
    cc: RunningMoments
    dd: RunningMoments

    def estimate(self, which: str, j: int = 0) -> OracleEstimate:
        rm = getattr(self, which)
        return OracleEstimate(complex(rm.mean[j]), float(rm.std_error()[j]), rm.n)

    def g1(self) -> np.ndarray:
        return self.cd.mean / np.sqrt(self.cc.mean.real * self.dd.mean.real[0])


def _chunk_moments(spectrum, bs, kernel, probe, i0, size, seed_seq):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    m = spectrum.grid.count
    # alpha = z * sqrt(N); fold sqrt(N) into the maps instead of forming alpha
    z = _unit_normals(rng, size, m)
    amp = np.sqrt(spectrum.mean_photons)
    weights = math.sqrt(kernel.transmissivity_lambda_t) * bs.r * kernel.at(i0, np.arange(m))
    d0 = z @ (amp * weights)
    c = -bs.t * amp[probe] * z[:, probe]
    return (
        RunningMoments.from_batch(np.conj(c) * d0[:, None]),
        RunningMoments.from_batch(np.abs(c) ** 2),
        RunningMoments.from_batch((np.abs(d0) ** 2)[:, None]),
    )


def monte_carlo_moments(
    spectrum: SourceSpectrum,
    bs: BeamSplitter,
    kernel: DiffractionKernel,
    probe_indices: Sequence[int],
    k0_index: int,
    n_samples: int = DEFAULT_N_SAMPLES,
    seed: int = 0,
    chunk_size: int | None = None,
    n_workers: int = 1,
) -> MonteCarloMoments:
    grid = check_same_grid(spectrum, kernel)
    if chunk_size is None:
        chunk_size = max(1, _CHUNK_ELEMENTS // grid.count)
    probe = np.atleast_1d(np.asarray(probe_indices, dtype=int))
    sizes = [chunk_size] * (n_samples // chunk_size)
    if n_samples % chunk_size:
        sizes.append(n_samples % chunk_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    def work(j):
        return _chunk_moments(spectrum, bs, kernel, probe, k0_index, sizes[j], children[j])

    if n_workers > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    else:
        parts = [work(j) for j in range(len(sizes))]
    # merge in chunk order so the result is independent of scheduling
    cd, cc, dd = parts[0]
    for p in parts[1:]:
        cd, cc, dd = cd.merge(p[0]), cc.merge(p[1]), dd.merge(p[2])
    return MonteCarloMoments(probe, int(k0_index), cd, cc, dd)


def estimate_cross_correlation(
    spectrum: SourceSpectrum,
    bs: BeamSplitter,
    kernel: DiffractionKernel,
    k: float,
    k0_prime: float,
    n_samples: int = DEFAULT_N_SAMPLES,
    seed: int = 0,
    **kwargs,
) -> OracleEstimate:
    """Sample mean of conj(c_k) d_k0' with the literal (negative) idler sign."""
    if n_samples < 10_000:
        raise GhostDiffError(f"n_samples must be >= 10^4, got {n_samples}")
    grid = spectrum.grid
    mc = monte_carlo_moments(spectrum, bs, kernel, [grid.index_of(k)], grid.index_of(k0_prime),
                             n_samples, seed, **kwargs)
    return mc.estimate("cd")

