"""Oracle-agreement suite behind ``ghostdiff validate``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Union

import numpy as np

from .correlation import GhostSetup
from .diffraction import DiffractionKernel
from .optics import IDLER_PHASE, analytic_moments
from .oracle import exact_moments_by_matrix, monte_carlo_moments, table_deviation

Number = Union[float, complex]

NORMALIZATION_TOL = 1e-9
MATRIX_TOL = 1e-12
CAUCHY_SCHWARZ_TOL = 1e-10
Z_LIMIT = 4.0


@dataclass(frozen=True)
class ValidationCheck:
    name: str
    analytic: Number
    oracle: Number
    tolerance: float
    passed: bool
    # non-gating lines are reported but do not decide the exit status
    gating: bool = True

    @property
    def status(self) -> str:
        if self.passed:
            return "PASS"
        return "FAIL" if self.gating else "WARN"

    def __post_init__(self):
        for name in ("analytic", "oracle"):
            v = getattr(self, name)
            v = complex(v) if np.iscomplexobj(v) else float(v)
            object.__setattr__(self, name, v)
        object.__setattr__(self, "tolerance", float(self.tolerance))
        object.__setattr__(self, "passed", bool(self.passed))

    def line(self) -> str:
        return (f"{self.name}\tanalytic={self.analytic!r}\toracle={self.oracle!r}"
                f"\ttolerance={self.tolerance!r}\t{self.status}")


def select_probes(setup: GhostSetup, n_probes: int = 16) -> np.ndarray:
    """Spread ``n_probes`` idler modes over the region where |<c^dag d>| >= 1% of max."""
    idx = np.arange(setup.grid.count)
    col = np.abs(setup.spectrum.mean_photons * setup.kernel.at(setup.i0, idx))
    cand = idx[col >= 0.01 * col.max()]
    pick = np.linspace(0, cand.size - 1, min(n_probes, cand.size)).round().astype(int)
    return cand[np.unique(pick)]


def run_validation(
    setup: GhostSetup,
    n_samples: int,
    seed: int,
    n_probes: int = 16,
    kernel_hook: Optional[Callable[[DiffractionKernel], DiffractionKernel]] = None,
    n_workers: int = 1,
) -> List[ValidationCheck]:
    """Run every check; ``kernel_hook`` lets tests inject a corrupted kernel."""
    kernel = setup.kernel if kernel_hook is None else kernel_hook(setup.kernel)
    spectrum, bs = setup.spectrum, setup.bs
    checks = []

    norm = kernel.norm_sq
    checks.append(ValidationCheck("kernel_normalization", 1.0, norm, NORMALIZATION_TOL,
                                  abs(norm - 1.0) <= NORMALIZATION_TOL))

    analytic = analytic_moments(bs, spectrum, kernel)
    exact = exact_moments_by_matrix(spectrum, bs, kernel)
    dev = table_deviation(analytic, exact)
    checks.append(ValidationCheck("matrix_moments_max_rel_dev", 0.0, dev, MATRIX_TOL,
                                  dev <= MATRIX_TOL))

    excess = analytic.cauchy_schwarz_excess()
    checks.append(ValidationCheck("cauchy_schwarz_excess", 0.0, excess, CAUCHY_SCHWARZ_TOL,
                                  excess <= CAUCHY_SCHWARZ_TOL))

    i0 = setup.i0
    probes = select_probes(setup, n_probes)
    mc = monte_carlo_moments(spectrum, bs, kernel, probes, i0, n_samples, seed,
                             n_workers=n_workers)
    inside = 0
    for j, k in enumerate(probes):
        est = mc.estimate("cd", j)
        ref = IDLER_PHASE * analytic.cd[k, i0]
        ok = est.z_score(ref) <= Z_LIMIT
        inside += ok
        checks.append(ValidationCheck(f"mc_cross_correlation[k={float(setup.grid.kx[k])!r}]", ref,
                                      est.mean, Z_LIMIT * est.std_error, ok, gating=False))
    needed = len(probes) - max(1, len(probes) // 16)
    checks.append(ValidationCheck("mc_cross_correlation_coverage", float(len(probes)),
                                  float(inside), float(len(probes) - needed), inside >= needed))

    j = int(np.argmin(np.abs(probes - i0)))
    est = mc.estimate("cc", j)
    ref = analytic.cc[probes[j]]
    checks.append(ValidationCheck("mc_idler_intensity", ref, est.mean.real,
                                  Z_LIMIT * est.std_error, est.z_score(ref) <= Z_LIMIT))
    est = mc.estimate("dd")
    ref = analytic.dd[i0]
    checks.append(ValidationCheck("mc_signal_intensity", ref, est.mean.real,
                                  Z_LIMIT * est.std_error, est.z_score(ref) <= Z_LIMIT))

    g1_mc = np.abs(mc.g1())
    g1_ref = np.abs(analytic.cd[probes, i0]) / np.sqrt(analytic.cc[probes] * analytic.dd[i0])
    peak_bound = float(g1_ref.max())
    checks.append(ValidationCheck("g1_bound", 1.0, peak_bound, CAUCHY_SCHWARZ_TOL,
                                  peak_bound <= 1.0 + CAUCHY_SCHWARZ_TOL))
    # g1 from sampled moments: ratio estimator, checked loosely at 5 / sqrt(n)
    gap = float(np.max(np.abs(g1_mc - g1_ref)))
    tol = 5.0 / math.sqrt(n_samples)
    checks.append(ValidationCheck("mc_g1_max_abs_dev", 0.0, gap, tol, gap <= tol))
    return checks


def format_report(checks: List[ValidationCheck], header: str = "") -> str:
    lines = [header] if header else []
    lines += [c.line() for c in checks]
    failed = sum(1 for c in checks if c.gating and not c.passed)
    lines.append(f"summary\tchecks={sum(c.gating for c in checks)}\tfailed={failed}\t"
                 f"{'PASS' if failed == 0 else 'FAIL'}")
    return "\n".join(lines) + "\n"


def all_passed(checks: List[ValidationCheck]) -> bool:
    return all(c.passed for c in checks if c.gating)
