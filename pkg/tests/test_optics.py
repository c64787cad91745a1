import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghostdiff import (BeamSplitter, ChiArgument, GhostDiffError, NSlit, SourceSpectrum,
                       analytic_moments, build_grid, chi_diffracted_joint, chi_output, chi_thermal,
                       flat_spectrum, gaussian_spectrum, kernel_nslit, make_beam_splitter,
                       normalize_kernel)
from ghostdiff.diffraction import DiffractionKernel
from ghostdiff.optics import diffraction_substitution, signal_convolution


def random_kernel(grid, rng, lam=0.3):
    v = rng.normal(size=2 * grid.count - 1) + 1j * rng.normal(size=2 * grid.count - 1)
    return DiffractionKernel(grid, normalize_kernel(v), lam)


def random_vec(rng, m, scale=0.3):
    return scale * (rng.normal(size=m) + 1j * rng.normal(size=m))


def chi_loop(bs, spectrum, kernel, xi1, xi2):
    """Explicit-loop composition of the splitter, thermal source and diffraction substitution."""
    g = spectrum.grid
    total = 0.0
    for i in range(g.count):
        s = 0j
        for ip in range(g.count):
            s += xi1[ip] * kernel.values[ip - i + g.count - 1]
        u = bs.r * math.sqrt(kernel.transmissivity_lambda_t) * s - bs.t * xi2[i]
        total += spectrum.mean_photons[i] * abs(u) ** 2
    return math.exp(-total)


class TestBeamSplitter:
    def test_make(self):
        bs = make_beam_splitter(0.6)
        assert bs.t == pytest.approx(0.8, rel=1e-15)
        m = bs.matrix
        np.testing.assert_allclose(m @ m.T, np.eye(2), atol=1e-15)

    @pytest.mark.parametrize("r", [0.0, 1.0, -0.2, 1.5])
    def test_rejects(self, r):
        with pytest.raises(GhostDiffError):
            make_beam_splitter(r)

    def test_not_unitary(self):
        with pytest.raises(GhostDiffError):
            BeamSplitter(0.5, 0.5)


class TestCharacteristic:
    def test_thermal_example(self):
        g = build_grid(1e5, 3, 500e-9)
        s = SourceSpectrum(g, np.array([1.0, 2.0, 3.0]))
        assert chi_thermal(s, [1, 0, 1j]) == pytest.approx(math.exp(-4.0), rel=1e-15)
        assert chi_thermal(s, [0, 0, 0]) == 1.0

    def test_output_example(self):
        g = build_grid(1e5, 3, 500e-9)
        s = SourceSpectrum(g, np.array([1.0, 2.0, 3.0]))
        bs = make_beam_splitter(0.6)
        arg = ChiArgument(np.array([1, 0, 0]), np.array([0, 1, 0]))
        # N_0 (0.6)^2 + N_1 (0.8)^2
        assert chi_output(bs, s, arg) == pytest.approx(math.exp(-(0.36 + 2 * 0.64)), rel=1e-14)
        assert chi_output(bs, s, ChiArgument.zeros(3)) == 1.0

    def test_vacuum_direction_invariance(self, rng):
        g = build_grid(1e5, 7, 500e-9)
        s = gaussian_spectrum(g, 2.0, 4e4)
        bs = make_beam_splitter(0.3)
        for _ in range(20):
            x1, x2, eps = (random_vec(rng, 7) for _ in range(3))
            a = chi_output(bs, s, ChiArgument(x1, x2))
            b = chi_output(bs, s, ChiArgument(x1 + bs.t * eps, x2 + bs.r * eps))
            assert b == pytest.approx(a, rel=1e-12)

    @settings(max_examples=50)
    @given(seed=st.integers(0, 2**32 - 1), r=st.floats(0.05, 0.95))
    def test_bounded(self, seed, r):
        rng = np.random.default_rng(seed)
        g = build_grid(1e5, 5, 500e-9)
        s = SourceSpectrum(g, rng.uniform(0.1, 5, 5))
        k = random_kernel(g, rng)
        arg = ChiArgument(random_vec(rng, 5, 2.0), random_vec(rng, 5, 2.0))
        bs = make_beam_splitter(r)
        assert 0 <= chi_output(bs, s, arg).real <= 1
        assert 0 <= chi_diffracted_joint(bs, s, k, arg).real <= 1

    def test_argument_validation(self):
        g = build_grid(1e5, 3, 500e-9)
        s = flat_spectrum(g, 1.0)
        with pytest.raises(GhostDiffError):
            ChiArgument(np.zeros(3), np.zeros(4))
        with pytest.raises(GhostDiffError):
            ChiArgument(np.array([np.nan, 0, 0]), np.zeros(3))
        with pytest.raises(GhostDiffError):
            chi_output(make_beam_splitter(0.5), s, ChiArgument.zeros(5))
        with pytest.raises(GhostDiffError):
            chi_thermal(s, np.zeros(2))


class TestComposition:
    def test_matches_explicit_loop(self, rng):
        g = build_grid(1e5, 9, 500e-9)
        s = SourceSpectrum(g, rng.uniform(0.1, 3.0, 9))
        k = random_kernel(g, rng)
        bs = make_beam_splitter(0.7)
        for _ in range(100):
            x1, x2 = random_vec(rng, 9), random_vec(rng, 9)
            fast = chi_diffracted_joint(bs, s, k, ChiArgument(x1, x2))
            assert abs(fast - chi_loop(bs, s, k, x1, x2)) <= 1e-12

    def test_substitution_is_matrix_product(self, rng):
        g = build_grid(1e5, 11, 500e-9)
        k = random_kernel(g, rng, lam=0.04)
        xi = random_vec(rng, 11)
        np.testing.assert_allclose(diffraction_substitution(k, xi), 0.2 * (k.matrix.T @ xi),
                                   atol=1e-14)

    def test_delta_kernel_is_attenuation(self):
        # f = delta reduces diffraction to a plain loss sqrt(lambda_t)
        g = build_grid(1e5, 5, 500e-9)
        v = np.zeros(9)
        v[4] = 1.0
        k = DiffractionKernel(g, v, 0.25)
        s = flat_spectrum(g, 2.0)
        bs = make_beam_splitter(0.6)
        x1 = np.array([0, 0.3, 0, 0, 0.1j])
        x2 = np.array([0.2, 0, 0, 0.1, 0])
        a = chi_diffracted_joint(bs, s, k, ChiArgument(x1, x2))
        b = chi_output(bs, s, ChiArgument(0.5 * x1, x2))
        assert a == pytest.approx(b, rel=1e-15)


def wirtinger_mixed(fun, z0, w0, h):
    """d^2 fun / dz dw* at (z0, w0) by central differences over real and imaginary parts."""

    def d2(dz, dw):
        tot = 0.0
        for sa in (1, -1):
            for sb in (1, -1):
                tot += sa * sb * fun(z0 + sa * h * dz, w0 + sb * h * dw)
        return tot / (4 * h * h)

    xx, xy, yx, yy = d2(1, 1), d2(1, 1j), d2(1j, 1), d2(1j, 1j)
    return 0.25 * (xx + 1j * xy - 1j * yx + yy)


class TestMoments:
    def test_finite_difference_against_closed_form(self, rng):
        g = build_grid(1e5, 7, 500e-9)
        s = SourceSpectrum(g, rng.uniform(15.0, 25.0, 7))
        k = random_kernel(g, rng, lam=0.5)
        bs = make_beam_splitter(0.8)
        table = analytic_moments(bs, s, k)
        for i, ip in [(3, 3), (1, 5), (6, 0)]:
            def fun(z, w):
                x1 = np.zeros(7, complex)
                x2 = np.zeros(7, complex)
                x1[ip], x2[i] = z, w
                return chi_diffracted_joint(bs, s, k, ChiArgument(x1, x2))

            fd = wirtinger_mixed(fun, 0j, 0j, 1e-4)
            assert abs(fd - table.cd[i, ip]) <= 1e-6

    def test_cross_example(self):
        g = build_grid(1e5, 3, 500e-9)
        v = np.zeros(5)
        v[2] = 1.0
        k = DiffractionKernel(g, v, 0.02)
        table = analytic_moments(make_beam_splitter(1 / math.sqrt(2)), flat_spectrum(g, 1.0), k)
        assert table.cd[1, 1] == pytest.approx(0.07071067811865477, rel=1e-14)
        assert table.cd[0, 1] == 0
        np.testing.assert_allclose(table.cc, [0.5] * 3)
        np.testing.assert_allclose(table.dd, [0.01] * 3)

    def test_linear_in_photon_number(self, rng):
        g = build_grid(1e5, 9, 500e-9)
        s = SourceSpectrum(g, rng.uniform(0.1, 2.0, 9))
        k = random_kernel(g, rng)
        bs = make_beam_splitter(0.4)
        a = analytic_moments(bs, s, k)
        b = analytic_moments(bs, s.scaled(3.5), k)
        np.testing.assert_allclose(b.cd, 3.5 * a.cd, rtol=1e-14)
        np.testing.assert_allclose(b.dd, 3.5 * a.dd, rtol=1e-14)
        np.testing.assert_allclose(b.cc, 3.5 * a.cc, rtol=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), r=st.floats(0.05, 0.95))
    def test_cauchy_schwarz(self, seed, r):
        rng = np.random.default_rng(seed)
        g = build_grid(1e5, 11, 500e-9)
        s = SourceSpectrum(g, rng.uniform(0.0, 3.0, 11) + 1e-3)
        table = analytic_moments(make_beam_splitter(r), s, random_kernel(g, rng))
        assert table.cauchy_schwarz_excess() <= 1e-10


class TestSignalConvolution:
    def test_compact_kernel_flat(self):
        # a kernel supported on |offset| <= 3 leaves interior modes exactly flat
        g = build_grid(1e5, 21, 500e-9)
        v = np.zeros(41)
        v[20 - 3 : 20 + 4] = [1, 2, 3, 4, 3, 2, 1]
        k = DiffractionKernel(g, normalize_kernel(v), 0.1)
        out = signal_convolution(flat_spectrum(g, 2.5), k)
        assert np.all(out[3:-3] == pytest.approx(2.5, abs=1e-15))
        assert np.all(out[:3] < 2.5)

    def test_deficit_is_tail_mass(self):
        g = build_grid(1e6, 129, 500e-9)
        k = kernel_nslit(g, NSlit(1, 10e-6), 0.01)
        out = signal_convolution(flat_spectrum(g, 1.0), k)
        p = np.abs(k.values) ** 2
        m = g.count
        for i in (0, 30, 64, 100, 128):
            # offsets reachable from k'_i are i - (m-1) .. i
            kept = p[i : i + m].sum()
            assert out[i] == pytest.approx(kept, abs=1e-15)
            assert 1 - out[i] == pytest.approx(p.sum() - kept, abs=1e-15)
