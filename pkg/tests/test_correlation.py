import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghostdiff import (DarkModeError, DetectorMap, GhostDiffError, GhostSetup, NSlit,
                       OffGridError, SourceSpectrum, SweepOutOfBandError, build_grid, build_kernel,
                       cross_correlation, flat_spectrum, g1, g1_vector, gaussian_spectrum,
                       make_beam_splitter, normalize_kernel, signal_intensity,
                       signal_intensity_profile, single_mode_spectrum, sweep_pattern)
from ghostdiff.correlation import CSV_HEADER, approximation_quality, printed_pattern
from ghostdiff.diffraction import DiffractionKernel

WL = 500e-9


def delta_kernel(grid, lam=0.04):
    v = np.zeros(2 * grid.count - 1)
    v[grid.count - 1] = 1.0
    return DiffractionKernel(grid, v, lam)


@pytest.fixture
def pattern_grid():
    return build_grid(1.2e7, 2049, WL)


class TestPointValues:
    def test_cross_correlation_example(self, detector):
        g = build_grid(1e5, 5, WL)
        s = flat_spectrum(g, 2.0)
        setup = GhostSetup(s, make_beam_splitter(0.6), delta_kernel(g), detector)
        # r t sqrt(lam) N f(0) = 0.6 * 0.8 * 0.2 * 2
        assert cross_correlation(setup, 0.0) == pytest.approx(0.192, rel=1e-14)
        assert cross_correlation(setup, 5e4) == 0
        assert g1(setup, 0.0) == pytest.approx(1.0, rel=1e-15)
        assert signal_intensity(setup, 0.0) == pytest.approx(0.36 * 0.04 * 2.0, rel=1e-14)

    def test_off_grid_query(self, detector):
        g = build_grid(1e5, 5, WL)
        setup = GhostSetup(flat_spectrum(g, 1.0), make_beam_splitter(0.5), delta_kernel(g), detector)
        with pytest.raises(OffGridError):
            g1(setup, 1.2345e4)

    def test_g1_ignores_splitter_and_transmissivity(self, small_grid, double_slit, detector):
        s = gaussian_spectrum(small_grid, 1.0, 4e5)
        ref = None
        for r, plane in [(0.2, 1e-3), (0.7, 2e-4), (0.95, 5e-2)]:
            k = build_kernel(small_grid, double_slit, plane)
            setup = GhostSetup(s, make_beam_splitter(r), k, detector, 0.0, double_slit)
            v = g1_vector(setup)
            if ref is None:
                ref = v
            np.testing.assert_allclose(v, ref, rtol=1e-13, atol=1e-16)

    def test_g1_vector_matches_pointwise(self, small_grid, double_slit, detector):
        s = gaussian_spectrum(small_grid, 1.0, 4e5)
        setup = GhostSetup(s, make_beam_splitter(0.5), build_kernel(small_grid, double_slit, 1e-3),
                           detector, small_grid.kx[140], double_slit)
        v = g1_vector(setup)
        for i in (0, 100, 140, 256):
            assert v[i] == pytest.approx(g1(setup, small_grid.kx[i]), rel=1e-13, abs=1e-16)
        prof = signal_intensity_profile(setup)
        assert prof[140] == signal_intensity(setup, small_grid.kx[140])

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_g1_bounded(self, seed):
        rng = np.random.default_rng(seed)
        g = build_grid(1e5, 9, WL)
        s = SourceSpectrum(g, rng.uniform(0.01, 4.0, 9))
        k = DiffractionKernel(g, normalize_kernel(rng.normal(size=17) + 1j * rng.normal(size=17)), 0.5)
        k0 = g.kx[rng.integers(9)]
        setup = GhostSetup(s, make_beam_splitter(0.5), k, DetectorMap(0.5, WL), k0)
        assert np.max(np.abs(g1_vector(setup))) <= 1 + 1e-12


class TestDarkModes:
    def test_dark_idler_mode(self, detector):
        g = build_grid(1e5, 5, WL)
        s = single_mode_spectrum(g, 0.0, 1.0)
        setup = GhostSetup(s, make_beam_splitter(0.5), delta_kernel(g), detector)
        assert g1(setup, 0.0) == pytest.approx(1.0)
        with pytest.raises(DarkModeError, match="dark mode"):
            g1(setup, 5e4)

    def test_dark_detector_mode(self, detector):
        g = build_grid(1e5, 5, WL)
        s = single_mode_spectrum(g, 1e5, 1.0)
        setup = GhostSetup(s, make_beam_splitter(0.5), delta_kernel(g), detector, 0.0)
        with pytest.raises(DarkModeError):
            g1(setup, 1e5)
        with pytest.raises(DarkModeError):
            g1_vector(setup)

    def test_wavelength_mismatch(self):
        g = build_grid(1e5, 5, WL)
        with pytest.raises(GhostDiffError, match="wavelength"):
            GhostSetup(flat_spectrum(g, 1.0), make_beam_splitter(0.5), delta_kernel(g),
                       DetectorMap(0.5, 600e-9))

    def test_k0_off_grid(self, detector):
        g = build_grid(1e5, 5, WL)
        with pytest.raises(OffGridError):
            GhostSetup(flat_spectrum(g, 1.0), make_beam_splitter(0.5), delta_kernel(g), detector,
                       3e4)


class TestPrintedPattern:
    def test_single_slit(self):
        ap = NSlit(1, 10e-6)
        k = np.array([0.0, math.pi / 10e-6, 2 * math.pi / 10e-6])
        np.testing.assert_allclose(printed_pattern(k, ap), [1.0, 2 / math.pi, 0.0], atol=1e-16)

    def test_double_slit_unit_peak(self):
        ap = NSlit(2, 10e-6, 50e-6)
        k = np.linspace(-1e6, 1e6, 2001)
        p = printed_pattern(k, ap)
        assert p[1000] == 1.0
        assert np.max(np.abs(p)) == 1.0


class TestSweep:
    def test_single_slit_first_zero(self, setup_factory, pattern_grid):
        setup = setup_factory(pattern_grid, NSlit(1, 10e-6))
        pat = sweep_pattern(setup, -0.04, 0.04, 801)
        step = pattern_grid.spacing / setup.detector.scale
        # lambda f3 / a = 25 mm
        assert abs(pat.first_zero() - 0.025) <= step

    def test_double_slit_fringes(self, setup_factory, pattern_grid):
        setup = setup_factory(pattern_grid, NSlit(2, 10e-6, 50e-6))
        pat = sweep_pattern(setup, -0.02, 0.02, 801)
        step = pattern_grid.spacing / setup.detector.scale
        assert abs(pat.fringe_spacing() - 0.005) <= step

    def test_snapping(self, setup_factory, small_grid, double_slit):
        setup = setup_factory(small_grid, double_slit)
        pat = sweep_pattern(setup, -0.01, 0.013, 97)
        assert pat.max_snap_error <= 0.5 * small_grid.spacing * (1 + 1e-9)
        assert set(pat.kx) <= set(small_grid.kx)
        assert pat.positions_x[0] == -0.01 and pat.positions_x[-1] == 0.013

    def test_workers_do_not_change_result(self, setup_factory, small_grid, double_slit):
        setup = setup_factory(small_grid, double_slit)
        a = sweep_pattern(setup, -0.02, 0.02, 301)
        b = sweep_pattern(setup, -0.02, 0.02, 301, n_workers=4)
        assert a.to_csv_string() == b.to_csv_string()

    def test_out_of_band(self, setup_factory, small_grid, double_slit):
        setup = setup_factory(small_grid, double_slit)
        edge = small_grid.k_max / setup.detector.scale
        with pytest.raises(SweepOutOfBandError, match="out of band"):
            sweep_pattern(setup, -0.01, 1.5 * edge, 11)
        sweep_pattern(setup, -edge, edge, 11)

    @pytest.mark.parametrize("args", [(0.01, -0.01, 11), (-0.01, 0.01, 1), (-0.01, 0.01, 2.5)])
    def test_bad_sweep(self, setup_factory, small_grid, double_slit, args):
        setup = setup_factory(small_grid, double_slit)
        with pytest.raises(GhostDiffError):
            sweep_pattern(setup, *args)

    def test_csv(self, setup_factory, small_grid, double_slit):
        setup = setup_factory(small_grid, double_slit)
        pat = sweep_pattern(setup, -0.005, 0.005, 21)
        rows = list(csv.reader(io.StringIO(pat.to_csv_string())))
        assert tuple(rows[0]) == CSV_HEADER
        assert len(rows) == 22
        back = np.array(rows[1:], dtype=float)
        np.testing.assert_array_equal(back[:, 0], pat.positions_x)
        np.testing.assert_array_equal(back[:, 2] + 1j * back[:, 3], pat.g1)
        np.testing.assert_array_equal(back[:, 6], pat.signal_intensity)

    def test_broad_source_approaches_printed_form(self, detector, pattern_grid):
        ap = NSlit(1, 10e-6)
        k = build_kernel(pattern_grid, ap, 1e-3)
        bs = make_beam_splitter(0.5)
        gaps = {}
        for sigma in (1e5, 1e6, 5e6):
            setup = GhostSetup(gaussian_spectrum(pattern_grid, 1.0, sigma), bs, k, detector, 0.0, ap)
            pat = sweep_pattern(setup, -0.03, 0.03, 401)
            gaps[sigma] = (approximation_quality(setup), pat.approximation_gap())
        qualities = [gaps[s][0] for s in sorted(gaps)]
        errs = [gaps[s][1] for s in sorted(gaps)]
        assert qualities == sorted(qualities)
        assert errs == sorted(errs, reverse=True)
        assert errs[-1] < 1e-2
