import numpy as np
import pytest

from src.core.errors import EmptyScales, NotPowerOfTwo, ShapeMismatch, TooManyLevels, TooSmall
from src.core.spectral import (
    Defect, Scaleogram, WaveletDecomposition, cwt, dft, dwt_decompose, dwt_reconstruct, fault_frequency,
    fft, frequency_axis, log_scales, magnitude_spectrum, next_pow2_pad, peak_bin_near, scaleogram_resize,
    scaleogram_to_pgm,
)


def naive_dft(x):
    n = len(x)
    out = np.zeros(n, dtype=complex)
    for k in range(n):
        for t in range(n):
            out[k] += x[t] * np.exp(-2j * np.pi * k * t / n)
    return out


class TestFourier:
    def test_dc_and_impulse(self):
        assert np.allclose(dft([1, 1, 1, 1]).bins, [4, 0, 0, 0], atol=1e-12)
        assert np.allclose(dft([1, 0, 0, 0]).bins, [1, 1, 1, 1], atol=1e-12)
        assert np.allclose(fft([1, 1, 1, 1]).bins, [4, 0, 0, 0], atol=1e-12)

    def test_dft_matches_double_loop(self, rng):
        x = rng.normal(size=64)
        assert np.max(np.abs(dft(x).bins - naive_dft(x))) <= 1e-9

    def test_fft_matches_dft(self, rng):
        for _ in range(50):
            n = 2 ** int(rng.integers(3, 11))
            x = rng.normal(size=n)
            assert np.max(np.abs(fft(x).bins - dft(x).bins)) <= 1e-9

    def test_parseval_and_symmetry(self, rng):
        x = rng.normal(size=256)
        X = fft(x).bins
        assert np.sum(x ** 2) == pytest.approx(np.sum(np.abs(X) ** 2) / x.size, rel=1e-6)
        assert np.allclose(X[1:], np.conj(X[1:][::-1]), atol=1e-9)

    def test_fft_needs_power_of_two(self):
        with pytest.raises(NotPowerOfTwo):
            fft([1.0, 2.0, 3.0])
        assert next_pow2_pad([1.0, 2.0, 3.0]).tolist() == [1.0, 2.0, 3.0, 0.0]

    def test_axis_and_peak(self):
        fs, n = 1024.0, 1024
        t = np.arange(n) / fs
        spectrum = fft(np.sin(2 * np.pi * 100 * t), fs)
        assert frequency_axis(spectrum)[100] == pytest.approx(100.0)
        assert np.argmax(magnitude_spectrum(spectrum)) == 100
        assert peak_bin_near(spectrum, 101.0) == 100

    def test_peak_prefers_strongest_local_maximum(self):
        fs, n = 1024.0, 1024
        t = np.arange(n) / fs
        spectrum = fft(0.3 * np.sin(2 * np.pi * 98 * t) + np.sin(2 * np.pi * 101 * t), fs)
        mags = magnitude_spectrum(spectrum)
        assert peak_bin_near(spectrum, 100.0) == 101 == int(np.argmax(mags))
        assert peak_bin_near(spectrum, 97.0) == 98


class TestDwt:
    def test_constant_has_no_detail(self):
        d = dwt_decompose(np.full(128, 3.7), levels=1)
        assert np.max(np.abs(d.details[0])) <= 1e-10

    def test_coefficient_lengths(self, rng):
        d = dwt_decompose(rng.normal(size=64), levels=2)
        assert [c.size for c in d.details] == [16, 32]
        assert d.approximation.size == 16

    def test_cubic_interior_details_vanish(self):
        t = np.linspace(0.0, 1.0, 256, endpoint=False)
        d = dwt_decompose(t ** 3 - 0.5 * t ** 2 + t, levels=1)
        assert np.max(np.abs(d.details[0][8:-8])) <= 1e-6

    def test_too_many_levels(self):
        with pytest.raises(TooManyLevels):
            dwt_decompose(np.zeros(16), levels=5)

    def test_round_trip_and_energy(self, rng):
        for _ in range(20):
            n = int(rng.choice([64, 128, 256, 1024, 4096]))
            levels = int(rng.integers(1, 5))
            x = rng.normal(size=n)
            d = dwt_decompose(x, levels=levels)
            assert np.max(np.abs(dwt_reconstruct(d) - x)) <= 1e-8
            energy = np.sum(d.approximation ** 2) + sum(np.sum(c ** 2) for c in d.details)
            assert energy == pytest.approx(np.sum(x ** 2), rel=1e-6)

    def test_impulse_and_zero(self):
        x = np.zeros(256)
        x[100] = 1.0
        assert np.max(np.abs(dwt_reconstruct(dwt_decompose(x, levels=3)) - x)) <= 1e-8
        zero = WaveletDecomposition(2, np.zeros(16), [np.zeros(16), np.zeros(32)])
        assert np.all(dwt_reconstruct(zero) == 0)

    def test_malformed_decomposition(self):
        with pytest.raises(ShapeMismatch):
            dwt_reconstruct(WaveletDecomposition(2, np.zeros(16), [np.zeros(8), np.zeros(32)]))


class TestCwt:
    scales = log_scales(64, 2.0, 128.0)

    def test_zero_and_linearity(self, rng):
        assert np.all(cwt(np.zeros(64), self.scales[:10]).magnitudes == 0)
        x = rng.normal(size=256)
        a = cwt(x, self.scales[:20]).magnitudes
        assert np.array_equal(cwt(2 * x, self.scales[:20]).magnitudes, 2 * a)
        assert np.allclose(cwt(-x, self.scales[:20]).magnitudes, a, atol=1e-12)

    def test_threaded_rows_match_sequential(self, rng):
        x = rng.normal(size=512)
        assert np.array_equal(cwt(x, self.scales, workers=4).magnitudes, cwt(x, self.scales).magnitudes)

    @pytest.mark.parametrize('freq, fs', [
        (20.0, 1000.0), (50.0, 1000.0), (120.0, 1000.0), (40.0, 2000.0), (150.0, 2000.0),
        (300.0, 8000.0), (800.0, 8000.0), (300.0, 12000.0), (1500.0, 12000.0), (1000.0, 25600.0),
    ])
    def test_sine_peaks_at_centre_scale(self, freq, fs):
        n = 4096
        x = np.sin(2 * np.pi * freq * np.arange(n) / fs)
        s = cwt(x, self.scales)
        interior = s.magnitudes[:, 512:n - 512].mean(axis=1)
        expected = 6.0 * fs / (2 * np.pi * freq)
        nearest = np.argmin(np.abs(np.log(self.scales) - np.log(expected)))
        assert abs(int(np.argmax(interior)) - int(nearest)) <= 1

    def test_errors(self):
        with pytest.raises(EmptyScales):
            cwt(np.zeros(16), [])
        with pytest.raises(TooSmall):
            cwt(np.zeros(4), [2.0])


class TestScaleogramResize:
    def test_identity_and_constant(self, rng):
        s = Scaleogram(np.arange(1.0, 5.0), np.arange(6), rng.random((4, 6)))
        assert np.array_equal(scaleogram_resize(s, 4, 6).magnitudes, s.magnitudes)
        flat = Scaleogram(np.arange(1.0, 5.0), np.arange(6), np.full((4, 6), 2.5))
        assert np.allclose(scaleogram_resize(flat, 9, 3).magnitudes, 2.5)

    def test_ramp_downsample(self):
        ramp = np.arange(16, dtype=float).reshape(4, 4)
        out = scaleogram_resize(Scaleogram(np.arange(1.0, 5.0), np.arange(4), ramp), 2, 2)
        assert np.allclose(out.magnitudes, [[2.5, 4.5], [10.5, 12.5]], atol=1e-9)

    def test_range_preserved(self, rng):
        s = Scaleogram(np.arange(1.0, 33.0), np.arange(50), rng.random((32, 50)))
        out = scaleogram_resize(s, 128, 128).magnitudes
        assert out.min() >= s.magnitudes.min() - 1e-12
        assert out.max() <= s.magnitudes.max() + 1e-12

    def test_too_small(self):
        with pytest.raises(TooSmall):
            scaleogram_resize(Scaleogram(np.array([1.0]), np.arange(4), np.zeros((1, 4))))

    def test_pgm_export(self, tmp_path, rng):
        s = Scaleogram(np.array([1.0, 2.0, 4.0]), np.arange(5), rng.random((3, 5)))
        sidecar = scaleogram_to_pgm(s, tmp_path / 'scaleogram.pgm')
        data = (tmp_path / 'scaleogram.pgm').read_bytes()
        assert data.startswith(b'P5')
        assert sidecar.read_text().splitlines()[0] == 'row,scale'


class TestFaultFrequency:
    def test_table_multipliers(self):
        assert fault_frequency(Defect.INNER_RING, 60) == pytest.approx(5.4152)
        assert fault_frequency(Defect.CAGE_TRAIN, 60) == pytest.approx(0.3983)
        assert fault_frequency('outer_ring', 1797) == pytest.approx(107.36, abs=0.01)

    def test_rpm_must_be_positive(self):
        with pytest.raises(ValueError):
            fault_frequency(Defect.INNER_RING, 0)
