import numpy as np
import pytest

from src.core.errors import BadWindow, ConfigError, LengthMismatch, ShapeMismatch, ToolkitError
from src.core.signals import (
    Signal, image_count, normalize_minmax, read_signal_csv, savitzky_golay, segment, signal_to_image,
    signal_to_images, write_signal_csv,
)


class TestSignal:
    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            Signal(np.array([]), 10.0)
        with pytest.raises(ValueError):
            Signal(np.array([1.0]), 0.0)
        with pytest.raises(ValueError):
            Signal(np.array([1.0, np.nan]), 10.0)

    def test_samples_are_read_only(self):
        s = Signal([1.0, 2.0], 2.0)
        with pytest.raises(ValueError):
            s.samples[0] = 5.0
        assert s.duration_s == 1.0

    def test_csv_round_trip(self, tmp_path, rng):
        s = Signal(rng.normal(size=100), 25600.0)
        write_signal_csv(tmp_path / 's.csv', s)
        back = read_signal_csv(tmp_path / 's.csv')
        assert back.sample_rate_hz == s.sample_rate_hz
        assert np.array_equal(back.samples, s.samples)

    @pytest.mark.parametrize('text, error', [
        ('sample_rate_hz=0\n1.0\n2.0\n', ConfigError),
        ('sample_rate_hz=abc\n1.0\n', ShapeMismatch),
        ('sample_rate_hz=100\n1.0\nx\n', ShapeMismatch),
        ('sample_rate_hz=100\n1.0\nnan\n', ShapeMismatch),
    ])
    def test_bad_csv_raises_toolkit_error(self, tmp_path, text, error):
        path = tmp_path / 'bad.csv'
        path.write_text(text)
        with pytest.raises(error) as info:
            read_signal_csv(path)
        assert isinstance(info.value, ToolkitError)
        assert 'bad.csv' in str(info.value)


class TestImageCount:
    @pytest.mark.parametrize('length, pixels, expected', [
        (4096, 4096, 1), (4095, 4096, 0), (1_208_320, 4096, 295), (0, 4096, 0),
    ])
    def test_examples(self, length, pixels, expected):
        assert image_count(length, pixels) == expected

    def test_exact_multiples(self):
        for n in range(20):
            assert image_count(n * 7, 7) == n


class TestSegment:
    def test_drops_remainder(self):
        chunks = segment(np.arange(10.0), 4)
        assert len(chunks) == 2
        assert np.array_equal(chunks[0], [0, 1, 2, 3])
        assert np.array_equal(chunks[1], [4, 5, 6, 7])

    def test_identity_and_empty(self):
        assert np.array_equal(segment(np.arange(4.0), 4)[0], np.arange(4.0))
        assert segment(np.arange(3.0), 4) == []

    def test_concatenation_is_prefix(self, rng):
        x = rng.normal(size=1000)
        chunks = segment(Signal(x, 1.0), 64)
        assert np.array_equal(np.concatenate(chunks), x[:len(chunks) * 64])


class TestSignalToImage:
    def test_small_ramp(self):
        image = signal_to_image(np.array([0.0, 1.0, 2.0, 3.0]), side=2)
        assert np.allclose(image.pixels, [[0, 1 / 3], [2 / 3, 1]])

    def test_constant_chunk_is_mid_grey(self):
        image = signal_to_image(np.full(4, 3.0), side=2)
        assert np.all(image.pixels == 0.5)

    def test_matches_per_pixel_loop(self, rng):
        x = rng.normal(size=4096)
        image = signal_to_image(x)
        lo, hi = x.min(), x.max()
        for i in range(0, 64, 7):
            for j in range(64):
                assert image.pixels[i, j] == pytest.approx((x[64 * i + j] - lo) / (hi - lo), abs=1e-12)
        assert image.pixels.min() == 0.0 and image.pixels.max() == 1.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            signal_to_image(np.zeros(10), side=2)

    def test_whole_signal(self, rng):
        images = signal_to_images(Signal(rng.normal(size=12288), 12000.0))
        assert images.shape == (3, 64, 64)

    def test_normalize_flat_value(self):
        assert np.all(normalize_minmax(np.ones(3), flat_value=0.0) == 0.0)


class TestSavitzkyGolay:
    def test_quadratic_is_fixed_point(self):
        t = np.linspace(0.0, 1.0, 40)
        p = 2 * t ** 2 - t + 1
        assert np.max(np.abs(savitzky_golay(p, 5, 2) - p)) <= 1e-9

    def test_constant(self):
        assert np.allclose(savitzky_golay(np.full(60, 4.2), 51, 3), 4.2)

    def test_reduces_noise(self, rng):
        t = np.linspace(0, 4 * np.pi, 1000)
        clean = np.sin(t)
        noisy = clean + 0.3 * rng.normal(size=t.size)
        smoothed = savitzky_golay(noisy, 51, 3)
        rmse = lambda a: np.sqrt(np.mean((a - clean) ** 2))
        assert rmse(smoothed) < rmse(noisy)

    def test_linearity(self, rng):
        x, y = rng.normal(size=200), rng.normal(size=200)
        for mode in ('interp', 'mirror'):
            lhs = savitzky_golay(2.5 * x - 1.5 * y, 11, 3, mode)
            rhs = 2.5 * savitzky_golay(x, 11, 3, mode) - 1.5 * savitzky_golay(y, 11, 3, mode)
            assert np.max(np.abs(lhs - rhs)) <= 1e-9

    @pytest.mark.parametrize('window, order, length', [(4, 2, 20), (5, 5, 20), (21, 3, 10)])
    def test_bad_window(self, window, order, length):
        with pytest.raises(BadWindow):
            savitzky_golay(np.zeros(length), window, order)
