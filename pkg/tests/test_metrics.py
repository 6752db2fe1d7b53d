import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from luml1.errors import InvalidInputError
from luml1.image import Image, to_grayscale
from luml1.metrics import SsimParams, mse, psnr, ssim
from luml1.rng import stream

from conftest import rand_image, rand_pair
from oracles import ssim_bruteforce


class TestMse:
    def test_identical_images(self):
        a = rand_image(1)
        assert mse(a, a) == 0.0

    def test_constant_difference(self):
        a = Image(np.zeros((4, 4, 3)))
        b = Image(np.full((4, 4, 3), 0.1))
        assert abs(mse(a, b) - 0.01) < 1e-15

    def test_hand_value(self):
        a = Image(np.array([[[0.0], [0.0]]]))
        b = Image(np.array([[[0.3], [0.4]]]))
        assert abs(mse(a, b) - 0.125) < 1e-12

    def test_symmetry_exact(self):
        a, b = rand_pair(2)
        assert mse(a, b) == mse(b, a)

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            mse(rand_image(1, 4, 4), rand_image(1, 5, 5))


class TestPsnr:
    def test_constant_difference_01_is_20db(self):
        a = Image(np.zeros((8, 8, 3)))
        b = Image(np.full((8, 8, 3), 0.1))
        assert abs(psnr(a, b) - 20.0) < 1e-9

    def test_constant_difference_001_is_40db(self):
        a = Image(np.zeros((8, 8, 3)))
        b = Image(np.full((8, 8, 3), 0.01))
        assert abs(psnr(a, b) - 40.0) < 1e-9

    def test_identical_images_are_infinite(self):
        a = rand_image(3)
        assert psnr(a, a) == math.inf

    def test_monotone_decreasing_in_perturbation(self):
        a = rand_image(4, 10, 10)
        values = []
        for k in range(1, 6):
            b = Image(a.data + 0.01 * k)
            values.append(psnr(a, b))
        assert all(x > y for x, y in zip(values, values[1:]))


class TestSsimParams:
    def test_even_window_rejected(self):
        with pytest.raises(InvalidInputError):
            SsimParams(window_size=10)

    def test_zero_k1_rejected(self):
        with pytest.raises(InvalidInputError):
            SsimParams(k1=0.0)


class TestSsim:
    def test_identical_images_score_one(self):
        a = rand_image(5, 16, 16)
        assert abs(ssim(a, a) - 1.0) < 1e-12

    def test_constant_pair_scores_one(self):
        a = Image(np.full((12, 12, 1), 0.5))
        b = Image(np.full((12, 12, 1), 0.5))
        assert abs(ssim(a, b) - 1.0) < 1e-12

    def test_matches_bruteforce_single_channel(self):
        for seed in range(3):
            rng = stream(seed, 70)
            a = Image(rng.random((16, 16, 1)))
            b = Image(rng.random((16, 16, 1)))
            expected = ssim_bruteforce(a.data[:, :, 0], b.data[:, :, 0], SsimParams())
            assert abs(ssim(a, b) - expected) < 1e-9

    def test_matches_bruteforce_color(self):
        for seed in range(2):
            a, b = rand_pair(seed, 16, 16)
            expected = ssim_bruteforce(
                to_grayscale(a).data[:, :, 0], to_grayscale(b).data[:, :, 0], SsimParams()
            )
            assert abs(ssim(a, b) - expected) < 1e-9

    def test_symmetry_exact(self):
        a, b = rand_pair(6, 14, 14)
        assert ssim(a, b) == ssim(b, a)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31))
    def test_bounded(self, seed):
        a, b = rand_pair(seed, 12, 12)
        assert -1.0 <= ssim(a, b) <= 1.0

    def test_image_smaller_than_window_rejected(self):
        with pytest.raises(InvalidInputError):
            ssim(rand_image(1, 8, 8), rand_image(1, 8, 8))

    def test_small_window_on_small_image(self):
        a, b = rand_pair(7, 8, 8)
        params = SsimParams(window_size=5)
        expected = ssim_bruteforce(
            to_grayscale(a).data[:, :, 0], to_grayscale(b).data[:, :, 0], params
        )
        assert abs(ssim(a, b, params) - expected) < 1e-9
