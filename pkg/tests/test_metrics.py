import itertools
import math

import numpy as np
import pytest

from gfsc.errors import ParameterError
from gfsc.metrics import (accuracy, contingency, fisher_score, hungarian_assign, mean_image_scores,
                          mean_pairwise_fisher, nmi, psnr, purity, ssim)


def brute_accuracy(pred, truth):
    pred_ids, truth_ids = np.unique(pred), np.unique(truth)
    s = max(pred_ids.size, truth_ids.size)
    best = 0
    for perm in itertools.permutations(range(s), pred_ids.size):
        mapping = dict(zip(pred_ids, perm))
        mapped = np.array([mapping[p] for p in pred])
        truth_idx = np.searchsorted(truth_ids, truth)
        best = max(best, int(np.sum(mapped == truth_idx)))
    return best / len(pred)


class TestHungarian:
    def test_identity_cost(self):
        cost = 1 - np.eye(5)
        np.testing.assert_array_equal(hungarian_assign(cost), np.arange(5))

    def test_two_by_two(self):
        perm = hungarian_assign(np.array([[1.0, 2.0], [2.0, 1.0]]))
        np.testing.assert_array_equal(perm, [0, 1])

    def test_against_all_permutations(self, rng):
        for _ in range(20):
            cost = rng.integers(0, 20, (6, 6)).astype(float)
            perm = hungarian_assign(cost)
            best = min(sum(cost[i, p[i]] for i in range(6)) for p in itertools.permutations(range(6)))
            assert cost[np.arange(6), perm].sum() == best
            assert sorted(perm.tolist()) == list(range(6))

    def test_empty(self):
        assert hungarian_assign(np.zeros((0, 0))).size == 0

    def test_rejects_non_square(self):
        with pytest.raises(ParameterError):
            hungarian_assign(np.zeros((2, 3)))

    def test_rejects_nan(self):
        with pytest.raises(ParameterError):
            hungarian_assign(np.array([[np.nan]]))


class TestAccuracy:
    def test_perfect(self):
        assert accuracy([0, 1, 2, 2], [0, 1, 2, 2]) == 1.0

    def test_relabeled(self):
        assert accuracy([5, 5, 3, 9], [0, 0, 1, 2]) == 1.0

    def test_half(self):
        assert accuracy([0, 1, 0, 1], [0, 0, 1, 1]) == 0.5

    def test_more_clusters_than_classes(self):
        assert accuracy([0, 1, 2, 2], [0, 0, 1, 1]) == 0.75

    def test_against_exhaustive(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 25))
            pred = rng.integers(0, int(rng.integers(1, 6)), n)
            truth = rng.integers(0, int(rng.integers(1, 6)), n)
            assert accuracy(pred, truth) == brute_accuracy(pred, truth)

    def test_length_mismatch(self):
        with pytest.raises(ParameterError):
            accuracy([0, 1], [0])

    def test_empty(self):
        with pytest.raises(ParameterError):
            accuracy([], [])


class TestNmi:
    def test_identical(self):
        assert nmi([0, 0, 1, 1, 2], [0, 0, 1, 1, 2]) == pytest.approx(1.0, abs=1e-15)

    def test_constant_prediction(self):
        assert nmi([0, 0, 0, 0], [0, 0, 1, 1]) == 0.0

    def test_both_single_cluster(self):
        assert nmi([3, 3, 3], [1, 1, 1]) == 1.0

    def test_independent(self):
        assert nmi([0, 1, 0, 1], [0, 0, 1, 1]) == pytest.approx(0.0, abs=1e-15)

    def test_known_value(self):
        # entropies and mutual information written out from the joint table
        pred, truth = [0, 0, 0, 1], [0, 0, 1, 1]
        hp = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25))
        ht = math.log(2)
        mi = 0.5 * math.log(0.5 / (0.75 * 0.5)) + 0.25 * math.log(0.25 / (0.75 * 0.5)) \
            + 0.25 * math.log(0.25 / (0.25 * 0.5))
        assert nmi(pred, truth) == pytest.approx(mi / math.sqrt(hp * ht), rel=1e-12)

    def test_symmetric_exactly(self, rng):
        for _ in range(50):
            a = rng.integers(0, 4, 30)
            b = rng.integers(0, 5, 30)
            assert nmi(a, b) == nmi(b, a)

    def test_relabel_invariant(self, rng):
        a = rng.integers(0, 4, 40)
        b = rng.integers(0, 3, 40)
        perm = rng.permutation(10)
        assert nmi(perm[a], b) == pytest.approx(nmi(a, b), abs=1e-14)
        assert nmi(a, perm[b]) == pytest.approx(nmi(a, b), abs=1e-14)

    def test_range(self, rng):
        for _ in range(30):
            v = nmi(rng.integers(0, 3, 20), rng.integers(0, 3, 20))
            assert 0.0 <= v <= 1.0


class TestPurity:
    def test_perfect(self):
        assert purity([1, 1, 0], [0, 0, 1]) == 1.0

    def test_by_hand(self):
        assert purity([0, 0, 1, 1], [0, 0, 0, 1]) == 0.75

    def test_single_cluster(self):
        assert purity([0] * 5, [0, 1, 1, 2, 1]) == 0.6

    def test_relabel_invariant(self, rng):
        a = rng.integers(0, 4, 40)
        b = rng.integers(0, 3, 40)
        assert purity(a + 10, b * 7) == purity(a, b)
        assert accuracy(a + 10, b * 7) == accuracy(a, b)

    def test_contingency(self):
        C = contingency([0, 0, 1], [2, 3, 3])
        np.testing.assert_array_equal(C, [[1, 1], [0, 1]])


class TestFisher:
    def test_identical_means(self, rng):
        X = rng.standard_normal((10, 3))
        assert fisher_score(X, X[::-1]) == 0.0

    def test_one_dimensional(self):
        # means 0 and 1, biased variances 0.5 each
        a = np.array([[-0.5 ** 0.5], [0.5 ** 0.5]])
        b = a + 1.0
        assert fisher_score(a, b) == pytest.approx(1.0, rel=1e-8)

    def test_symmetric(self, rng):
        a = rng.standard_normal((20, 4))
        b = rng.standard_normal((15, 4)) + 1
        assert abs(fisher_score(a, b) - fisher_score(b, a)) <= 1e-10

    def test_scale_invariant(self, rng):
        a = rng.standard_normal((20, 4))
        b = rng.standard_normal((15, 4)) + 0.5
        assert fisher_score(3.7 * a, 3.7 * b) == pytest.approx(fisher_score(a, b), rel=1e-9)

    def test_rank_deficient_is_finite(self, rng):
        a = rng.standard_normal((3, 10))
        b = rng.standard_normal((3, 10)) + 1
        assert math.isfinite(fisher_score(a, b))

    def test_pairwise_mean(self, rng):
        X = rng.standard_normal((30, 2))
        y = np.repeat([0, 1, 2], 10)
        X[y == 1] += 2
        X[y == 2] -= 2
        parts = [X[y == c] for c in range(3)]
        expected = np.mean([fisher_score(parts[0], parts[1]), fisher_score(parts[0], parts[2]),
                            fisher_score(parts[1], parts[2])])
        assert mean_pairwise_fisher(X, y) == pytest.approx(expected, rel=1e-14)

    def test_pairwise_needs_two_classes(self):
        with pytest.raises(ParameterError):
            mean_pairwise_fisher(np.ones((3, 2)), [0, 0, 0])

    def test_empty_class(self):
        with pytest.raises(ParameterError):
            fisher_score(np.ones((0, 2)), np.ones((2, 2)))


class TestPsnr:
    def test_identical_is_inf(self, rng):
        img = rng.random((8, 8))
        assert psnr(img, img) == math.inf

    def test_single_pixel(self):
        assert psnr(np.array([[0.0]]), np.array([[0.5]]), data_range=1.0) == pytest.approx(6.0206, abs=1e-4)

    def test_decreases_with_noise(self, rng):
        ref = rng.random((16, 16))
        noise = rng.standard_normal((16, 16))
        values = [psnr(ref, ref + s * noise, 1.0) for s in (0.01, 0.05, 0.2)]
        assert values[0] > values[1] > values[2]

    def test_constant_reference_needs_range(self):
        with pytest.raises(ParameterError):
            psnr(np.zeros((2, 2)), np.ones((2, 2)))

    def test_shape_mismatch(self):
        with pytest.raises(ParameterError):
            psnr(np.zeros((2, 2)), np.zeros((2, 3)), 1.0)


class TestSsim:
    def test_identical(self, rng):
        img = rng.random((16, 16))
        assert ssim(img, img) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("shape", [(16, 16), (5, 5)])
    def test_constant_images(self, shape):
        c, d, L = 0.3, 0.2, 1.0
        C1 = (0.01 * L) ** 2
        expected = (2 * c * (c + d) + C1) / (c * c + (c + d) ** 2 + C1)
        got = ssim(np.full(shape, c), np.full(shape, c + d), data_range=L)
        assert got == pytest.approx(expected, rel=1e-9)

    def test_noise_lowers_score(self, rng):
        ref = rng.random((16, 16))
        low = ssim(ref, ref + 0.05 * rng.standard_normal((16, 16)), 1.0)
        high = ssim(ref, ref + 0.3 * rng.standard_normal((16, 16)), 1.0)
        assert 1.0 > low > high

    def test_range(self, rng):
        for _ in range(10):
            v = ssim(rng.random((12, 12)), rng.random((12, 12)), 1.0)
            assert -1.0 <= v <= 1.0

    def test_rejects_1d(self):
        with pytest.raises(ParameterError):
            ssim(np.ones(5), np.ones(5), 1.0)


def test_mean_image_scores_skips_infinite_psnr(rng):
    a = rng.random((4, 4))
    b = a + 0.1
    p, s = mean_image_scores([a, a], [a, b], 1.0)
    assert p == pytest.approx(psnr(a, b, 1.0))
    assert s == pytest.approx((1.0 + ssim(a, b, 1.0)) / 2)
