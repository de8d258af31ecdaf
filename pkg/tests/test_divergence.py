"""Divergence computations against enumeration oracles."""

import math

import numpy as np
import pytest

from mallows_block.divergence import (
    kl,
    tv_coordinatewise_bound,
    tv_exact,
    tv_monte_carlo,
    tv_sum_stats,
)
from mallows_block.model import BlockPartition, MallowsBlockModel
from mallows_block.validation import CapabilityError

from oracles import enumerate_model_pmf, kl_of_pmfs, random_partition, tv_of_pmfs


def oracle_pair(model_a, model_b):
    pa = enumerate_model_pmf(
        model_a.center, model_a.phis, [list(b) for b in model_a.partition.blocks]
    )
    pb = enumerate_model_pmf(
        model_b.center, model_b.phis, [list(b) for b in model_b.partition.blocks]
    )
    return pa, pb


def random_pair_same_center(rng, m):
    blocks = random_partition(m, rng)
    part = BlockPartition(blocks)
    center = rng.permutation(m) + 1
    pa = rng.uniform(0.05, 0.99, size=part.d)
    pb = rng.uniform(0.05, 0.99, size=part.d)
    return (
        MallowsBlockModel(center, pa, part),
        MallowsBlockModel(center, pb, part),
    )


class TestKl:
    def test_identical_models(self):
        model = MallowsBlockModel([1, 2, 3, 4], 0.5)
        res = kl(model, model)
        assert res.value == 0.0
        assert res.method == "closed_form"

    def test_single_parameter_matches_enumeration(self):
        a = MallowsBlockModel([1, 2, 3], 0.5)
        b = MallowsBlockModel([1, 2, 3], 0.25)
        pa, pb = oracle_pair(a, b)
        assert kl(a, b).value == pytest.approx(kl_of_pmfs(pa, pb), abs=1e-12)

    def test_blockwise_sum_equals_full_enumeration(self):
        part = BlockPartition([[1, 3], [2, 4]])
        a = MallowsBlockModel([1, 2, 3, 4], [0.5, 0.8], part)
        b = MallowsBlockModel([1, 2, 3, 4], [0.3, 0.6], part)
        pa, pb = oracle_pair(a, b)
        assert kl(a, b).value == pytest.approx(kl_of_pmfs(pa, pb), abs=1e-10)

    def test_closed_form_on_many_random_pairs(self):
        rng = np.random.default_rng(42)
        pairs = 0
        while pairs < 50:
            m = int(rng.integers(2, 7))
            a, b = random_pair_same_center(rng, m)
            pa, pb = oracle_pair(a, b)
            expected = kl_of_pmfs(pa, pb)
            assert kl(a, b).value == pytest.approx(expected, abs=1e-10)
            pairs += 1

    def test_differing_centers_uses_enumeration(self):
        a = MallowsBlockModel([1, 2, 3, 4], 0.5)
        b = MallowsBlockModel([2, 1, 3, 4], 0.5)
        res = kl(a, b)
        assert res.method == "enumeration"
        pa, pb = oracle_pair(a, b)
        assert res.value == pytest.approx(kl_of_pmfs(pa, pb), abs=1e-10)

    def test_asymmetry_exists(self):
        part = BlockPartition.single(4)
        a = MallowsBlockModel([1, 2, 3, 4], 0.2, part)
        b = MallowsBlockModel([1, 2, 3, 4], 0.9, part)
        assert kl(a, b).value != pytest.approx(kl(b, a).value)

    def test_absolute_continuity_failure_is_infinite(self):
        a = MallowsBlockModel([1, 2, 3], 0.5)
        b = MallowsBlockModel([1, 2, 3], 0.0)
        assert kl(a, b).value == math.inf
        # reverse direction is finite: point mass against full support
        assert kl(b, a).value == pytest.approx(math.log(2.625))

    def test_enumeration_guard(self):
        a = MallowsBlockModel(np.arange(1, 13), 0.5)
        center_b = np.arange(1, 13)
        center_b[[0, 1]] = center_b[[1, 0]]
        b = MallowsBlockModel(center_b, 0.5)
        with pytest.raises(CapabilityError):
            kl(a, b)

    def test_partition_mismatch_rejected(self):
        a = MallowsBlockModel([1, 2, 3, 4], [0.5, 0.5], BlockPartition([[1, 2], [3, 4]]))
        b = MallowsBlockModel([1, 2, 3, 4], [0.5, 0.5], BlockPartition([[1, 3], [2, 4]]))
        with pytest.raises(ValueError):
            kl(a, b)


class TestTvExact:
    def test_identical_models(self):
        model = MallowsBlockModel([2, 1, 3], 0.7)
        assert tv_exact(model, model).value == 0.0

    def test_point_mass_versus_uniform(self):
        for m in (3, 4, 5):
            a = MallowsBlockModel(np.arange(1, m + 1), 0.0)
            b = MallowsBlockModel(np.arange(1, m + 1), 1.0)
            assert tv_exact(a, b).value == pytest.approx(1 - 1 / math.factorial(m))

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            m = int(rng.integers(2, 6))
            a, b = random_pair_same_center(rng, m)
            pa, pb = oracle_pair(a, b)
            assert tv_exact(a, b).value == pytest.approx(tv_of_pmfs(pa, pb), abs=1e-12)

    def test_differing_centers_match_oracle(self):
        a = MallowsBlockModel([1, 2, 3, 4], 0.5)
        b = MallowsBlockModel([1, 3, 2, 4], 0.4)
        pa, pb = oracle_pair(a, b)
        assert tv_exact(a, b).value == pytest.approx(tv_of_pmfs(pa, pb), abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(8)
        a, b = random_pair_same_center(rng, 5)
        assert tv_exact(a, b).value == pytest.approx(tv_exact(b, a).value, abs=1e-14)

    def test_guard_beyond_limit(self):
        a = MallowsBlockModel(np.arange(1, 13), 0.5)
        b = MallowsBlockModel(np.arange(1, 13), 0.6)
        with pytest.raises(CapabilityError):
            tv_exact(a, b)


class TestPinskerAndSandwich:
    def test_pinsker_on_grid(self):
        rng = np.random.default_rng(10)
        for _ in range(30):
            m = int(rng.integers(2, 7))
            a, b = random_pair_same_center(rng, m)
            tv = tv_exact(a, b).value
            divergence = kl(a, b).value
            assert tv * tv <= 0.5 * divergence + 1e-12

    def test_sum_stat_below_exact_below_coordinatewise(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            m = int(rng.integers(2, 7))
            a, b = random_pair_same_center(rng, m)
            exact = tv_exact(a, b).value
            lower = max(tv_sum_stats(a, b, i).value for i in range(a.d))
            upper = tv_coordinatewise_bound(a, b).value
            assert lower <= exact + 1e-12
            assert exact <= upper + 1e-12


class TestTvSumStats:
    def test_identical_parameters_zero(self):
        part = BlockPartition([[1, 2], [3, 4, 5]])
        a = MallowsBlockModel(np.arange(1, 6), [0.5, 0.7], part)
        assert tv_sum_stats(a, a, 1).value == 0.0

    def test_scales_to_large_m(self):
        m = 600
        a = MallowsBlockModel(np.arange(1, m + 1), 0.5)
        b = MallowsBlockModel(np.arange(1, m + 1), 0.45)
        value = tv_sum_stats(a, b, 0).value
        assert 0.0 < value <= 1.0

    def test_requires_common_center(self):
        a = MallowsBlockModel([1, 2, 3], 0.5)
        b = MallowsBlockModel([2, 1, 3], 0.5)
        with pytest.raises(ValueError):
            tv_sum_stats(a, b, 0)

    def test_single_block_equals_exact(self):
        # with one block the statistic is sufficient, so no information is lost
        a = MallowsBlockModel(np.arange(1, 7), 0.5)
        b = MallowsBlockModel(np.arange(1, 7), 0.25)
        assert tv_sum_stats(a, b, 0).value == pytest.approx(tv_exact(a, b).value, abs=1e-12)


class TestTvMonteCarlo:
    def test_identical_models_near_zero(self):
        model = MallowsBlockModel(np.arange(1, 6), 0.5)
        res = tv_monte_carlo(model, model, 2000, random_state=0)
        assert res.value == pytest.approx(0.0, abs=1e-12)

    def test_within_three_se_of_exact(self):
        a = MallowsBlockModel(np.arange(1, 6), 0.5)
        b = MallowsBlockModel(np.arange(1, 6), 0.8)
        exact = tv_exact(a, b).value
        res = tv_monte_carlo(a, b, 100_000, random_state=1)
        assert res.method == "monte_carlo"
        assert abs(res.value - exact) <= 3 * res.error_bar

    def test_large_m_in_range(self):
        a = MallowsBlockModel(np.arange(1, 51), 0.5)
        b = MallowsBlockModel(np.arange(1, 51), 0.55)
        res = tv_monte_carlo(a, b, 5000, random_state=2)
        assert 0.0 <= res.value <= 1.0
        assert res.error_bar is not None

    def test_coupling_fallback_when_support_shrinks(self):
        part = BlockPartition([[1, 2], [3, 4]])
        a = MallowsBlockModel([1, 2, 3, 4], [0.0, 0.5], part)
        b = MallowsBlockModel([1, 2, 3, 4], [0.5, 0.5], part)
        res = tv_monte_carlo(a, b, 50_000, random_state=3)
        assert res.method == "monte_carlo_coupling"
        exact = tv_exact(a, b).value
        assert abs(res.value - exact) <= 3 * res.error_bar + 1e-3

    def test_rejects_tiny_sample(self):
        model = MallowsBlockModel([1, 2, 3], 0.5)
        with pytest.raises(ValueError):
            tv_monte_carlo(model, model, 10, random_state=0)


class TestCoordinatewiseBound:
    def test_identical_zero(self):
        model = MallowsBlockModel(np.arange(1, 6), 0.4)
        assert tv_coordinatewise_bound(model, model).value == 0.0

    def test_caps_at_one(self):
        a = MallowsBlockModel(np.arange(1, 9), 0.0)
        b = MallowsBlockModel(np.arange(1, 9), 1.0)
        assert tv_coordinatewise_bound(a, b).value == 1.0

    def test_at_least_sum_stat_lower_bound(self):
        rng = np.random.default_rng(20)
        for _ in range(10):
            m = int(rng.integers(3, 8))
            a, b = random_pair_same_center(rng, m)
            upper = tv_coordinatewise_bound(a, b).value
            for i in range(a.d):
                assert tv_sum_stats(a, b, i).value <= upper + 1e-12
