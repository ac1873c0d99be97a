"""Sorting engine: bitonic network, mesh sort, merge and the cycle model."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hima.sorting import (
    CycleReport,
    SortConfig,
    centralized_baseline_cycles,
    default_dpbs_depth,
    dpbs_sort,
    mdsa_sort,
    parallel_merge,
    two_stage_sort,
)
from hima.scriptgen import Splitmix64


def reference_argsort(values):
    return np.argsort(np.asarray(values, dtype=np.float64), kind="stable")


class TestDpbs:
    def test_sorted_input_unchanged(self):
        values = np.arange(16.0)
        out, perm = dpbs_sort(values, "ascending")
        assert np.array_equal(out, values)
        assert np.array_equal(perm, np.arange(16))

    def test_reversed_input(self):
        values = np.arange(16.0)[::-1]
        out, _ = dpbs_sort(values, "ascending")
        assert np.array_equal(out, np.arange(16.0))

    def test_descending_mode(self):
        values = np.array([3.0, 1.0, 2.0, 1.0])
        out, perm = dpbs_sort(values, "descending")
        assert np.array_equal(out, [3.0, 2.0, 1.0, 1.0])
        # Composite (value, index) key makes the duplicate order fixed.
        assert np.array_equal(perm, [0, 2, 3, 1])

    def test_non_power_of_two_padding(self):
        values = np.array([5.0, -1.0, 3.0])
        out, perm = dpbs_sort(values, "ascending")
        assert np.array_equal(out, [-1.0, 3.0, 5.0])
        assert np.array_equal(perm, [1, 2, 0])

    def test_random_vectors_match_reference(self):
        rng = Splitmix64(404)
        for _ in range(1000):
            values = np.array([rng.uniform() for _ in range(16)])
            out, perm = dpbs_sort(values, "ascending")
            assert np.array_equal(perm, reference_argsort(values))
            assert np.array_equal(out, np.sort(values, kind="stable"))

    def test_rejects_unknown_direction(self):
        with pytest.raises(ValueError):
            dpbs_sort(np.array([1.0]), "sideways")


class TestMdsa:
    def test_paper_cycle_count(self):
        cfg = SortConfig.for_sort(256, 1, dpbs_depth=5)
        values = np.linspace(1.0, 0.0, 256)
        _, _, cycles = mdsa_sort(values, cfg)
        assert cfg.p == 16
        assert cycles == 126

    def test_constant_vector_identity_permutation(self):
        values = np.full(64, 0.5)
        sorted_values, perm, _ = mdsa_sort(values)
        assert np.array_equal(sorted_values, values)
        assert np.array_equal(perm, np.arange(64))

    def test_random_vectors_match_reference(self):
        rng = Splitmix64(11)
        for _ in range(30):
            values = np.array([rng.uniform() for _ in range(256)])
            sorted_values, perm, _ = mdsa_sort(values)
            assert np.array_equal(perm, reference_argsort(values))
            assert np.array_equal(sorted_values, np.sort(values, kind="stable"))

    def test_duplicate_heavy_input(self):
        rng = Splitmix64(7)
        values = np.array([float(int(rng.uniform() * 4)) for _ in range(81)])
        _, perm, _ = mdsa_sort(values)
        assert np.array_equal(perm, reference_argsort(values))


class TestParallelMerge:
    def test_paper_cycle_count(self):
        cfg = SortConfig.for_sort(1024, 4, dpbs_depth=5, pms_depth=7)
        runs = []
        for tile in range(4):
            values = np.sort(np.linspace(0, 1, 256) ** 2)
            runs.append((values, np.arange(tile * 256, (tile + 1) * 256)))
        merged, _, cycles = parallel_merge(runs, cfg)
        assert cycles == 263
        assert np.all(np.diff(merged) >= 0)

    def test_single_run_passthrough(self):
        cfg = SortConfig.for_sort(8, 1, pms_depth=3)
        values = np.arange(8.0)
        merged, idx, cycles = parallel_merge([(values, np.arange(8))], cfg)
        assert np.array_equal(merged, values)
        assert np.array_equal(idx, np.arange(8))
        assert cycles == 8 + 3

    def test_random_runs_match_reference(self):
        rng = Splitmix64(55)
        cfg = SortConfig.for_sort(64, 4)
        runs = []
        all_values = []
        for tile in range(4):
            chunk = np.array([rng.uniform() for _ in range(16)])
            order = np.argsort(chunk, kind="stable")
            runs.append((chunk[order], order + tile * 16))
            all_values.append(chunk)
        merged, idx, _ = parallel_merge(runs, cfg)
        flat = np.concatenate(all_values)
        assert np.array_equal(idx, reference_argsort(flat))
        assert np.array_equal(merged, np.sort(flat, kind="stable"))

    def test_rejects_unsorted_run(self):
        cfg = SortConfig.for_sort(4, 1)
        with pytest.raises(ValueError):
            parallel_merge([(np.array([2.0, 1.0, 3.0, 4.0]), np.arange(4))], cfg)


class TestTwoStage:
    def test_paper_total(self):
        values = np.linspace(1, 0, 1024)
        _, report = two_stage_sort(values, 4, dpbs_depth=5, pms_depth=7)
        assert report == CycleReport(126, 263, 389)

    def test_single_tile_skips_merge(self):
        values = np.linspace(1, 0, 1024)
        _, report = two_stage_sort(values, 1, dpbs_depth=5)
        assert report == CycleReport(222, 0, 222)

    @given(
        st.lists(st.floats(0, 1, allow_nan=False), min_size=8, max_size=8),
        st.sampled_from([1, 2, 4, 8]),
    )
    @settings(max_examples=150, deadline=None)
    def test_matches_reference_argsort(self, values, n_tiles):
        values = np.array(values)
        perm, _ = two_stage_sort(values, n_tiles)
        assert np.array_equal(perm, reference_argsort(values))

    def test_exhaustive_small_inputs(self):
        for values in itertools.product(range(3), repeat=6):
            arr = np.array(values, dtype=np.float64)
            for n_tiles in (1, 2, 3, 6):
                perm, _ = two_stage_sort(arr, n_tiles)
                assert np.array_equal(perm, reference_argsort(arr)), (values, n_tiles)

    def test_large_random_matches(self):
        rng = Splitmix64(87)
        values = np.array([rng.uniform() for _ in range(1024)])
        for n_tiles in (1, 4, 16):
            perm, _ = two_stage_sort(values, n_tiles, dpbs_depth=5, pms_depth=7)
            assert np.array_equal(perm, reference_argsort(values))

    def test_cycles_do_not_depend_on_data(self):
        rng = Splitmix64(13)
        a = np.array([rng.uniform() for _ in range(64)])
        b = np.array([rng.uniform() for _ in range(64)])
        _, rep_a = two_stage_sort(a, 4)
        _, rep_b = two_stage_sort(b, 4)
        assert rep_a == rep_b

    def test_rejects_indivisible(self):
        with pytest.raises(ValueError):
            two_stage_sort(np.arange(10.0), 4)


class TestCycleModel:
    def test_default_depth_caps_at_paper_value(self):
        assert default_dpbs_depth(16) == 5
        assert default_dpbs_depth(4) == 3
        assert default_dpbs_depth(2) == 1
        assert default_dpbs_depth(32) == 5

    def test_baseline(self):
        assert centralized_baseline_cycles(1024) == 10240
        assert centralized_baseline_cycles(1) == 1

    def test_speedup_factor_about_26x(self):
        values = np.linspace(0, 1, 1024)
        _, report = two_stage_sort(values, 4, dpbs_depth=5, pms_depth=7)
        speedup = centralized_baseline_cycles(1024) / report.total_cycles
        assert 26.0 < speedup < 26.5
