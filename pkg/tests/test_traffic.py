"""Kernel traffic traces against the closed-form word counts."""

import pytest

from hima.dnc import MemoryGeometry
from hima.partition import (
    PartitionSpec,
    content_cost,
    enumerate_partitions,
    linkage_cost,
    read_cost,
)
from hima.tilesim import ArchConfig
from hima.traffic import (
    KERNELS,
    ct_pt_words,
    generate_kernel_trace,
    inter_pt_words,
    kernel_type,
    trace_words,
)


def config_for(rows, word_size, n_tiles, ext, lnk, model="dnc", heads=2):
    return ArchConfig(
        geometry=MemoryGeometry(rows, word_size, heads),
        n_tiles=n_tiles,
        ext_partition=ext,
        linkage_partition=lnk,
        model=model,
    )


def all_partition_pairs(rows, word_size, n_tiles):
    exts = [
        s
        for s in enumerate_partitions(n_tiles)
        if rows % s.block_rows == 0 and word_size % s.block_cols == 0
    ]
    lnks = [
        s
        for s in enumerate_partitions(n_tiles)
        if rows % s.block_rows == 0 and rows % s.block_cols == 0
    ]
    return exts, lnks


class TestClosedFormIdentities:
    @pytest.mark.parametrize("n_tiles", [4, 16])
    def test_content_weighting_pair(self, n_tiles):
        rows, word = 256, 32
        exts, _ = all_partition_pairs(rows, word, n_tiles)
        for ext in exts:
            cfg = config_for(rows, word, n_tiles, ext, PartitionSpec(n_tiles, 1))
            normalize = inter_pt_words(generate_kernel_trace("normalize", cfg))
            similarity = inter_pt_words(generate_kernel_trace("similarity", cfg))
            assert normalize + similarity == content_cost(rows, ext)

    @pytest.mark.parametrize("n_tiles", [4, 16])
    def test_memory_read(self, n_tiles):
        rows, word = 256, 32
        exts, _ = all_partition_pairs(rows, word, n_tiles)
        for ext in exts:
            cfg = config_for(rows, word, n_tiles, ext, PartitionSpec(n_tiles, 1))
            words = inter_pt_words(generate_kernel_trace("memory-read", cfg))
            assert words == read_cost(rows, word, n_tiles, ext)

    @pytest.mark.parametrize("n_tiles", [4, 16])
    def test_forward_backward(self, n_tiles):
        rows, word = 256, 32
        _, lnks = all_partition_pairs(rows, word, n_tiles)
        for lnk in lnks:
            cfg = config_for(rows, word, n_tiles, PartitionSpec(n_tiles, 1), lnk)
            words = inter_pt_words(generate_kernel_trace("forward-backward", cfg))
            assert words == rows * linkage_cost(n_tiles, lnk)

    def test_similarity_row_wise_matches_paper_count(self):
        cfg = config_for(1024, 64, 16, PartitionSpec(16, 1), PartitionSpec(4, 4), heads=4)
        assert inter_pt_words(generate_kernel_trace("similarity", cfg)) == 30
        assert inter_pt_words(generate_kernel_trace("normalize", cfg)) == 0


class TestLocalKernels:
    @pytest.mark.parametrize("kernel", ["retention", "usage", "write-merge", "read-merge"])
    def test_state_kernels_stay_local(self, kernel):
        for ext in enumerate_partitions(16):
            if 256 % ext.block_rows or 32 % ext.block_cols:
                continue
            cfg = config_for(256, 32, 16, ext, PartitionSpec(4, 4))
            assert generate_kernel_trace(kernel, cfg) == []

    def test_single_tile_everything_local(self):
        cfg = config_for(256, 32, 1, PartitionSpec(1, 1), PartitionSpec(1, 1))
        for kernel in KERNELS:
            assert generate_kernel_trace(kernel, cfg) == []


class TestScalarChains:
    def test_allocation_chain(self):
        cfg = config_for(256, 32, 16, PartitionSpec(16, 1), PartitionSpec(4, 4))
        trace = generate_kernel_trace("allocation", cfg)
        assert inter_pt_words(trace) == 15

    def test_precedence_round_trip(self):
        cfg = config_for(256, 32, 16, PartitionSpec(16, 1), PartitionSpec(4, 4))
        trace = generate_kernel_trace("precedence", cfg)
        assert inter_pt_words(trace) == 30

    def test_usage_sort_run_exchange(self):
        cfg = config_for(256, 32, 16, PartitionSpec(16, 1), PartitionSpec(4, 4))
        trace = generate_kernel_trace("usage-sort", cfg)
        assert ct_pt_words(trace) == 2 * 256
        assert inter_pt_words(trace) == 0


class TestGrowthRates:
    def test_linear_kernels_double_with_rows(self):
        # Kernels with O(rows)-scaling traffic under a fixed partition
        # double exactly when rows double.
        for kernel, partition in (("normalize", PartitionSpec(4, 4)), ("linkage", PartitionSpec(4, 4))):
            words = []
            for rows in (64, 128, 256):
                cfg = config_for(rows, 32, 16, PartitionSpec(4, 4), PartitionSpec(4, 4))
                words.append(inter_pt_words(generate_kernel_trace(kernel, cfg)))
            assert words[1] == 2 * words[0]
            assert words[2] == 2 * words[1]

    def test_scalar_kernels_flat_in_rows(self):
        for kernel in ("similarity", "allocation", "precedence"):
            words = set()
            for rows in (64, 128, 256):
                cfg = config_for(rows, 32, 16, PartitionSpec(4, 4), PartitionSpec(4, 4))
                words.add(inter_pt_words(generate_kernel_trace(kernel, cfg)))
            assert len(words) == 1


class TestDistributedMode:
    def test_no_inter_tile_messages(self):
        cfg = config_for(
            256, 32, 16, PartitionSpec(16, 1), PartitionSpec(4, 4), model="dnc-d"
        )
        for kernel in KERNELS:
            trace = generate_kernel_trace(kernel, cfg)
            assert inter_pt_words(trace) == 0

    def test_controller_carries_interfaces_and_results(self):
        cfg = config_for(
            256, 32, 16, PartitionSpec(16, 1), PartitionSpec(4, 4), model="dnc-d"
        )
        assert ct_pt_words(generate_kernel_trace("similarity", cfg)) > 0
        assert ct_pt_words(generate_kernel_trace("read-merge", cfg)) > 0
        assert generate_kernel_trace("usage-sort", cfg) == []


class TestMeta:
    def test_kernel_typing(self):
        assert kernel_type("memory-read") == "access"
        assert kernel_type("linkage") == "state"
        assert sum(1 for k in KERNELS if kernel_type(k) == "access") == 4

    def test_rejects_unknown_kernel(self):
        cfg = config_for(256, 32, 4, PartitionSpec(4, 1), PartitionSpec(2, 2))
        with pytest.raises(ValueError):
            generate_kernel_trace("matmul", cfg)

    def test_trace_word_totals(self):
        cfg = config_for(256, 32, 16, PartitionSpec(16, 1), PartitionSpec(4, 4))
        trace = generate_kernel_trace("memory-read", cfg)
        assert trace_words(trace) == inter_pt_words(trace) + ct_pt_words(trace)
