"""Command-line interface: artifacts, determinism, exit codes."""

import json

import pytest

from hima.cli import main


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


class TestReferenceRun:
    def test_writes_one_row_per_step(self, tmp_path):
        code = run(
            tmp_path, "reference-run", "--seed", "42", "--rows", "64",
            "--word-size", "8", "--read-heads", "2", "--steps", "10",
        )
        assert code == 0
        lines = (tmp_path / "reference_run.csv").read_text().splitlines()
        assert len(lines) == 11
        assert lines[0].startswith("step,status,")
        assert all(",ok," in line for line in lines[1:])

    def test_byte_identical_across_runs(self, tmp_path):
        args = ("reference-run", "--seed", "7", "--rows", "32", "--word-size", "4", "--steps", "6")
        run(tmp_path / "a", *args)
        run(tmp_path / "b", *args)
        first = (tmp_path / "a" / "reference_run.csv").read_bytes()
        second = (tmp_path / "b" / "reference_run.csv").read_bytes()
        assert first == second

    def test_bad_geometry_is_usage_error(self, tmp_path):
        assert run(tmp_path, "reference-run", "--rows", "0") == 2
        assert run(tmp_path, "reference-run", "--rows", "8", "--word-size", "8") == 2

    def test_json_format(self, tmp_path):
        code = run(tmp_path, "reference-run", "--steps", "3", "--format", "json")
        assert code == 0
        rows = json.loads((tmp_path / "reference_run.json").read_text())
        assert len(rows) == 3


class TestPlanPartition:
    def test_optima_rows_present(self, tmp_path):
        assert run(tmp_path, "plan-partition") == 0
        optima = (tmp_path / "partition_optima.csv").read_text().splitlines()
        assert optima[0] == "kernel,n_h,n_w,cost"
        assert "linkage,4,4,9.5" in optima
        assert any(line.startswith("external,16,1,") for line in optima)

    def test_sweep_header_pinned(self, tmp_path):
        run(tmp_path, "plan-partition")
        sweep = (tmp_path / "partition_sweep.csv").read_text().splitlines()
        assert sweep[0] == "n_t,n_w,n_h,cost,kernel"

    def test_single_tile_single_row(self, tmp_path):
        run(tmp_path, "plan-partition", "--tiles", "1")
        sweep = (tmp_path / "partition_sweep.csv").read_text().splitlines()
        assert len([l for l in sweep[1:] if l.endswith(",read")]) == 1

    def test_rejects_empty_tiles(self, tmp_path):
        assert run(tmp_path, "plan-partition", "--tiles", "") == 2


class TestSortBench:
    def test_paper_row(self, tmp_path):
        assert run(tmp_path, "sort-bench", "--total", "1024", "--tiles", "1,4", "--dpbs-depth", "5") == 0
        lines = (tmp_path / "sort_bench.csv").read_text().splitlines()
        assert lines[0] == (
            "n,n_t,p,d_dpbs,d_pms,local_cycles,global_cycles,total_cycles,baseline_nlogn"
        )
        assert "1024,4,16,5,7,126,263,389,10240" in lines
        assert "1024,1,32,5,7,222,0,222,10240" in lines

    def test_rejects_indivisible(self, tmp_path):
        assert run(tmp_path, "sort-bench", "--total", "100", "--tiles", "3") == 2

    def test_rejects_empty(self, tmp_path):
        assert run(tmp_path, "sort-bench", "--total", "0") == 2


class TestSim:
    def test_distributed_summary_has_zero_inter_pt(self, tmp_path):
        code = run(
            tmp_path, "sim", "--rows", "256", "--word-size", "32", "--read-heads", "2",
            "--tiles", "16", "--model", "dnc-d", "--steps", "4", "--seed", "3",
        )
        assert code == 0
        summary = json.loads((tmp_path / "sim_summary.json").read_text())
        assert summary["inter_pt_flits"] == 0
        assert summary["config"]["model"] == "dnc-d"
        kernels = (tmp_path / "sim_kernels.csv").read_text().splitlines()
        assert kernels[0] == "kernel,type,compute_cycles,traffic_cycles,inter_pt_flits,ct_pt_flits"
        assert len(kernels) == 14

    def test_single_tile_speedup_one(self, tmp_path):
        code = run(
            tmp_path, "sim", "--rows", "64", "--word-size", "8", "--read-heads", "2",
            "--tiles", "1", "--model", "dnc", "--steps", "3",
        )
        assert code == 0
        summary = json.loads((tmp_path / "sim_summary.json").read_text())
        assert summary["speedup_vs_single"] == 1.0
        assert summary["equivalence"] == "ok"

    def test_config_file_round_trip(self, tmp_path):
        from hima.dnc import MemoryGeometry
        from hima.tilesim import ArchConfig

        cfg = ArchConfig.auto(MemoryGeometry(64, 8, 2), 4, model="dnc")
        config_path = tmp_path / "arch.json"
        config_path.write_text(cfg.to_json())
        code = main(
            ["sim", "--config", str(config_path), "--out", str(tmp_path), "--seed", "1"]
        )
        assert code == 0
        summary = json.loads((tmp_path / "sim_summary.json").read_text())
        assert summary["config"]["n_tiles"] == 4

    def test_rejects_wide_memory(self, tmp_path):
        assert run(tmp_path, "sim", "--rows", "8", "--word-size", "8") == 2


class TestNocSweep:
    def test_compares_topologies(self, tmp_path):
        code = run(
            tmp_path, "noc-sweep", "--rows", "256", "--word-size", "32", "--read-heads", "2",
            "--tiles", "1,4,16", "--topologies", "hima-multimode,h-tree", "--models", "dnc",
        )
        assert code == 0
        lines = (tmp_path / "noc_sweep.csv").read_text().splitlines()
        assert lines[0] == "model,topology,n_tiles,per_step_cycles,baseline_cycles,speedup"
        assert len(lines) == 1 + 6

    def test_byte_identical(self, tmp_path):
        args = (
            "noc-sweep", "--rows", "256", "--word-size", "32", "--read-heads", "2",
            "--tiles", "1,4", "--topologies", "hima-multimode", "--models", "dnc-d",
        )
        run(tmp_path / "a", *args)
        run(tmp_path / "b", *args)
        assert (tmp_path / "a" / "noc_sweep.csv").read_bytes() == (
            tmp_path / "b" / "noc_sweep.csv"
        ).read_bytes()

    def test_rejects_unknown_topology(self, tmp_path):
        assert run(tmp_path, "noc-sweep", "--topologies", "moebius", "--tiles", "4") == 2


class TestParser:
    def test_unknown_command_is_usage_error(self):
        assert main(["frobnicate"]) == 2

    def test_missing_command_is_usage_error(self):
        assert main([]) == 2
