"""Command-line harness: experiment configs in, CSV/JSON artifacts out.

Subcommands:

* ``reference-run``  step the reference memory unit over a seeded random
  script, checking state invariants every step;
* ``plan-partition`` emit the partition cost surfaces and the optima;
* ``sort-bench``     two-stage sort cycle counts vs the N log2 N baseline;
* ``sim``            run the tiled simulator (centralized or distributed)
  and write the kernel breakdown plus a JSON summary;
* ``noc-sweep``      speedup scaling across topologies and tile counts.

Exit codes: 0 success, 1 check failure, 2 usage error. All outputs are
byte-deterministic for a fixed seed: CSV files use LF line endings, UTF-8
and ``repr`` float formatting.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import dnc, scriptgen
from .partition import (
    PartitionSpec,
    content_cost,
    linkage_cost,
    optimal_external,
    optimal_linkage,
    read_cost,
    sweep_costs,
)
from .sorting import SortConfig, centralized_baseline_cycles, two_stage_sort
from .tilesim import ArchConfig, DncdConfig, EquivalenceError, run_dnc, run_dncd, speedup_sweep
from .traffic import kernel_type

USAGE_ERROR = 2
CHECK_ERROR = 1


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_defaults(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _resolve(args, config: dict, key: str, default):
    flag = getattr(args, key.replace("-", "_"), None)
    if flag is not None:
        return flag
    return config.get(key, default)


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part]


def _str_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def cmd_reference_run(args) -> int:
    cfg = _load_defaults(args.config)
    rows = _resolve(args, cfg, "rows", 64)
    word_size = _resolve(args, cfg, "word-size", 8)
    read_heads = _resolve(args, cfg, "read-heads", 2)
    steps = _resolve(args, cfg, "steps", 10)
    if rows <= 0 or word_size <= 0 or read_heads <= 0 or steps <= 0:
        print("reference-run: sizes and steps must be positive", file=sys.stderr)
        return USAGE_ERROR
    if rows <= word_size:
        print("reference-run: rows must exceed word-size", file=sys.stderr)
        return USAGE_ERROR
    geometry = dnc.MemoryGeometry(rows, word_size, read_heads)
    script = scriptgen.random_script(geometry, steps, args.seed)
    state = dnc.zero_state(geometry)
    out_rows = []
    failure_step = None
    for step, inp in enumerate(script):
        state, out = dnc.dnc_step(state, inp)
        violations = dnc.invariant_violations(state)
        status = "ok" if not violations else ";".join(violations)
        out_rows.append(
            [
                step,
                status,
                scriptgen.checksum(state.memory),
                scriptgen.checksum(state.usage),
                scriptgen.checksum(state.precedence),
                scriptgen.checksum(state.linkage),
                scriptgen.checksum(state.write_weighting),
                scriptgen.checksum(state.read_weightings),
                scriptgen.checksum(out.read_vectors),
            ]
        )
        if violations and failure_step is None:
            failure_step = step
    header = [
        "step",
        "status",
        "memory",
        "usage",
        "precedence",
        "linkage",
        "write_weighting",
        "read_weightings",
        "read_vectors",
    ]
    out_dir = Path(args.out)
    if args.format == "json":
        _write_json(
            out_dir / "reference_run.json",
            [dict(zip(header, (_cell(v) for v in row))) for row in out_rows],
        )
    else:
        _write_csv(out_dir / "reference_run.csv", header, out_rows)
    if failure_step is not None:
        print(f"reference-run: invariant violated at step {failure_step}", file=sys.stderr)
        return CHECK_ERROR
    return 0


def cmd_plan_partition(args) -> int:
    cfg = _load_defaults(args.config)
    rows = _resolve(args, cfg, "rows", 1024)
    word_size = _resolve(args, cfg, "word-size", 64)
    tiles = _resolve(args, cfg, "tiles", [1, 4, 8, 16, 32])
    if rows <= 0 or word_size <= 0 or not tiles or min(tiles) < 1:
        print("plan-partition: invalid geometry or tile list", file=sys.stderr)
        return USAGE_ERROR
    sweep_rows = []
    for kernel in ("read", "linkage"):
        for n_t, n_w, n_h, cost, k in sweep_costs(rows, word_size, tiles, kernel):
            sweep_rows.append([n_t, n_w, n_h, cost, k])
    sweep_rows.sort(key=lambda r: (r[4], r[0], r[1]))
    optima = []
    for n_tiles in tiles:
        ext = optimal_external(rows, word_size, n_tiles)
        ext_total = content_cost(rows, ext) + read_cost(rows, word_size, n_tiles, ext)
        optima.append(["external", ext.block_rows, ext.block_cols, float(ext_total)])
        lnk = optimal_linkage(n_tiles, rows=rows)
        optima.append(
            ["linkage", lnk.block_rows, lnk.block_cols, float(linkage_cost(n_tiles, lnk))]
        )
    out_dir = Path(args.out)
    if args.format == "json":
        _write_json(
            out_dir / "partition_sweep.json",
            [
                {"n_t": r[0], "n_w": r[1], "n_h": r[2], "cost": r[3], "kernel": r[4]}
                for r in sweep_rows
            ],
        )
        _write_json(
            out_dir / "partition_optima.json",
            [
                {"kernel": r[0], "n_h": r[1], "n_w": r[2], "cost": r[3]}
                for r in optima
            ],
        )
    else:
        _write_csv(
            out_dir / "partition_sweep.csv",
            ["n_t", "n_w", "n_h", "cost", "kernel"],
            sweep_rows,
        )
        _write_csv(
            out_dir / "partition_optima.csv",
            ["kernel", "n_h", "n_w", "cost"],
            optima,
        )
    return 0


def cmd_sort_bench(args) -> int:
    cfg = _load_defaults(args.config)
    total = _resolve(args, cfg, "total", 1024)
    tiles = _resolve(args, cfg, "tiles", [1, 4, 16])
    dpbs_depth = _resolve(args, cfg, "dpbs-depth", None)
    pms_depth = _resolve(args, cfg, "pms-depth", 7)
    if total < 1 or not tiles or min(tiles) < 1 or any(total % t for t in tiles):
        print("sort-bench: total must be a positive multiple of every tile count", file=sys.stderr)
        return USAGE_ERROR
    rows = []
    rng = scriptgen.Splitmix64(args.seed)
    values = np.array([rng.uniform() for _ in range(total)])
    for n_tiles in tiles:
        sort_cfg = SortConfig.for_sort(total, n_tiles, dpbs_depth, pms_depth)
        perm, report = two_stage_sort(values, n_tiles, dpbs_depth, pms_depth)
        if not np.array_equal(perm, np.argsort(values, kind="stable")):
            print(f"sort-bench: permutation mismatch at n_tiles={n_tiles}", file=sys.stderr)
            return CHECK_ERROR
        rows.append(
            [
                total,
                n_tiles,
                sort_cfg.p,
                sort_cfg.dpbs_depth,
                sort_cfg.pms_depth,
                report.local_cycles,
                report.global_cycles,
                report.total_cycles,
                centralized_baseline_cycles(total),
            ]
        )
    header = [
        "n",
        "n_t",
        "p",
        "d_dpbs",
        "d_pms",
        "local_cycles",
        "global_cycles",
        "total_cycles",
        "baseline_nlogn",
    ]
    out_dir = Path(args.out)
    if args.format == "json":
        _write_json(
            out_dir / "sort_bench.json", [dict(zip(header, row)) for row in rows]
        )
    else:
        _write_csv(out_dir / "sort_bench.csv", header, rows)
    return 0


def _arch_config(args, cfg: dict) -> ArchConfig:
    if args.config and "schema_version" in cfg:
        return ArchConfig.from_dict(cfg)
    geometry = dnc.MemoryGeometry(
        _resolve(args, cfg, "rows", 256),
        _resolve(args, cfg, "word-size", 32),
        _resolve(args, cfg, "read-heads", 2),
    )
    return ArchConfig.auto(
        geometry,
        _resolve(args, cfg, "tiles", 16),
        topology=_resolve(args, cfg, "topology", "hima-multimode"),
        model=_resolve(args, cfg, "model", "dnc"),
        softmax=_resolve(args, cfg, "softmax", "exact"),
    )


def cmd_sim(args) -> int:
    cfg = _load_defaults(args.config)
    try:
        config = _arch_config(args, cfg)
    except ValueError as err:
        print(f"sim: {err}", file=sys.stderr)
        return USAGE_ERROR
    steps = _resolve(args, cfg, "steps", 20)
    if steps < 1:
        print("sim: steps must be positive", file=sys.stderr)
        return USAGE_ERROR
    try:
        if config.model == "dnc":
            script = scriptgen.random_script(config.geometry, steps, args.seed)
            _, report = run_dnc(config, script)
            equivalence = "ok"
        else:
            local = dnc.MemoryGeometry(
                config.geometry.rows // config.n_tiles,
                config.geometry.word_size,
                config.geometry.read_heads,
            )
            scripts = scriptgen.tile_scripts(local, config.n_tiles, steps, args.seed)
            alpha = cfg.get("alpha") or [1.0 / config.n_tiles] * config.n_tiles
            _, report = run_dncd(config, DncdConfig(tuple(alpha)), scripts)
            equivalence = "n/a"
    except EquivalenceError as err:
        print(f"sim: equivalence check failed: {err}", file=sys.stderr)
        return CHECK_ERROR
    out_dir = Path(args.out)
    kernel_rows = [
        [
            kernel,
            kernel_type(kernel),
            stats.compute_cycles,
            stats.traffic_cycles,
            stats.inter_pt_flits,
            stats.ct_pt_flits,
        ]
        for kernel, stats in report.kernels.items()
    ]
    _write_csv(
        out_dir / "sim_kernels.csv",
        ["kernel", "type", "compute_cycles", "traffic_cycles", "inter_pt_flits", "ct_pt_flits"],
        kernel_rows,
    )
    summary = report.to_dict()
    summary["equivalence"] = equivalence
    summary["seed"] = args.seed
    summary["config"] = config.to_dict()
    _write_json(out_dir / "sim_summary.json", summary)
    return 0


def cmd_noc_sweep(args) -> int:
    cfg = _load_defaults(args.config)
    geometry = dnc.MemoryGeometry(
        _resolve(args, cfg, "rows", 1024),
        _resolve(args, cfg, "word-size", 64),
        _resolve(args, cfg, "read-heads", 4),
    )
    tiles = _resolve(args, cfg, "tiles", [1, 4, 8, 16])
    topologies = _resolve(args, cfg, "topologies", ["hima-multimode", "h-tree"])
    models = _resolve(args, cfg, "models", ["dnc", "dnc-d"])
    if not tiles or min(tiles) < 1:
        print("noc-sweep: invalid tile list", file=sys.stderr)
        return USAGE_ERROR
    rows = []
    try:
        for model in models:
            for row in speedup_sweep(geometry, tiles, topologies, model):
                rows.append(
                    [
                        row["model"],
                        row["topology"],
                        row["n_tiles"],
                        row["per_step_cycles"],
                        row["baseline_cycles"],
                        row["speedup"],
                    ]
                )
    except ValueError as err:
        print(f"noc-sweep: {err}", file=sys.stderr)
        return USAGE_ERROR
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    header = ["model", "topology", "n_tiles", "per_step_cycles", "baseline_cycles", "speedup"]
    out_dir = Path(args.out)
    if args.format == "json":
        _write_json(out_dir / "noc_sweep.json", [dict(zip(header, row)) for row in rows])
    else:
        _write_csv(out_dir / "noc_sweep.csv", header, rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hima")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with command parameters")
        p.add_argument("--seed", type=int, default=0, help="64-bit script seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("reference-run", help="step the reference model, checking invariants")
    common(p)
    p.add_argument("--rows", type=int)
    p.add_argument("--word-size", type=int)
    p.add_argument("--read-heads", type=int)
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_reference_run)

    p = sub.add_parser("plan-partition", help="partition cost curves and optima")
    common(p)
    p.add_argument("--rows", type=int)
    p.add_argument("--word-size", type=int)
    p.add_argument("--tiles", type=_int_list)
    p.set_defaults(func=cmd_plan_partition)

    p = sub.add_parser("sort-bench", help="two-stage sort cycles vs baseline")
    common(p)
    p.add_argument("--total", type=int)
    p.add_argument("--tiles", type=_int_list)
    p.add_argument("--dpbs-depth", type=int)
    p.add_argument("--pms-depth", type=int)
    p.set_defaults(func=cmd_sort_bench)

    p = sub.add_parser("sim", help="tiled simulation with kernel breakdown")
    common(p)
    p.add_argument("--rows", type=int)
    p.add_argument("--word-size", type=int)
    p.add_argument("--read-heads", type=int)
    p.add_argument("--tiles", type=int)
    p.add_argument("--topology")
    p.add_argument("--model", choices=("dnc", "dnc-d"))
    p.add_argument("--softmax", choices=("exact", "approx"))
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("noc-sweep", help="speedup scaling across topologies")
    common(p)
    p.add_argument("--rows", type=int)
    p.add_argument("--word-size", type=int)
    p.add_argument("--read-heads", type=int)
    p.add_argument("--tiles", type=_int_list)
    p.add_argument("--topologies", type=_str_list)
    p.add_argument("--models", type=_str_list)
    p.set_defaults(func=cmd_noc_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, OSError) as err:
        print(f"{args.command}: {err}", file=sys.stderr)
        return USAGE_ERROR


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
