"""Memory-unit reference model and tiled-accelerator simulator."""

from .dnc import (
    InterfaceInput,
    MemoryGeometry,
    MemoryState,
    StepOutput,
    dnc_step,
    zero_state,
)
from .approx import AffineTable, SkimConfig, build_exp_table, softmax_pla
from .partition import PartitionSpec, optimal_external, optimal_linkage
from .sorting import CycleReport, SortConfig, two_stage_sort
from .noc import Message, NocParams, NocReport, Topology, build_topology, simulate
from .tilesim import ArchConfig, DncdConfig, SimReport, run_dnc, run_dncd, speedup_sweep

__all__ = [
    "AffineTable",
    "ArchConfig",
    "CycleReport",
    "DncdConfig",
    "InterfaceInput",
    "MemoryGeometry",
    "MemoryState",
    "Message",
    "NocParams",
    "NocReport",
    "PartitionSpec",
    "SimReport",
    "SkimConfig",
    "SortConfig",
    "StepOutput",
    "Topology",
    "build_exp_table",
    "build_topology",
    "dnc_step",
    "optimal_external",
    "optimal_linkage",
    "run_dnc",
    "run_dncd",
    "simulate",
    "softmax_pla",
    "speedup_sweep",
    "two_stage_sort",
    "zero_state",
]

__version__ = "0.1.0"
