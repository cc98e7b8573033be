"""Adaptive multiresolution lattice Boltzmann schemes in one space dimension."""

from .adaptive_solver import AdaptiveLBM, CollisionMode, adaptive_step, run
from .config import PRESETS, RunConfig, preset
from .dyadic_mesh import BoundaryMode, CellIndex, MeshGeometry, MeshTree
from .lbm_core import ReferenceLBM, SchemeSpec
from .metrics import ErrorReport, compression_factor, weighted_l1
from .multiresolution import LeafField, MRCompressor, ThresholdPolicy

__version__ = "0.1.0"

__all__ = [
    "AdaptiveLBM",
    "BoundaryMode",
    "CellIndex",
    "CollisionMode",
    "ErrorReport",
    "LeafField",
    "MRCompressor",
    "MeshGeometry",
    "MeshTree",
    "PRESETS",
    "ReferenceLBM",
    "RunConfig",
    "SchemeSpec",
    "ThresholdPolicy",
    "adaptive_step",
    "compression_factor",
    "preset",
    "run",
    "weighted_l1",
]
