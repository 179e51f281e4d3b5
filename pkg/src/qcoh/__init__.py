"""
qcoh - Exact quantum cohomology for toric spaces and local curves.

This package builds equivariant I-functions, factors them into J-functions,
reads off mirror maps and Gromov-Witten invariants, and derives quantum
differential systems, all in exact rational arithmetic.
"""

from .bigquantum import BigQuantumResult, big_quantum
from .birkhoff import ScalarBirkhoff, birkhoff_matrix, birkhoff_scalar, build_fundamental
from .cohomology import CohomologyRing, RingPresentation, build_ring, linear_substitute
from .config import RunConfig, load_geometry, load_run_config
from .connection import ConnMatrix, DiffOperator, find_annihilators, to_flat
from .errors import QcohError
from .formal import BiLaurent, MatrixSeries, QSeries, ScalarSeries
from .ifunction import GeometrySpec, Twist, build_i
from .localization import LocConfig, assemble_F, brute_force_F
from .mirror import GWOutput, InvariantTable, MirrorData, extract_mirror, gw_readout
from .presets import get_preset
from .types import Window

__version__ = "0.1.0"
__all__ = [
    "BiLaurent",
    "BigQuantumResult",
    "CohomologyRing",
    "ConnMatrix",
    "DiffOperator",
    "GWOutput",
    "GeometrySpec",
    "InvariantTable",
    "LocConfig",
    "MatrixSeries",
    "MirrorData",
    "QSeries",
    "QcohError",
    "RingPresentation",
    "RunConfig",
    "ScalarBirkhoff",
    "ScalarSeries",
    "Twist",
    "Window",
    "assemble_F",
    "big_quantum",
    "birkhoff_matrix",
    "birkhoff_scalar",
    "brute_force_F",
    "build_fundamental",
    "build_i",
    "build_ring",
    "extract_mirror",
    "find_annihilators",
    "get_preset",
    "gw_readout",
    "linear_substitute",
    "load_geometry",
    "load_run_config",
    "to_flat",
]
