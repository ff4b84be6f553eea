"""Quantized tensor-train (MPS/MPO) representations and the TT Burgers solver."""

from .core import *  # noqa: F401,F403
from .core import __all__ as _core_all
from .operators import derivative_mpos, shift_mpo
from .solver import TtDiagnostics, TtSolveConfig, tt_rhs, tt_solve, tt_step
from .textio import dump_tt, dumps_tt, load_tt, loads_tt

__all__ = [
    *_core_all,
    "TtDiagnostics",
    "TtSolveConfig",
    "derivative_mpos",
    "dump_tt",
    "dumps_tt",
    "load_tt",
    "loads_tt",
    "shift_mpo",
    "tt_rhs",
    "tt_solve",
    "tt_step",
]
