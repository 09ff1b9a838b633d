"""GLSE-GAMP: iterative MIMO downlink precoding with signal constraints."""

from .engine import ChannelMatrix, Diagnostics, GampState, run, sweep
from .errors import (Divergence, GlseGampError, InfeasibleTargets,
                     InvalidConfig, MaxIterations, NoConvergence,
                     NonInvertible, NoSolution, PoleAtOne, SupportViolation)
from .oracle import OracleReport, solve_glse
from .simharness import ExperimentSpec, TrialResult, run_sweep
from .thresholding import PrecoderConfig
from .tuning import (DecoupledModel, RTransform, TuningResult, TuningTargets,
                     decoupled_solve, phi_tilde, q_tilde, rayleigh,
                     rayleigh_r_transform, solve_papr, solve_tas)

__version__ = "1.0.0"

__all__ = [
    "ChannelMatrix", "Diagnostics", "GampState", "run", "sweep",
    "Divergence", "GlseGampError", "InfeasibleTargets", "InvalidConfig",
    "MaxIterations", "NoConvergence", "NonInvertible", "NoSolution",
    "PoleAtOne", "SupportViolation",
    "OracleReport", "solve_glse",
    "ExperimentSpec", "TrialResult", "run_sweep",
    "PrecoderConfig",
    "DecoupledModel", "RTransform", "TuningResult", "TuningTargets",
    "decoupled_solve", "phi_tilde", "q_tilde", "rayleigh",
    "rayleigh_r_transform", "solve_papr", "solve_tas",
    "__version__",
]
