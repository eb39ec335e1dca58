"""Sparse recovery of polynomial expansions from random Chebyshev samples."""
from .experiments import PhaseDiagram, TrialConfig, phase_diagram, run_cell, run_trials
from .funcapprox import FunctionModel, reconstruct_from_samples
from .orthopoly import CHEBYSHEV, LEGENDRE, DomainError, OrthoBasis, eval_poly, eval_vandermonde
from .rip import RipReport, rip_exhaustive, rip_montecarlo
from .sampling import ConfigurationError, SampleSet, derive_seed, make_rng, sample_chebyshev
from .sensing import SensingSystem, build_system
from .solvers import (
    RecoveryResult, SolverOptions, SparseSignal, solve_bpdn, solve_cosamp, solve_iht,
)

__version__ = "0.1.0"

__all__ = [
    "CHEBYSHEV",
    "LEGENDRE",
    "ConfigurationError",
    "DomainError",
    "FunctionModel",
    "OrthoBasis",
    "PhaseDiagram",
    "RecoveryResult",
    "RipReport",
    "SampleSet",
    "SensingSystem",
    "SolverOptions",
    "SparseSignal",
    "TrialConfig",
    "build_system",
    "derive_seed",
    "eval_poly",
    "eval_vandermonde",
    "make_rng",
    "phase_diagram",
    "reconstruct_from_samples",
    "rip_exhaustive",
    "rip_montecarlo",
    "run_cell",
    "run_trials",
    "sample_chebyshev",
    "solve_bpdn",
    "solve_cosamp",
    "solve_iht",
]
