"""Seeded recovery trials and phase diagrams.

Every trial draws its own seed with :func:`~sparse_legendre.sampling.derive_seed`
from the configuration's base seed, and phase-diagram cells derive theirs
from ``(m, s)``.  Results therefore never depend on execution order or on
the number of worker processes.
"""
import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .orthopoly import LEGENDRE, OrthoBasis
from .sampling import ConfigurationError, derive_seed, make_rng, sample_chebyshev
from .sensing import build_system
from .solvers import (
    RecoveryResult, SparseSignal, relative_error, solve_bpdn, solve_cosamp, solve_iht,
)

__all__ = [
    "METHODS",
    "WORKERS_ENV",
    "TrialConfig",
    "TrialResult",
    "TrialSummary",
    "PhaseDiagram",
    "Instance",
    "solve_instance",
    "run_trial",
    "run_trials",
    "run_cell",
    "phase_diagram",
    "default_workers",
]

METHODS = ("BP", "BPDN", "CoSaMP", "IHT")
WORKERS_ENV = "SPARSE_LEGENDRE_WORKERS"

SIGNAL_STREAM = 1
NOISE_STREAM = 2


def default_workers():
    """Worker count from ``$SPARSE_LEGENDRE_WORKERS``, else the CPU count."""
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:  # pragma: no cover - non-Linux
        return max(1, os.cpu_count() or 1)


def _canonical_method(method):
    for name in METHODS:
        if name.lower() == str(method).lower():
            return name
    raise ConfigurationError(f"unknown method {method!r}; choose from {METHODS}")


@dataclass
class TrialConfig:
    """One experiment: ``n_trials`` random s-sparse recoveries."""

    N: int
    m: int
    s: int
    basis: OrthoBasis = LEGENDRE
    noise_std: float = 0.0
    eps: float = 0.0
    method: str = "BP"
    base_seed: int = 0
    n_trials: int = 100
    success_threshold: float = 1e-4
    solver_opts: dict = field(default_factory=dict)

    def __post_init__(self):
        self.method = _canonical_method(self.method)
        if not 0 <= self.s <= self.m <= self.N:
            raise ConfigurationError(
                f"need 0 <= s <= m <= N, got s={self.s}, m={self.m}, N={self.N}")
        if self.m < 1:
            raise ConfigurationError("need at least one sample")
        if self.noise_std < 0 or self.eps < 0:
            raise ConfigurationError("noise_std and eps must be non-negative")
        if self.method == "BP" and self.eps != 0:
            raise ConfigurationError("BP is the eps = 0 program; use BPDN for eps > 0")
        if self.n_trials < 1:
            raise ConfigurationError("n_trials must be at least 1")

    def to_dict(self):
        d = asdict(self)
        d["basis"] = self.basis.name
        return d


@dataclass
class TrialResult:
    index: int
    seed: int
    rel_error: float
    l2_error: float
    success: bool
    iterations: int
    converged: bool


@dataclass
class TrialSummary:
    config: TrialConfig
    trials: list

    @property
    def success_rate(self):
        return sum(t.success for t in self.trials) / len(self.trials)

    @property
    def mean_l2_error(self):
        return float(np.mean([t.l2_error for t in self.trials]))

    @property
    def max_l2_error(self):
        return float(np.max([t.l2_error for t in self.trials]))

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "success_rate": self.success_rate,
            "mean_l2_error": self.mean_l2_error,
            "max_l2_error": self.max_l2_error,
            "trials": [asdict(t) for t in self.trials],
        }


def _solve(cfg, system, y):
    if cfg.s == 0 and cfg.method in ("CoSaMP", "IHT"):
        return None
    if cfg.method in ("BP", "BPDN"):
        return solve_bpdn(system, y, cfg.eps if cfg.method == "BPDN" else 0.0, cfg.solver_opts)
    solver = solve_cosamp if cfg.method == "CoSaMP" else solve_iht
    return solver(system, y, cfg.s, cfg.solver_opts)


@dataclass
class Instance:
    """One solved recovery problem."""

    seed: int
    system: object
    truth: np.ndarray
    estimate: np.ndarray
    result: object

    @property
    def rel_error(self):
        return relative_error(self.truth, self.estimate)

    @property
    def l2_error(self):
        return float(np.linalg.norm(self.truth - self.estimate))


def solve_instance(cfg, seed):
    """Draw samples, signal and noise from ``seed`` and solve with ``cfg.method``.

    Samples use ``seed`` directly; the signal and the noise use streams 1
    and 2 of the same seed.
    """
    samples = sample_chebyshev(cfg.m, seed)
    system = build_system(cfg.basis, samples, cfg.N)
    signal = SparseSignal.random(cfg.N, cfg.s, make_rng(seed, SIGNAL_STREAM))
    y = system.apply(signal.coeffs)
    if cfg.noise_std > 0:
        y = y + cfg.noise_std * make_rng(seed, NOISE_STREAM).standard_normal(cfg.m)
    res = _solve(cfg, system, y)
    if res is None:
        res = RecoveryResult(np.zeros(cfg.N), 0, float(np.linalg.norm(y)), 0.0, True,
                             cfg.method, {"status": "zero_sparsity"})
    return Instance(seed, system, signal.coeffs, res.solution, res)


def run_trial(cfg, index):
    """Run trial ``index`` of ``cfg``; fully determined by its derived seed."""
    inst = solve_instance(cfg, derive_seed(cfg.base_seed, index))
    rel = inst.rel_error
    return TrialResult(index, inst.seed, rel, inst.l2_error, rel <= cfg.success_threshold,
                       inst.result.iterations, inst.result.converged)


def _run_batch(args):
    cfg, indices = args
    return [run_trial(cfg, i) for i in indices]


def _pool_map(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def run_trials(cfg, workers=None):
    """All trials of ``cfg``, optionally split over worker processes."""
    workers = default_workers() if workers is None else workers
    n_batches = max(1, min(workers, cfg.n_trials))
    chunks = [list(c) for c in np.array_split(np.arange(cfg.n_trials), n_batches) if len(c)]
    batches = _pool_map(_run_batch, [(cfg, [int(i) for i in c]) for c in chunks], workers)
    return TrialSummary(cfg, [t for batch in batches for t in batch])


def _cell_size(N, s_over_m, m_over_N):
    m = max(1, int(round(m_over_N * N)))
    s = max(1, int(round(s_over_m * m)))
    return m, min(s, m)


def run_cell(N, s_over_m, m_over_N, trials, base_seed, basis=LEGENDRE,
             success_threshold=1e-4, solver_opts=None):
    """Success rate of BP at one ``(s/m, m/N)`` grid point.

    The cell seed depends only on ``(base_seed, m, s)``.
    """
    m, s = _cell_size(N, s_over_m, m_over_N)
    cfg = TrialConfig(N, m, s, basis=basis, method="BP",
                      base_seed=derive_seed(base_seed, (m << 32) | s), n_trials=trials,
                      success_threshold=success_threshold, solver_opts=solver_opts or {})
    summary = run_trials(cfg, workers=1)
    return summary.success_rate


def _cell_job(args):
    return run_cell(*args)


@dataclass
class PhaseDiagram:
    """BP success rates over a grid of ``(s/m, m/N)``.

    ``grid`` rows are ``(s_over_m, m_over_N, success_rate, trials)`` ordered
    by ``m/N`` and then ``s/m``.
    """

    N: int
    grid: list
    base_seed: int
    success_threshold: float

    def column(self, m_over_N):
        """Rows of one ``m/N`` value, ordered by ``s/m``."""
        return [row for row in self.grid if math.isclose(row[1], m_over_N)]

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["s_over_m", "m_over_n", "success_rate", "trials"])
        for s_m, m_n, rate, trials in self.grid:
            writer.writerow([f"{s_m:.6f}", f"{m_n:.6f}", f"{rate:.6f}", trials])
        return buf.getvalue()

    def to_dict(self):
        return {
            "N": self.N,
            "base_seed": self.base_seed,
            "success_threshold": self.success_threshold,
            "grid": [
                {"s_over_m": r[0], "m_over_n": r[1], "success_rate": r[2], "trials": r[3]}
                for r in self.grid
            ],
        }


def grid_values(grid_steps, max_ratio=0.7):
    """``max_ratio * k / grid_steps`` for ``k = 1..grid_steps``."""
    return [max_ratio * k / grid_steps for k in range(1, grid_steps + 1)]


def phase_diagram(N, grid_steps, trials, base_seed, max_ratio=0.7, basis=LEGENDRE,
                  success_threshold=1e-4, workers=None, order=None):
    """BP phase diagram on a ``grid_steps x grid_steps`` grid over (0, max_ratio].

    ``order`` optionally permutes the execution order of the cells (used to
    check that cells are independent); the output is always canonical.
    """
    if grid_steps < 2:
        raise ValueError("grid_steps must be at least 2")
    values = grid_values(grid_steps, max_ratio)
    cells = [(s_m, m_n) for m_n in values for s_m in values]
    workers = default_workers() if workers is None else workers
    run_order = list(range(len(cells))) if order is None else list(order)
    jobs = [(N, cells[i][0], cells[i][1], trials, base_seed, basis, success_threshold)
            for i in run_order]
    rates = _pool_map(_cell_job, jobs, workers)
    by_cell = dict(zip(run_order, rates))
    grid = [(cells[i][0], cells[i][1], by_cell[i], trials) for i in range(len(cells))]
    return PhaseDiagram(N, grid, base_seed, success_threshold)
