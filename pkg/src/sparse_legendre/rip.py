"""Restricted isometry constants: exact enumeration and sampled lower bounds."""
import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .sampling import make_rng

__all__ = [
    "RipReport",
    "BudgetExceeded",
    "MAX_SUPPORTS",
    "rip_exhaustive",
    "rip_montecarlo",
    "condition_numbers",
    "bos_sample_bound",
    "bos_sample_bound_value",
]

MAX_SUPPORTS = 10 ** 7


class BudgetExceeded(ValueError):
    """Too many supports for exhaustive enumeration."""


@dataclass
class RipReport:
    """Result of a restricted isometry computation.

    ``extremal_singular_values`` holds the smallest and largest singular
    value over all examined s-column submatrices, so that
    ``delta = max(smax**2 - 1, 1 - smin**2)``.
    """

    s: int
    delta_exact: float
    delta_lower_bound: float
    worst_support: tuple
    extremal_singular_values: tuple
    supports_examined: int
    mode: str
    history: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {
            "s": self.s,
            "delta_exact": self.delta_exact,
            "delta_lower_bound": self.delta_lower_bound,
            "worst_support": [int(i) for i in self.worst_support],
            "extremal_singular_values": [float(v) for v in self.extremal_singular_values],
            "supports_examined": self.supports_examined,
            "mode": self.mode,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _gram(matrix):
    # fixed-order column sums: every entry is bitwise independent of column order
    G = np.zeros((matrix.shape[1], matrix.shape[1]))
    for row in matrix:
        G += np.multiply.outer(row, row)
    return G


class _Sweep:
    """Running extrema over batches of supports.

    Each Gram submatrix is assembled with its indices ordered by column
    norm, so a column permutation of the matrix yields bitwise identical
    submatrices and therefore identical eigenvalues.
    """

    def __init__(self, matrix):
        self.gram = _gram(matrix)
        self.diag = np.diag(self.gram).copy()
        self.delta = -math.inf
        self.worst = None
        self.lmin = math.inf
        self.lmax = -math.inf
        self.count = 0

    def feed(self, supports):
        order = np.argsort(self.diag[supports], axis=1, kind="stable")
        canon = np.take_along_axis(supports, order, axis=1)
        sub = self.gram[canon[:, :, None], canon[:, None, :]]
        eig = np.linalg.eigvalsh(sub)
        lo, hi = eig[:, 0], eig[:, -1]
        deltas = np.maximum(hi - 1.0, 1.0 - lo)
        # argmax returns the first maximizer: lexicographically smallest support
        k = int(np.argmax(deltas))
        if deltas[k] > self.delta:
            self.delta = float(deltas[k])
            self.worst = tuple(int(i) for i in supports[k])
        self.lmin = min(self.lmin, float(lo.min()))
        self.lmax = max(self.lmax, float(hi.max()))
        self.count += supports.shape[0]
        return deltas

    def singular_values(self):
        return (math.sqrt(max(self.lmin, 0.0)), math.sqrt(max(self.lmax, 0.0)))


def _check_s(matrix, s):
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    N = matrix.shape[1]
    if int(s) != s or not 1 <= s <= N:
        raise ValueError(f"s must lie in [1, {N}], got {s}")
    return matrix, int(s)


def rip_exhaustive(matrix, s, batch=20_000, max_supports=MAX_SUPPORTS):
    """Exact ``delta_s`` by enumerating every s-column support.

    Supports are visited in lexicographic order; the reported worst support
    is the lexicographically smallest maximizer.
    """
    matrix, s = _check_s(matrix, s)
    N = matrix.shape[1]
    total = math.comb(N, s)
    if total > max_supports:
        raise BudgetExceeded(
            f"C({N},{s}) = {total} supports exceeds the budget of {max_supports}; "
            "use rip_montecarlo instead")
    sweep = _Sweep(matrix)
    it = combinations(range(N), s)
    while True:
        chunk = np.fromiter((i for comb in _take(it, batch) for i in comb), dtype=np.intp)
        if chunk.size == 0:
            break
        sweep.feed(chunk.reshape(-1, s))
    return RipReport(s, sweep.delta, sweep.delta, sweep.worst, sweep.singular_values(),
                     sweep.count, "Exhaustive")


def _take(it, n):
    for _, item in zip(range(n), it):
        yield item


def rip_montecarlo(matrix, s, trials, seed, batch=10_000):
    """Lower bound on ``delta_s`` from ``trials`` uniformly random supports.

    Supports are drawn in a fixed order from the seeded stream, so the
    estimate for ``t`` trials is the running maximum after the first ``t``
    supports of any longer run with the same seed.
    """
    matrix, s = _check_s(matrix, s)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    N = matrix.shape[1]
    rng = make_rng(seed)
    sweep = _Sweep(matrix)
    history = np.empty(trials)
    done = 0
    while done < trials:
        n = min(batch, trials - done)
        supports = np.sort(np.argsort(rng.random((n, N)), axis=1)[:, :s], axis=1)
        deltas = sweep.feed(supports)
        history[done:done + n] = deltas
        done += n
    history = np.maximum.accumulate(history)
    return RipReport(s, None, sweep.delta, sweep.worst, sweep.singular_values(),
                     sweep.count, "MonteCarlo", history)


def condition_numbers(matrix, support):
    """Condition number and extremal singular values of a column submatrix.

    Rank-deficient submatrices report ``kappa = inf``.
    """
    matrix = np.asarray(matrix, dtype=float)
    support = np.asarray(support, dtype=np.intp)
    if support.size > matrix.shape[0]:
        raise ValueError("support larger than the number of rows")
    sv = np.linalg.svd(matrix[:, support], compute_uv=False)
    smax, smin = float(sv[0]), float(sv[-1])
    if smin <= smax * max(matrix.shape) * np.finfo(float).eps:
        return math.inf, (smin, smax)
    return smax / smin, (smin, smax)


def bos_sample_bound_value(s, N, K, delta, C=1.0):
    """``C delta**-2 K**2 s log(s)**3 log(N)`` before rounding up."""
    if int(s) != s or s < 2:
        raise ValueError("s must be an integer >= 2")
    if N < s:
        raise ValueError("N must be at least s")
    if K < 1:
        raise ValueError("K must be at least 1")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if C <= 0:
        raise ValueError("C must be positive")
    return C * K * K * s * math.log(s) ** 3 * math.log(N) / (delta * delta)


def bos_sample_bound(s, N, K, delta, C=1.0):
    """Sample count sufficient for ``delta_s <= delta`` of a bounded
    orthonormal system, with the universal constant set to ``C``."""
    return math.ceil(bos_sample_bound_value(s, N, K, delta, C))
