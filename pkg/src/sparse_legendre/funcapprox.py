"""Fourier-Legendre analysis and sample-based function reconstruction.

Norms on coefficient sequences are evaluated on finite truncations.  The
weighted sup norm is ``||f||_{inf,w} = sup |f(x)| w(x)`` with
``w(x) = sqrt(pi/2) (1 - x**2)**(1/4)``.
"""
import json
import math
import warnings
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .orthopoly import LEGENDRE, chebyshev_grid, eval_vandermonde
from .sampling import sample_chebyshev
from .sensing import build_system
from .solvers import best_s_term, solve_bpdn

__all__ = [
    "QuadratureWarning",
    "FunctionModel",
    "WienerNorms",
    "ErrorReport",
    "legendre_weight",
    "legendre_coeffs",
    "legendre_series",
    "weighted_sup_norm",
    "wiener_norms",
    "tail_bound",
    "mixed_error",
    "truncation_degree",
    "sample_count",
    "reconstruct_from_samples",
]


class QuadratureWarning(UserWarning):
    """Doubling the quadrature order changed the coefficients noticeably."""


@dataclass
class FunctionModel:
    """A function on [-1, 1] with optional exact Legendre coefficients.

    Parameters
    ----------
    evaluator : callable
        Vectorized ``f(x)``.
    coeff_oracle : callable, optional
        ``k -> c_k(f)`` for integer arrays ``k``.
    truncation_K : int
        Number of coefficients used when the model is analyzed.
    degree : int, optional
        Known polynomial degree; makes quadrature exact.
    breakpoints : sequence of float
        Interior points where ``f`` is not smooth; quadrature is split there.
    """

    evaluator: Callable
    coeff_oracle: Optional[Callable] = None
    truncation_K: int = 64
    degree: Optional[int] = None
    breakpoints: Sequence[float] = ()

    def __call__(self, x):
        return np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)

    def exact_coeffs(self, K):
        if self.coeff_oracle is None:
            return None
        return np.asarray(self.coeff_oracle(np.arange(K)), dtype=float)

    def coeffs(self, K):
        """Exact coefficients when available, quadrature otherwise."""
        exact = self.exact_coeffs(K)
        return exact if exact is not None else legendre_coeffs(self, K)

    @classmethod
    def from_coeffs(cls, coeffs, truncation_K=None):
        """The finite Legendre expansion with the given coefficients."""
        coeffs = np.asarray(coeffs, dtype=float)
        n = coeffs.size

        def oracle(k):
            k = np.asarray(k)
            out = np.zeros(k.shape)
            inside = k < n
            out[inside] = coeffs[k[inside]]
            return out

        return cls(lambda x: legendre_series(coeffs, x), oracle,
                   truncation_K or n, degree=max(n - 1, 0))

    @classmethod
    def from_decay(cls, decay, eval_terms=20_000, truncation_K=64):
        """Infinite expansion with coefficients ``decay(k)``.

        Point values are computed from the first ``eval_terms`` terms.
        """
        tail = np.asarray(decay(np.arange(eval_terms)), dtype=float)
        return cls(lambda x: legendre_series(tail, x), decay, truncation_K)


def legendre_weight(x):
    """``w(x) = sqrt(pi/2) (1 - x**2)**(1/4)``."""
    x = np.asarray(x, dtype=float)
    return math.sqrt(math.pi / 2) * ((1.0 - x) * (1.0 + x)) ** 0.25


def legendre_series(coeffs, x):
    """Evaluate ``sum_k coeffs[k] L_k(x)`` by the three-term recurrence."""
    coeffs = np.asarray(coeffs, dtype=float)
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.zeros(flat.shape)
    if coeffs.size == 0:
        return out.reshape(x.shape)
    p_prev = np.zeros_like(flat)
    p = np.ones_like(flat)
    out += coeffs[0] * p
    for n in range(coeffs.size - 1):
        p_next = ((2 * n + 1) * flat * p - n * p_prev) / (n + 1)
        p_prev, p = p, p_next
        out += coeffs[n + 1] * math.sqrt(2 * n + 3) * p
    return out.reshape(x.shape)


def _gauss_coeffs(f, K, n_nodes):
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    pieces = np.concatenate(([-1.0], np.sort(np.asarray(f.breakpoints, dtype=float)), [1.0]))
    total = np.zeros(K)
    for a, b in zip(pieces[:-1], pieces[1:]):
        half = 0.5 * (b - a)
        x = 0.5 * (a + b) + half * nodes
        vals = f(x) * weights * half
        total += eval_vandermonde(LEGENDRE, K - 1, x).T @ vals
    return 0.5 * total


def legendre_coeffs(f, K, n_nodes=None, tol=1e-8):
    """First ``K`` Fourier-Legendre coefficients ``c_k = 1/2 int f L_k dx``.

    Gauss-Legendre quadrature on each smooth piece of ``f``.  With a known
    polynomial degree the node count makes the rule exact; otherwise the
    result is compared against twice the node count and a
    :class:`QuadratureWarning` is issued if they differ by more than ``tol``.
    """
    if K < 1:
        raise ValueError("K must be positive")
    if f.degree is not None and n_nodes is None:
        return _gauss_coeffs(f, K, (K + f.degree) // 2 + 1)
    n = n_nodes or max(2 * K, 64)
    c = _gauss_coeffs(f, K, n)
    if f.degree is None:
        c2 = _gauss_coeffs(f, K, 2 * n)
        if np.max(np.abs(c2 - c)) > tol:
            warnings.warn(f"Legendre coefficients not converged with {n} nodes",
                          QuadratureWarning, stacklevel=2)
        c = c2
    return c


def weighted_sup_norm(f_residual, grid_size=4096):
    """``max |g(x)| w(x)`` over the Chebyshev grid ``cos(j pi / grid_size)``."""
    if grid_size < 1000:
        raise ValueError("grid_size must be at least 1000")
    x = chebyshev_grid(grid_size)
    vals = np.asarray(f_residual(x), dtype=float)
    return float(np.max(np.abs(vals) * legendre_weight(x)))


@dataclass(frozen=True)
class WienerNorms:
    """``||c||_q`` and ``sum (1+k)**alpha |c_k|`` on a truncation."""

    a_q_norm: float
    a_1_alpha_norm: float
    q: float
    alpha: float


def wiener_norms(coeffs, q, alpha):
    c = np.abs(np.asarray(coeffs, dtype=float))
    if not 0 < q <= 1:
        raise ValueError("q must lie in (0, 1]")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    a_q = float(np.sum(c ** q) ** (1.0 / q))
    a_1a = float(np.sum((1.0 + np.arange(c.size)) ** alpha * c))
    return WienerNorms(a_q, a_1a, q, alpha)


def tail_bound(coeffs, N, alpha):
    """``sum_{k >= N} |c_k|`` and its bound ``N**-alpha ||c||_{A_{1,alpha}}``."""
    c = np.abs(np.asarray(coeffs, dtype=float))
    tail = float(c[N:].sum())
    return tail, N ** (-alpha) * wiener_norms(c, 1.0, alpha).a_1_alpha_norm


def mixed_error(f, N, s, candidate_coeffs, grid_size=4096):
    """``sigma_s(c)_1 + sqrt(s) ||f - sum c_k L_k||_{inf,w}`` for one ``c``."""
    c = np.asarray(candidate_coeffs, dtype=float)
    if c.shape != (N,):
        raise ValueError(f"expected {N} candidate coefficients, got shape {c.shape}")
    _, sigma = best_s_term(c, s, 1)
    sup = weighted_sup_norm(lambda x: f(x) - legendre_series(c, x), grid_size)
    return sigma + math.sqrt(s) * sup


def truncation_degree(s, q, alpha):
    """``N = ceil(s**((1/q - 1/2)/alpha))``."""
    return math.ceil(s ** ((1.0 / q - 0.5) / alpha) - 1e-12)


def sample_count(s, q, alpha, C=1.0, floor_factor=3):
    """``m = max(floor_factor*s, ceil(C/alpha (1/q - 1/2) s log(s)**4))``."""
    m = math.ceil(C / alpha * (1.0 / q - 0.5) * s * math.log(s) ** 4)
    return max(floor_factor * s, m)


@dataclass
class ErrorReport:
    N: int
    m: int
    s: int
    q: float
    alpha: float
    eps_used: float
    a1_error: float
    weighted_sup_error: float
    a1_alpha_norm: float
    truncation_K: int
    neglected_tail: float
    converged: bool

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def reconstruct_from_samples(f, s, q, alpha, seed, C=1.0, a1_alpha_norm=None,
                             eps_rule="rate", opts=None, grid_size=4096):
    """Recover a Legendre approximation of ``f`` from Chebyshev samples.

    The maximal degree is ``N = ceil(s**((1/q - 1/2)/alpha))`` and the sample
    count comes from :func:`sample_count`.  Samples of ``f`` are treated as
    noisy samples of its degree ``N-1`` truncation, with noise level
    ``eps = sqrt(3) N**-alpha ||f||_{A_{1,alpha}}`` passed to BPDN.

    ``||f||_{A_{1,alpha}}`` comes from ``a1_alpha_norm`` if given, else from
    the coefficients of ``f`` truncated at ``K = 4N``.  With
    ``eps_rule="tail"`` the noise level is instead the sharper
    ``sqrt(3) sum_{N <= k < K} |c_k(f)|``, which vanishes for polynomials
    of degree below ``N``.

    Returns
    -------
    coeffs : ndarray, length N
    N, m : int
    report : ErrorReport
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if int(s) != s or s < 2:
        raise ValueError("s must be an integer >= 2")
    N = truncation_degree(s, q, alpha)
    m = sample_count(s, q, alpha, C)
    K = 4 * N

    exact = f.exact_coeffs(K)
    ref = exact
    if ref is None:
        with warnings.catch_warnings():
            warnings.simplefilter("error", QuadratureWarning)
            try:
                ref = legendre_coeffs(f, K)
            except QuadratureWarning:
                if a1_alpha_norm is None:
                    raise ValueError(
                        "A_{1,alpha} norm unavailable: no coefficient oracle and "
                        "quadrature did not converge; pass a1_alpha_norm") from None
                ref = None
    if a1_alpha_norm is None:
        a1_alpha_norm = wiener_norms(ref, q, alpha).a_1_alpha_norm

    if eps_rule == "rate":
        eps = math.sqrt(3.0) * N ** (-alpha) * a1_alpha_norm
    elif eps_rule == "tail":
        if ref is None:
            raise ValueError("eps_rule='tail' needs the coefficients of f")
        eps = math.sqrt(3.0) * float(np.abs(ref[N:]).sum())
    else:
        raise ValueError(f"unknown eps_rule {eps_rule!r}")
    samples = sample_chebyshev(m, seed)
    system = build_system(LEGENDRE, samples, N)
    y = f(samples.points)
    result = solve_bpdn(system, y, eps, opts)
    coeffs = result.solution

    if ref is not None:
        full = np.zeros(K)
        full[:N] = coeffs
        a1_error = float(np.abs(ref - full).sum())
        neglected = float(np.abs(ref[N:]).sum())
    else:
        a1_error = math.nan
        neglected = math.nan
    sup_err = weighted_sup_norm(lambda x: f(x) - legendre_series(coeffs, x), grid_size)
    report = ErrorReport(N, m, int(s), q, alpha, eps, a1_error, sup_err, a1_alpha_norm, K,
                         neglected, result.converged)
    return coeffs, N, m, report
