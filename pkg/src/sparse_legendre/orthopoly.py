"""Orthonormal Jacobi-type polynomials on [-1, 1].

Every family here is normalized to be orthonormal with respect to the
*probability* measure ``c * v(x) dx``, where ``v(x) = (1-x)**alpha *
(1+x)**beta`` and ``1/c = int_{-1}^{1} v(x) dx``.  With this convention the
Legendre polynomials satisfy ``L_n(1) = sqrt(2n + 1)`` and the Chebyshev
polynomials are ``sqrt(2) * T_n`` for ``n >= 1``.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln

__all__ = [
    "DomainError",
    "OrthoBasis",
    "EnvelopeBound",
    "LEGENDRE",
    "CHEBYSHEV",
    "eval_poly",
    "eval_vandermonde",
    "weight_normalization",
    "weight_density",
    "envelope_factor",
    "envelope_check",
    "legendre_envelope_bound",
    "chebyshev_grid",
]

FAMILIES = ("legendre", "chebyshev", "jacobi")


class DomainError(ValueError):
    """Raised when a point lies outside the domain of a function."""


@dataclass(frozen=True)
class OrthoBasis:
    """A Jacobi-type orthonormal polynomial family.

    Parameters
    ----------
    family : {"legendre", "chebyshev", "jacobi"}
        Legendre and Chebyshev use their own recurrences; the exponents are
        fixed to (0, 0) and (-1/2, -1/2) respectively.
    alpha, beta : float
        Jacobi exponents of the weight ``(1-x)**alpha * (1+x)**beta``.
        Both must be at least -1/2.
    """

    family: str = "legendre"
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        family = self.family.lower()
        if family not in FAMILIES:
            raise ValueError(f"unknown polynomial family {self.family!r}")
        object.__setattr__(self, "family", family)
        if family == "legendre":
            object.__setattr__(self, "alpha", 0.0)
            object.__setattr__(self, "beta", 0.0)
        elif family == "chebyshev":
            object.__setattr__(self, "alpha", -0.5)
            object.__setattr__(self, "beta", -0.5)
        alpha, beta = float(self.alpha), float(self.beta)
        if not (alpha >= -0.5 and beta >= -0.5):
            raise ValueError(
                f"Jacobi exponents must satisfy alpha, beta >= -1/2, got ({alpha}, {beta})")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def legendre(cls):
        return cls("legendre")

    @classmethod
    def chebyshev(cls):
        return cls("chebyshev")

    @classmethod
    def jacobi(cls, alpha, beta):
        return cls("jacobi", alpha, beta)

    @classmethod
    def parse(cls, text):
        """Build a basis from ``legendre``, ``chebyshev`` or ``jacobi:a,b``."""
        text = text.strip().lower()
        if text.startswith("jacobi"):
            _, _, params = text.partition(":")
            if not params:
                raise ValueError("jacobi basis needs exponents, e.g. 'jacobi:1,1'")
            a, b = (float(p) for p in params.split(","))
            return cls.jacobi(a, b)
        return cls(text)

    @property
    def name(self):
        if self.family == "jacobi":
            return f"jacobi:{self.alpha:g},{self.beta:g}"
        return self.family

    def to_dict(self):
        return {"family": self.family, "alpha": self.alpha, "beta": self.beta}


LEGENDRE = OrthoBasis.legendre()
CHEBYSHEV = OrthoBasis.chebyshev()


def _check_points(xs):
    xs = np.asarray(xs, dtype=float)
    if xs.size and not np.all(np.abs(xs) <= 1.0):
        bad = xs[~(np.abs(xs) <= 1.0)].ravel()[0]
        raise DomainError(f"evaluation point {bad!r} outside [-1, 1]")
    return xs


def _jacobi_log_norms(alpha, beta, max_degree):
    """log of ``int P_n**2 v dx`` for the classical Jacobi polynomials."""
    n = np.arange(max_degree + 1, dtype=float)
    ab = alpha + beta
    log_h = np.empty(max_degree + 1)
    log_h[0] = (ab + 1) * math.log(2.0) + betaln(alpha + 1, beta + 1)
    if max_degree >= 1:
        k = n[1:]
        log_h[1:] = ((ab + 1) * math.log(2.0) - np.log(2 * k + ab + 1)
                     + gammaln(k + alpha + 1) + gammaln(k + beta + 1)
                     - gammaln(k + ab + 1) - gammaln(k + 1))
    return log_h


def _legendre_rows(max_degree, x):
    out = np.empty((max_degree + 1,) + x.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = x
    for n in range(1, max_degree):
        out[n + 1] = ((2 * n + 1) * x * out[n] - n * out[n - 1]) / (n + 1)
    scale = np.sqrt(2.0 * np.arange(max_degree + 1) + 1.0)
    out *= scale.reshape((-1,) + (1,) * x.ndim)
    return out


def _chebyshev_rows(max_degree, x):
    out = np.empty((max_degree + 1,) + x.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = x
    for n in range(1, max_degree):
        out[n + 1] = 2.0 * x * out[n] - out[n - 1]
    out[1:] *= math.sqrt(2.0)
    return out


def _jacobi_rows(alpha, beta, max_degree, x):
    ab = alpha + beta
    out = np.empty((max_degree + 1,) + x.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = (alpha + 1) + (ab + 2) * (x - 1) / 2
    for n in range(1, max_degree):
        c2 = 2 * n + ab
        a = 2 * (n + 1) * (n + ab + 1) * c2
        b1 = (c2 + 1) * (c2 + 2) * c2
        b0 = (c2 + 1) * (alpha ** 2 - beta ** 2)
        c = 2 * (n + alpha) * (n + beta) * (c2 + 2)
        out[n + 1] = ((b1 * x + b0) * out[n] - c * out[n - 1]) / a
    log_h = _jacobi_log_norms(alpha, beta, max_degree)
    scale = np.exp(-0.5 * (log_h - log_h[0]))
    out *= scale.reshape((-1,) + (1,) * x.ndim)
    return out


def _rows(basis, max_degree, x):
    if basis.family == "legendre":
        return _legendre_rows(max_degree, x)
    if basis.family == "chebyshev":
        return _chebyshev_rows(max_degree, x)
    return _jacobi_rows(basis.alpha, basis.beta, max_degree, x)


def eval_poly(basis, degree, x):
    """Evaluate the orthonormal polynomial of given degree at ``x``.

    ``x`` may be a scalar or an array; the result has the same shape.
    """
    if int(degree) != degree or degree < 0:
        raise ValueError(f"degree must be a non-negative integer, got {degree!r}")
    degree = int(degree)
    x = _check_points(x)
    vals = _rows(basis, degree, x)[degree]
    return vals if x.ndim else float(vals)


def eval_vandermonde(basis, max_degree, xs):
    """Matrix of orthonormal polynomial values.

    Returns the C-contiguous ``(len(xs), max_degree + 1)`` array whose entry
    ``(j, k)`` is ``p_k(xs[j])``: rows follow the sample order, columns run
    over increasing degree.
    """
    if int(max_degree) != max_degree or max_degree < 0:
        raise ValueError(f"max_degree must be a non-negative integer, got {max_degree!r}")
    xs = _check_points(np.atleast_1d(xs))
    if xs.ndim != 1:
        raise ValueError("xs must be one-dimensional")
    return np.ascontiguousarray(_rows(basis, int(max_degree), xs).T)


def weight_normalization(basis):
    """The constant ``c`` making ``c * v(x) dx`` a probability measure."""
    if basis.family == "legendre":
        return 0.5
    if basis.family == "chebyshev":
        return 1.0 / math.pi
    a, b = basis.alpha, basis.beta
    return math.exp(-(a + b + 1) * math.log(2.0) - betaln(a + 1, b + 1))


def _jacobi_weight(basis, x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return (1.0 - x) ** basis.alpha * (1.0 + x) ** basis.beta


def weight_density(basis, x):
    """Orthogonalization probability density ``c * v(x)``."""
    x = _check_points(x)
    singular = ((basis.alpha < 0) & (x == 1.0)) | ((basis.beta < 0) & (x == -1.0))
    if np.any(singular):
        raise DomainError("weight density diverges at the endpoint")
    out = weight_normalization(basis) * _jacobi_weight(basis, x)
    return out if out.ndim else float(out)


def envelope_factor(basis, x):
    """``(1 - x**2)**(1/4) * v(x)**(1/2)`` with ``v`` unnormalized.

    Evaluated as ``(1-x)**(1/4 + alpha/2) * (1+x)**(1/4 + beta/2)``, which is
    finite on the closed interval because alpha, beta >= -1/2.
    """
    x = _check_points(x)
    ea = 0.25 + 0.5 * basis.alpha
    eb = 0.25 + 0.5 * basis.beta
    if ea == eb:
        out = ((1.0 - x) * (1.0 + x)) ** ea
    else:
        out = (1.0 - x) ** ea * (1.0 + x) ** eb
    return out if out.ndim else float(out)


def chebyshev_grid(grid_size):
    """The points ``cos(j*pi/grid_size)`` for ``j = 0, ..., grid_size``."""
    return np.cos(np.arange(grid_size + 1) * (math.pi / grid_size))


def legendre_envelope_bound(n):
    """Right-hand side ``2/sqrt(pi) * sqrt(1 + 1/(2n))`` of the Legendre
    envelope inequality, defined for ``n >= 1``."""
    n = np.asarray(n, dtype=float)
    return 2.0 / math.sqrt(math.pi) * np.sqrt(1.0 + 1.0 / (2.0 * n))


@dataclass(frozen=True)
class EnvelopeBound:
    """Empirical uniform bound of ``(1-x**2)**(1/4) v(x)**(1/2) |p_n(x)|``.

    Attributes
    ----------
    basis : OrthoBasis
    constant : float
        Maximum over the grid and all degrees ``0..max_degree``.
    per_degree : ndarray
        Grid maximum for each degree.
    lemma_bound : ndarray or None
        Legendre only: the closed-form bound per degree (NaN at degree 0).
    holds : bool or None
        Legendre only: whether every degree ``n >= 1`` stays strictly below
        its bound at every grid point.
    grid_size : int
    """

    basis: OrthoBasis
    constant: float
    per_degree: np.ndarray
    lemma_bound: object
    holds: object
    grid_size: int

    @property
    def bos_constant(self):
        """Uniform bound ``K`` of the preconditioned functions
        ``(c*pi)**(1/2) (1-x**2)**(1/4) v(x)**(1/2) p_n(x)``."""
        return math.sqrt(weight_normalization(self.basis) * math.pi) * self.constant

    def to_dict(self):
        return {
            "basis": self.basis.name,
            "constant": self.constant,
            "bos_constant": self.bos_constant,
            "grid_size": self.grid_size,
            "holds": self.holds,
        }


def envelope_check(basis, max_degree, grid_size=100_000, chunk=20_000):
    """Measure the weighted envelope of ``p_0..p_max_degree`` on a grid.

    The grid is ``chebyshev_grid(grid_size)``, which clusters at the
    endpoints where the weighted polynomials peak.
    """
    if grid_size < 1000:
        raise ValueError("grid_size must be at least 1000")
    xs = chebyshev_grid(grid_size)
    per_degree = np.zeros(max_degree + 1)
    for start in range(0, xs.size, chunk):
        x = xs[start:start + chunk]
        vals = np.abs(_rows(basis, max_degree, x)) * envelope_factor(basis, x)
        np.maximum(per_degree, vals.max(axis=1), out=per_degree)
    lemma = holds = None
    if basis.family == "legendre":
        lemma = np.full(max_degree + 1, np.nan)
        if max_degree >= 1:
            lemma[1:] = legendre_envelope_bound(np.arange(1, max_degree + 1))
        holds = bool(np.all(per_degree[1:] < lemma[1:]))
    return EnvelopeBound(basis, float(per_degree.max()), per_degree, lemma, holds, grid_size)
