"""Sampled polynomial matrices and their diagonal preconditioners."""
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .orthopoly import (
    OrthoBasis, envelope_check, envelope_factor, eval_vandermonde, weight_normalization,
)
from .sampling import ConfigurationError, SampleSet

__all__ = ["SensingSystem", "build_system", "preconditioner", "apply", "composite_normalized"]


def preconditioner(basis, samples):
    """Diagonal of the preconditioner for ``basis`` sampled at ``samples``.

    Chebyshev sampling uses ``(c pi)**(1/2) (1-x**2)**(1/4) v(x)**(1/2)``,
    which is ``(pi/2)**(1/2) (1-x**2)**(1/4)`` for Legendre and identically
    one for Chebyshev.  Any other density ``rho`` uses
    ``c**(1/2) rho(x)**(-1/2) v(x)**(1/2)``, which makes the rows
    orthonormal under ``rho`` and reduces to the Chebyshev formula when
    ``rho`` is the Chebyshev density.
    """
    x = samples.points
    c = weight_normalization(basis)
    if samples.density == "chebyshev":
        return math.sqrt(c * math.pi) * envelope_factor(basis, x)
    pdf = samples.density_pdf()
    if pdf is None:
        raise ConfigurationError(
            f"no preconditioner for density {samples.density!r}: its pdf is unknown")
    with np.errstate(divide="ignore", invalid="ignore"):
        v = (1.0 - x) ** basis.alpha * (1.0 + x) ** basis.beta
        diag = np.sqrt(c * v / np.asarray(pdf(x), dtype=float))
    # singular endpoint draws carry no information
    diag[~np.isfinite(diag)] = 0.0
    return diag


@dataclass(frozen=True, eq=False)
class SensingSystem:
    """Polynomial matrix ``phi`` (m x N), preconditioner diagonal, and the
    composite ``A phi``.  Immutable once built."""

    basis: OrthoBasis
    samples: SampleSet
    phi: np.ndarray
    precond_diag: np.ndarray
    N: int

    @property
    def m(self):
        return self.phi.shape[0]

    @cached_property
    def composite(self):
        """``A phi`` with rows scaled by the preconditioner."""
        out = self.precond_diag[:, None] * self.phi
        out.setflags(write=False)
        return out

    @cached_property
    def normalized(self):
        """``A phi / sqrt(m)``."""
        out = self.composite / math.sqrt(self.m)
        out.setflags(write=False)
        return out

    def apply(self, coeffs):
        """Sample values ``phi @ coeffs`` of the expansion (no preconditioning)."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.N,):
            raise ValueError(f"expected {self.N} coefficients, got shape {coeffs.shape}")
        return self.phi @ coeffs

    def precondition(self, y):
        """``A y`` for a vector of raw sample values."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.m,):
            raise ValueError(f"expected {self.m} sample values, got shape {y.shape}")
        return self.precond_diag * y

    def k_bound(self):
        """Uniform bound ``K`` on the preconditioned functions.

        Closed form for Legendre (sqrt 3) and Chebyshev (sqrt 2) under
        Chebyshev sampling, a grid estimate for other Jacobi weights, and the
        realized entry maximum for any other sampling density.
        """
        if self.samples.density == "chebyshev":
            if self.basis.family == "legendre":
                return math.sqrt(3.0)
            if self.basis.family == "chebyshev":
                return math.sqrt(2.0)
            return envelope_check(self.basis, self.N - 1, grid_size=4000).bos_constant
        return float(np.abs(self.composite).max())

    def summary(self):
        return {
            "basis": self.basis.name,
            "N": self.N,
            "m": self.m,
            "seed": self.samples.seed,
            "density": self.samples.density,
            "K_bound": self.k_bound(),
        }

    def summary_json(self):
        return json.dumps(self.summary(), sort_keys=True)

    def export_csv(self, path, which="composite"):
        """Write ``phi``, ``composite`` or ``normalized`` to a CSV file."""
        mats = {"phi": self.phi, "composite": self.composite, "normalized": self.normalized}
        np.savetxt(path, mats[which], delimiter=",", fmt="%.17g")


def build_system(basis, samples, N):
    """Assemble the sensing system for degrees ``0..N-1``."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    N = int(N)
    phi = eval_vandermonde(basis, N - 1, samples.points)
    diag = np.asarray(preconditioner(basis, samples), dtype=float)
    phi.setflags(write=False)
    diag.setflags(write=False)
    return SensingSystem(basis, samples, phi, diag, N)


def apply(system, coeffs):
    return system.apply(coeffs)


def composite_normalized(system):
    return system.normalized
