"""Seeded i.i.d. sampling on [-1, 1].

All randomness goes through numpy's Philox4x64-10 counter-based bit
generator, keyed by a :class:`numpy.random.SeedSequence` built from the
64-bit seed (plus a stream tag where several independent streams are
needed).  Identical ``(seed, density, m)`` reproduces the identical points.
"""
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ConfigurationError",
    "Density",
    "SampleSet",
    "CHEBYSHEV_DENSITY",
    "UNIFORM_DENSITY",
    "make_rng",
    "derive_seed",
    "sample_chebyshev",
    "sample_uniform",
    "sample_density",
    "check_admissible",
    "chebyshev_cdf",
]

MASK64 = (1 << 64) - 1
SEED_MIX = 0x9E3779B97F4A7C15


class ConfigurationError(ValueError):
    """An experiment or system configuration that cannot be honoured."""


def _check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def make_rng(seed, stream=None):
    """Philox generator for ``seed``; ``stream`` selects an independent
    substream of the same seed."""
    seed = _check_seed(seed)
    entropy = seed if stream is None else [seed, int(stream)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(base_seed, index):
    """Per-trial seed: ``base_seed XOR (index * 0x9E3779B97F4A7C15 mod 2**64)``."""
    return _check_seed(base_seed) ^ ((int(index) * SEED_MIX) & MASK64)


def chebyshev_cdf(x):
    """CDF ``1 - arccos(x)/pi`` of the Chebyshev (arcsine) measure."""
    return 1.0 - np.arccos(np.clip(x, -1.0, 1.0)) / math.pi


@dataclass(frozen=True)
class Density:
    """A sampling density on [-1, 1].

    Parameters
    ----------
    name : str
        Human-readable description, used in serialized output.
    pdf : callable
        Vectorized density ``rho(x)``.
    ppf : callable, optional
        Inverse CDF on (0, 1). When absent, samples are drawn by rejection
        from the Chebyshev measure, which needs a finite ``bound``.
    bound : float, optional
        Upper bound of ``rho(x) / chebyshev_pdf(x)``. Estimated on a grid
        (with 10% head-room) if omitted.
    """

    name: str
    pdf: Callable
    ppf: Optional[Callable] = None
    bound: Optional[float] = None

    def __call__(self, x):
        return self.pdf(np.asarray(x, dtype=float))


def _chebyshev_pdf(x):
    with np.errstate(divide="ignore"):
        return 1.0 / (math.pi * np.sqrt((1.0 - x) * (1.0 + x)))


CHEBYSHEV_DENSITY = Density("chebyshev", _chebyshev_pdf, ppf=lambda u: -np.cos(math.pi * u))
UNIFORM_DENSITY = Density("uniform", lambda x: np.full_like(x, 0.5), ppf=lambda u: 2.0 * u - 1.0)


@dataclass(frozen=True)
class SampleSet:
    """Sampling points together with the density and seed that produced them."""

    points: np.ndarray
    density: str
    seed: int
    pdf: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("a sample set needs a nonempty 1-d array of points")
        if not np.all(np.abs(pts) <= 1.0):
            raise ValueError("sampling points must lie in [-1, 1]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "seed", _check_seed(self.seed))

    @property
    def m(self):
        return self.points.size

    def __len__(self):
        return self.points.size

    @classmethod
    def from_points(cls, points, density="chebyshev", seed=0, pdf=None):
        """Wrap externally chosen points (e.g. fixtures) as a sample set."""
        return cls(np.asarray(points, dtype=float), density, seed, pdf)

    def density_pdf(self):
        if self.pdf is not None:
            return self.pdf
        if self.density == "chebyshev":
            return CHEBYSHEV_DENSITY.pdf
        if self.density == "uniform":
            return UNIFORM_DENSITY.pdf
        return None

    def to_dict(self):
        return {"seed": self.seed, "density": self.density, "points": self.points.tolist()}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(np.asarray(d["points"], dtype=float), d["density"], d["seed"])


def _check_count(m):
    if int(m) != m or m < 1:
        raise ValueError(f"sample count must be a positive integer, got {m!r}")
    return int(m)


def sample_chebyshev(m, seed):
    """``x_j = cos(theta_j)`` with ``theta_j`` i.i.d. uniform on [0, pi].

    Endpoint draws are kept; they only produce zero rows downstream.
    """
    m = _check_count(m)
    theta = math.pi * make_rng(seed).random(m)
    return SampleSet(np.cos(theta), "chebyshev", seed)


def sample_uniform(m, seed):
    """I.i.d. uniform points on [-1, 1], the Legendre orthogonality measure.

    The uniform density does not dominate the Chebyshev density near the
    endpoints, so it is deliberately exempt from :func:`check_admissible`.
    """
    m = _check_count(m)
    return SampleSet(2.0 * make_rng(seed).random(m) - 1.0, "uniform", seed, UNIFORM_DENSITY.pdf)


def check_admissible(density, grid_size=4096, floor=1e-3, mass_tol=1e-3):
    """Grid check of ``rho(x) >= c' (1 - x**2)**(-1/2)`` and unit mass.

    Evaluates ``rho(x) sqrt(1 - x**2)`` at the interior Chebyshev points
    ``cos((j + 1/2) pi / grid_size)``; its minimum estimates ``c'`` and must
    reach ``floor``.  The same points give a Gauss-Chebyshev estimate of the
    total mass.  Returns the ``c'`` estimate.
    """
    x = np.cos((np.arange(grid_size) + 0.5) * (math.pi / grid_size))
    g = np.asarray(density(x), dtype=float) * np.sqrt((1.0 - x) * (1.0 + x))
    if not np.all(np.isfinite(g)):
        raise ConfigurationError(f"density {density.name!r} is not finite on (-1, 1)")
    mass = math.pi * g.mean()
    if abs(mass - 1.0) > mass_tol:
        raise ConfigurationError(f"density {density.name!r} integrates to {mass:.6g}, not 1")
    c_prime = float(g.min())
    if c_prime < floor:
        raise ConfigurationError(
            f"density {density.name!r} violates rho(x) >= c'(1-x^2)^(-1/2): "
            f"min rho*sqrt(1-x^2) = {c_prime:.3g} < {floor:g}")
    return c_prime


def sample_density(m, seed, density, *, check=True, batch=4096):
    """I.i.d. draws from an admissible custom density.

    Uses ``density.ppf`` when available, otherwise rejection sampling with a
    Chebyshev proposal.  With ``check`` the density must pass
    :func:`check_admissible`.
    """
    m = _check_count(m)
    if check:
        check_admissible(density)
    rng = make_rng(seed)
    if density.ppf is not None:
        pts = np.asarray(density.ppf(rng.random(m)), dtype=float)
        return SampleSet(np.clip(pts, -1.0, 1.0), f"custom:{density.name}", seed, density.pdf)

    bound = density.bound
    if bound is None:
        x = np.cos((np.arange(4096) + 0.5) * (math.pi / 4096))
        bound = 1.1 * float(np.max(density(x) * math.pi * np.sqrt((1.0 - x) * (1.0 + x))))
    accepted = []
    have = 0
    while have < m:
        x = np.cos(math.pi * rng.random(batch))
        u = rng.random(batch)
        ratio = density(x) * math.pi * np.sqrt((1.0 - x) * (1.0 + x)) / bound
        keep = x[u < ratio]
        accepted.append(keep)
        have += keep.size
    pts = np.concatenate(accepted)[:m]
    return SampleSet(pts, f"custom:{density.name}", seed, density.pdf)
