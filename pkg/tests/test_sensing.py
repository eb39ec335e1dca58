import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_legendre.orthopoly import CHEBYSHEV, LEGENDRE, OrthoBasis, eval_vandermonde
from sparse_legendre.sampling import (
    CHEBYSHEV_DENSITY, ConfigurationError, SampleSet, sample_chebyshev,
    sample_density, sample_uniform,
)
from sparse_legendre.sensing import apply, build_system, composite_normalized, preconditioner

JACOBI11 = OrthoBasis.jacobi(1, 1)


def gauss_chebyshev_gram(basis, n_max, M, chunk=10 ** 6):
    """pi^-1 int Q_n Q_k (1-x^2)^(-1/2) dx by the M-point Gauss-Chebyshev rule."""
    G = np.zeros((n_max + 1, n_max + 1))
    for start in range(0, M, chunk):
        j = np.arange(start, min(M, start + chunk))
        x = np.cos((2 * j + 1) * np.pi / (2 * M))
        sys = build_system(basis, SampleSet.from_points(x), n_max + 1)
        G += sys.composite.T @ sys.composite
    return G / M


def test_single_sample_at_zero():
    sys = build_system(LEGENDRE, SampleSet.from_points([0.0]), 2)
    np.testing.assert_allclose(sys.phi, [[1.0, 0.0]])
    np.testing.assert_allclose(sys.precond_diag, [math.sqrt(math.pi / 2)])
    assert sys.precond_diag[0] == pytest.approx(1.2533, abs=1e-4)


def test_endpoint_row_is_zero():
    sys = build_system(LEGENDRE, SampleSet.from_points([1.0, -1.0]), 3)
    assert np.all(sys.composite == 0.0)
    assert np.all(sys.phi[0] != 0.0)


def test_chebyshev_preconditioner_is_one():
    samples = sample_chebyshev(50, 4)
    sys = build_system(CHEBYSHEV, samples, 10)
    np.testing.assert_allclose(sys.precond_diag, 1.0, rtol=0, atol=1e-15)
    assert sys.k_bound() == pytest.approx(math.sqrt(2))


def test_legendre_preconditioner_formula():
    samples = sample_chebyshev(100, 5)
    x = samples.points
    sys = build_system(LEGENDRE, samples, 4)
    np.testing.assert_allclose(sys.precond_diag, math.sqrt(math.pi / 2) * (1 - x ** 2) ** 0.25,
                               rtol=1e-12)
    assert sys.k_bound() == pytest.approx(math.sqrt(3))


def test_jacobi_preconditioner_formula():
    samples = sample_chebyshev(100, 6)
    x = samples.points
    sys = build_system(JACOBI11, samples, 4)
    # c = 3/4 for v = 1 - x^2
    np.testing.assert_allclose(sys.precond_diag,
                               math.sqrt(0.75 * math.pi) * (1 - x ** 2) ** 0.75, rtol=1e-13,
                               atol=1e-15)


def test_custom_chebyshev_density_matches_closed_form():
    samples = sample_density(200, 8, CHEBYSHEV_DENSITY)
    sys = build_system(LEGENDRE, samples, 5)
    x = samples.points
    np.testing.assert_allclose(sys.precond_diag, math.sqrt(math.pi / 2) * (1 - x ** 2) ** 0.25,
                               rtol=1e-10)


def test_general_density_rows_orthonormal():
    # uniform sampling of Chebyshev polynomials: n^-1 sum Q_n Q_k -> delta
    samples = sample_uniform(4 * 10 ** 5, 13)
    sys = build_system(CHEBYSHEV, samples, 5)
    G = sys.normalized.T @ sys.normalized
    np.testing.assert_allclose(G, np.eye(5), atol=0.02)


def test_unknown_density_is_configuration_error():
    samples = SampleSet.from_points([0.1, 0.2], density="custom:mystery")
    with pytest.raises(ConfigurationError):
        build_system(LEGENDRE, samples, 3)
    with pytest.raises(ConfigurationError):
        preconditioner(LEGENDRE, samples)


def test_apply_examples():
    sys = build_system(LEGENDRE, SampleSet.from_points([0.5, -0.5]), 3)
    np.testing.assert_allclose(apply(sys, [1.0, 0, 0]), [1.0, 1.0])
    np.testing.assert_allclose(apply(sys, [0, 1.0, 0]), [math.sqrt(3) / 2, -math.sqrt(3) / 2])
    np.testing.assert_array_equal(apply(sys, np.zeros(3)), np.zeros(2))
    with pytest.raises(ValueError):
        apply(sys, [1.0, 2.0])
    with pytest.raises(ValueError):
        sys.precondition(np.ones(3))


def test_normalized_single_entry():
    sys = build_system(LEGENDRE, SampleSet.from_points([0.0]), 1)
    np.testing.assert_allclose(composite_normalized(sys), [[math.sqrt(math.pi / 2)]])


def test_column_norms_near_one():
    sys = build_system(LEGENDRE, sample_chebyshev(10 ** 5, 21), 30)
    col = np.sum(sys.normalized ** 2, axis=0)
    assert abs(col.mean() - 1.0) < 0.01
    assert np.all(np.abs(col - 1.0) < 0.05)


def test_chebyshev_entry_bound():
    m = 10 ** 5
    sys = build_system(CHEBYSHEV, sample_chebyshev(m, 22), 30)
    assert np.max(np.abs(sys.normalized * math.sqrt(m))) <= math.sqrt(2) + 1e-12


def test_legendre_uniform_bound():
    sys = build_system(LEGENDRE, sample_chebyshev(20_000, 23), 200)
    assert np.max(np.abs(sys.composite)) <= math.sqrt(3)


@pytest.mark.parametrize("basis", [LEGENDRE, JACOBI11], ids=lambda b: b.name)
def test_quadrature_orthonormality(basis):
    G = gauss_chebyshev_gram(basis, 30, 2 * 10 ** 6)
    np.testing.assert_allclose(G, np.eye(31), atol=1e-11)


def test_immutable_and_consistent():
    sys = build_system(LEGENDRE, sample_chebyshev(12, 1), 6)
    np.testing.assert_array_equal(sys.phi, eval_vandermonde(LEGENDRE, 5, sys.samples.points))
    np.testing.assert_allclose(sys.composite, sys.precond_diag[:, None] * sys.phi)
    np.testing.assert_allclose(sys.normalized, sys.composite / math.sqrt(12))
    for arr in (sys.phi, sys.precond_diag, sys.composite, sys.normalized):
        with pytest.raises(ValueError):
            arr[0] = 1.0
    with pytest.raises(AttributeError):
        sys.N = 3


def test_invalid_N():
    with pytest.raises(ValueError):
        build_system(LEGENDRE, sample_chebyshev(3, 1), 0)


def test_summary_and_export(tmp_path):
    sys = build_system(LEGENDRE, sample_chebyshev(4, 77), 3)
    d = json.loads(sys.summary_json())
    assert d == {"basis": "legendre", "N": 3, "m": 4, "seed": 77, "density": "chebyshev",
                 "K_bound": math.sqrt(3)}
    path = tmp_path / "psi.csv"
    sys.export_csv(path)
    np.testing.assert_array_equal(np.loadtxt(path, delimiter=","), sys.composite)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32), m=st.integers(1, 40), N=st.integers(1, 40))
def test_composite_is_row_scaled_phi(seed, m, N):
    sys = build_system(LEGENDRE, sample_chebyshev(m, seed), N)
    assert sys.composite.shape == (m, N)
    np.testing.assert_allclose(sys.composite, sys.precond_diag[:, None] * sys.phi)
    assert np.all(np.abs(sys.composite) <= math.sqrt(3) + 1e-12)


def test_jacobi_k_bound_estimate():
    sys = build_system(JACOBI11, sample_chebyshev(50, 2), 20)
    K = sys.k_bound()
    assert np.max(np.abs(sys.composite)) <= K * (1 + 1e-3)
