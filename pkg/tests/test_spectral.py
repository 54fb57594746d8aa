import numpy as np
import pytest

from graphnw import DataError, PowerConfig, euclidean_distance, inverse_power_map, power_distance, power_map
from graphnw.spectral import spectral_decompose

from conftest import random_laplacian, random_symmetric

P2 = np.array([[1.0, -1.0], [-1.0, 1.0]])


def test_decompose_identity():
    dec = spectral_decompose(np.eye(3))
    np.testing.assert_allclose(dec.eigenvalues, [1, 1, 1])


def test_decompose_two_by_two():
    dec = spectral_decompose(P2)
    np.testing.assert_allclose(dec.eigenvalues, [2, 0], atol=1e-15)
    u = dec.eigenvectors[:, 0]
    assert abs(u @ np.array([1, -1]) / np.sqrt(2)) == pytest.approx(1.0, abs=1e-15)


def test_decompose_reconstruction(rng):
    S = random_symmetric(rng, 5)
    dec = spectral_decompose(S)
    U = dec.eigenvectors
    assert np.abs(dec.reconstruct() - S).max() < 1e-9 * np.linalg.norm(S)
    assert np.abs(U.T @ U - np.eye(5)).max() < 1e-9
    assert np.all(np.diff(dec.eigenvalues) <= 0)


def test_decompose_rejects_nonfinite():
    with pytest.raises(DataError):
        spectral_decompose(np.array([[np.nan, 0], [0, 1]]))


def test_power_identity_and_sqrt(rng):
    L = random_laplacian(rng, 6)
    np.testing.assert_allclose(power_map(L, 1.0), L, rtol=0, atol=1e-10)
    half = power_map(P2, 0.5)
    np.testing.assert_allclose(half, P2 / np.sqrt(2), rtol=0, atol=1e-12)


def test_power_two_is_matrix_square():
    # block-diagonal Laplacian: two disjoint components
    L = np.zeros((4, 4))
    L[:2, :2] = [[2, -2], [-2, 2]]
    L[2:, 2:] = [[0.5, -0.5], [-0.5, 0.5]]
    np.testing.assert_allclose(power_map(L, 2.0), L @ L, rtol=0, atol=1e-12)


def test_power_rejects_indefinite():
    with pytest.raises(DataError, match="positive semi-definite"):
        power_map(np.array([[1.0, 2.0], [2.0, 1.0]]), 0.5)


def test_inverse_examples():
    S = np.diag([3.0, 1.0])
    np.testing.assert_allclose(inverse_power_map(S, 1.0), S, atol=1e-15)
    np.testing.assert_allclose(inverse_power_map(P2 / np.sqrt(2), 0.5), P2, atol=1e-12)
    S = np.diag([2.0, -1.0])
    G = inverse_power_map(S, 1.0)
    np.testing.assert_allclose(G, np.diag([2.0, 0.0]), atol=1e-15)
    assert np.linalg.eigvalsh(G).min() >= -1e-12


def test_inverse_floor():
    S = np.diag([2.0, 0.1])
    G = inverse_power_map(S, PowerConfig(1.0, eigenvalue_floor=0.5))
    np.testing.assert_allclose(G, np.diag([2.0, 0.0]), atol=1e-15)


def test_power_distance_examples(rng):
    L = random_laplacian(rng, 5)
    assert power_distance(L, L, 0.5) == 0
    assert power_distance(P2, np.zeros((2, 2)), 0.5) == pytest.approx(np.sqrt(2), abs=1e-12)
    for _ in range(10):
        A, B = random_laplacian(rng, 5), random_laplacian(rng, 5)
        assert abs(power_distance(A, B, 1.0) - euclidean_distance(A, B)) <= 1e-10


def test_power_config_validates():
    with pytest.raises(DataError):
        PowerConfig(0.0)
    with pytest.raises(DataError):
        PowerConfig(-1.0)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_round_trip_and_null_vector(rng, alpha):
    for _ in range(20):
        m = int(rng.integers(2, 11))
        L = random_laplacian(rng, m)
        F = power_map(L, alpha)
        np.testing.assert_allclose(F, F.T, atol=0)
        assert np.abs(F @ np.ones(m)).max() <= 1e-9
        assert np.abs(inverse_power_map(F, alpha) - L).max() <= 1e-8


def test_zero_distance_iff_equal(rng):
    for _ in range(20):
        A, B = random_laplacian(rng, 4), random_laplacian(rng, 4)
        assert power_distance(A, B, 0.5) > 1e-9
        assert power_distance(A, A.copy(), 0.5) <= 1e-9
