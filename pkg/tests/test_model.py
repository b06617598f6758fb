import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from precodekit.errors import NotPositiveDefinite, RankDeficient, ShapeError
from precodekit.model import (BeamformerMatrix, Constraint, ConstraintKind, HybridPair,
                              PhaseVector, QuantizedVector, as_complex_matrix, hermitian_solve,
                              matrix_from_pairs, matrix_to_pairs, pseudo_inverse,
                              solution_from_dict, solution_to_dict)

from conftest import crandn


def test_hermitian_solve_identity(rng):
    B = crandn(rng, 3, 2)
    np.testing.assert_allclose(hermitian_solve(np.eye(3), B), B)


def test_hermitian_solve_diagonal():
    X = hermitian_solve(np.diag([2.0, 4.0]), [[2.0], [4.0]])
    np.testing.assert_allclose(X, [[1.0], [1.0]])


def test_hermitian_solve_residual(rng):
    M = crandn(rng, 4, 4)
    A = M @ M.conj().T + np.eye(4)
    B = crandn(rng, 4, 3)
    X = hermitian_solve(A, B)
    assert np.linalg.norm(A @ X - B) / np.linalg.norm(B) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 8), m=st.integers(1, 4), seed=st.integers(0, 2 ** 32 - 1))
def test_hermitian_solve_round_trip(n, m, seed):
    rng = np.random.default_rng(seed)
    M = crandn(rng, n, n)
    A = M @ M.conj().T + np.eye(n)
    B = crandn(rng, n, m)
    X = hermitian_solve(A, B)
    assert np.linalg.norm(A @ X - B) <= 1e-10 * np.linalg.norm(B)


def test_hermitian_solve_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        hermitian_solve(np.diag([1.0, -1.0]), np.ones((2, 1)))
    with pytest.raises(NotPositiveDefinite):
        hermitian_solve([[1.0, 2.0], [0.0, 1.0]], np.ones((2, 1)))


def test_pseudo_inverse_examples(rng):
    np.testing.assert_allclose(pseudo_inverse(np.eye(2)), np.eye(2), atol=1e-14)
    H = np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
    np.testing.assert_allclose(pseudo_inverse(H)[:2], np.diag([1.0, 0.5]), atol=1e-14)
    H = crandn(rng, 2, 4)
    np.testing.assert_allclose(H @ pseudo_inverse(H), np.eye(2), atol=1e-8)


@settings(max_examples=50, deadline=None)
@given(K=st.integers(1, 4), extra=st.integers(0, 4), seed=st.integers(0, 2 ** 32 - 1))
def test_pseudo_inverse_projector(K, extra, seed):
    H = crandn(np.random.default_rng(seed), K, K + extra)
    P = pseudo_inverse(H) @ H
    np.testing.assert_allclose(P, P.conj().T, atol=1e-8)
    np.testing.assert_allclose(P @ P, P, atol=1e-8)


def test_pseudo_inverse_rank_deficient():
    with pytest.raises(RankDeficient):
        pseudo_inverse([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(RankDeficient):
        pseudo_inverse(np.ones((3, 2)))


def test_complex_matrix_validation():
    assert as_complex_matrix([1, 2]).shape == (2, 1)
    with pytest.raises(ShapeError):
        as_complex_matrix(np.ones((2, 2)), shape=(2, 3))
    with pytest.raises(ValueError):
        as_complex_matrix([[np.nan]])
    A = np.array([[1 + 2j, 3], [0, -1j]])
    np.testing.assert_array_equal(matrix_from_pairs(matrix_to_pairs(A)), A)


def test_constraint_validation():
    c = Constraint("TotalPower", {"p_max": 1})
    assert c.kind is ConstraintKind.TOTAL_POWER and c["p_max"] == 1.0
    with pytest.raises(ValueError):
        Constraint("PerUserRate", {"user": 0})
    with pytest.raises(ValueError):
        Constraint("TotalPower", {"p_max": -1})
    with pytest.raises(ValueError):
        Constraint("TotalPower", {"p_max": math.inf})
    assert Constraint.from_dict(c.to_dict()) == c


def test_solution_shapes_and_alphabet():
    W = BeamformerMatrix(np.ones((4, 2)))
    W.check_shape(4, 2)
    with pytest.raises(ShapeError):
        W.check_shape(4, 3)
    with pytest.raises(ValueError):
        QuantizedVector(np.array([[0.5 + 0.5j], [0.1 + 0.5j]]), 1.0)
    with pytest.raises(ValueError):
        HybridPair(np.full((2, 1), 0.9), np.ones((1, 1)))
    with pytest.raises(ShapeError):
        HybridPair(np.ones((2, 2)), np.ones((3, 1)))
    with pytest.raises(ShapeError):
        PhaseVector([0.0, 1.0], 1.0).check_shape(3, 1)


def test_solution_serialization_round_trip(rng):
    x = np.sqrt(1 / 4) * np.array([1 + 1j, -1 + 1j])
    sols = [BeamformerMatrix(crandn(rng, 3, 2)), PhaseVector([0.1, -2.0, 3.0], 2.0),
            QuantizedVector(x.reshape(-1, 1), 1.0),
            HybridPair(np.exp(1j * rng.uniform(0, 6, (4, 2))), crandn(rng, 2, 3))]
    for sol in sols:
        back = solution_from_dict(solution_to_dict(sol))
        assert type(back) is type(sol)
        assert back.power() == pytest.approx(sol.power(), rel=1e-15)
