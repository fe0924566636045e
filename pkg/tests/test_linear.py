"""Analysis of hyperbolic integer matrices and exact lattice arithmetic."""

import numpy as np
import pytest

from anosovlab import (
    NonHyperbolicError,
    SplittingPolicyError,
    analyze,
    coset_representatives,
    preimages_linear,
    torus_distance,
)
from conftest import E_S, E_U, LAMBDA_U, MU_S, MU_U


def test_reference_eigendata(A):
    assert A.degree == 2
    assert A.determinant == 2
    assert abs(A.unstable_eigenvalue - MU_U) < 1e-14
    assert abs(A.stable_eigenvalue - MU_S) < 1e-14
    assert abs(A.lambda_u - LAMBDA_U) < 1e-14
    assert abs(abs(A.e_u @ E_U) - 1.0) < 1e-14
    assert abs(abs(A.e_s @ E_S) - 1.0) < 1e-14


def test_eigenvectors_satisfy_eigen_equations(A):
    assert np.linalg.norm(A.matrix @ A.e_u - A.unstable_eigenvalue * A.e_u) < 1e-12
    assert np.linalg.norm(A.matrix @ A.e_s - A.stable_eigenvalue * A.e_s) < 1e-12
    assert abs(np.linalg.norm(A.e_u) - 1.0) < 1e-14
    assert abs(np.linalg.norm(A.e_s) - 1.0) < 1e-14


def test_unstable_rate_against_power_iteration(A):
    # independent cross-check of lambda_u: renormalized power iteration
    rng = np.random.default_rng(7)
    v = rng.normal(size=2)
    v /= np.linalg.norm(v)
    total = 0.0
    n, burn_in = 10_000, 100
    for i in range(n + burn_in):
        v = A.matrix @ v
        norm = np.linalg.norm(v)
        if i >= burn_in:
            total += np.log(norm)
        v /= norm
    assert abs(total / n - A.lambda_u) < 1e-9


def test_inverse_and_adjugate_are_exact(A):
    assert np.allclose(A.matrix @ A.inverse, np.eye(2), atol=1e-15)
    assert np.array_equal(A.adjugate, np.array([[1, -1], [-1, 3]]))


def test_coset_representatives_reference(A):
    assert np.array_equal(A.coset_reps, np.array([[0, 0], [0, 1]]))


def test_coset_representatives_are_pairwise_inequivalent():
    # det 2, det 3, and det -2 hyperbolic examples
    for matrix in ([[3, 1], [1, 1]], [[4, 1], [1, 1]], [[2, 1], [2, 0]]):
        endo = analyze(matrix)
        reps = coset_representatives(endo)
        assert len(reps) == endo.degree
        for i in range(len(reps)):
            for j in range(i + 1, len(reps)):
                assert not endo.in_image_lattice(reps[i] - reps[j])


def test_in_image_lattice_exact(A):
    rng = np.random.default_rng(8)
    k = rng.integers(-50, 50, size=(200, 2))
    assert np.all(A.in_image_lattice(k @ A.matrix_int.T))
    assert not A.in_image_lattice(np.array([1, 0]))
    assert not A.in_image_lattice(np.array([0, 1]))


def test_branch_of_offset_labels_cosets(A):
    for b, rep in enumerate(A.coset_reps):
        assert A.branch_of_offset(rep) == b
        assert A.branch_of_offset(rep + 7 * A.matrix_int @ np.array([2, -3])) == b


def test_preimages_of_zero(A):
    pre = preimages_linear(A, np.array([0.0, 0.0]))
    assert pre.shape == (2, 2)
    assert np.max(torus_distance(pre, np.array([[0.0, 0.0], [0.5, 0.5]]))) < 1e-12


def test_preimages_map_forward(A):
    rng = np.random.default_rng(9)
    for x in rng.uniform(size=(50, 2)):
        pre = preimages_linear(A, x)
        assert pre.shape == (2, 2)
        fwd = np.asarray(pre) @ A.matrix.T % 1.0
        assert np.max(torus_distance(fwd, x)) < 1e-12
        assert torus_distance(pre[0], pre[1]) > 0.1


def test_non_hyperbolic_matrices_rejected():
    # both are invertible over Z, so the degree-1 warning fires before
    # hyperbolicity is rejected
    with pytest.raises(NonHyperbolicError), pytest.warns(UserWarning):
        analyze([[1, 1], [0, 1]])  # parabolic, eigenvalue 1
    with pytest.raises(NonHyperbolicError), pytest.warns(UserWarning):
        analyze([[0, 1], [-1, 0]])  # rotation, |eigenvalues| = 1


def test_splitting_policy_requires_both_parts():
    with pytest.raises(SplittingPolicyError):
        analyze([[2, 0], [0, 3]])  # expanding map: no stable part


def test_singular_matrix_rejected():
    with pytest.raises(ValueError):
        analyze([[1, 1], [1, 1]])


def test_invertible_hyperbolic_matrix_warns():
    with pytest.warns(UserWarning):
        endo = analyze([[2, 1], [1, 1]])
    assert endo.degree == 1
    assert len(endo.coset_reps) == 1


def test_degree_three_preimages():
    endo = analyze([[4, 1], [1, 1]])
    assert endo.degree == 3
    rng = np.random.default_rng(10)
    x = rng.uniform(size=2)
    pre = preimages_linear(endo, x)
    assert pre.shape == (3, 2)
    fwd = np.asarray(pre) @ endo.matrix.T % 1.0
    assert np.max(torus_distance(fwd, x)) < 1e-12
