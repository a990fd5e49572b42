import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chaplygin.so_n import (
    DimensionError,
    NotOrthogonalError,
    adjoint,
    as_skew,
    as_unit,
    basis,
    commutator,
    complete_frame,
    dim_so,
    h_basis,
    hat,
    operator_matrix,
    pairing,
    polar_rotation,
    proj_h,
    proj_v,
    proj_v_matrix,
    random_rotation,
    random_skew,
    random_unit,
    unvec,
    v_basis,
    vec,
    vee,
    wedge,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 6)


def E(n, i):
    e = np.zeros(n)
    e[i] = 1.0
    return e


def test_wedge_of_basis_vectors():
    W = wedge(E(3, 0), E(3, 1))
    expected = np.zeros((3, 3))
    expected[0, 1], expected[1, 0] = 1.0, -1.0
    np.testing.assert_array_equal(W, expected)


def test_wedge_with_itself_is_zero(rng):
    x = rng.normal(size=5)
    np.testing.assert_array_equal(wedge(x, x), np.zeros((5, 5)))


def test_wedge_dimension_mismatch():
    with pytest.raises(DimensionError):
        wedge(np.ones(3), np.ones(4))


@given(seeds, dims)
def test_wedge_pairing_gram_identity(seed, n):
    rng = np.random.default_rng(seed)
    x, y, z, w = rng.normal(size=(4, n))
    lhs = pairing(wedge(x, y), wedge(z, w))
    # dense-trace oracle
    A = np.outer(x, y) - np.outer(y, x)
    B = np.outer(z, w) - np.outer(w, z)
    assert lhs == pytest.approx(-0.5 * np.trace(A @ B), rel=1e-12, abs=1e-12)
    assert lhs == pytest.approx((x @ z) * (y @ w) - (x @ w) * (y @ z), rel=1e-10, abs=1e-10)


def test_pairing_on_basis():
    assert pairing(wedge(E(3, 0), E(3, 1)), wedge(E(3, 0), E(3, 1))) == 1.0
    assert pairing(wedge(E(3, 0), E(3, 1)), wedge(E(3, 0), E(3, 2))) == 0.0


@given(seeds, dims)
def test_pairing_is_sum_of_squares_and_matches_coordinates(seed, n):
    rng = np.random.default_rng(seed)
    X, Y = random_skew(n, rng), random_skew(n, rng)
    iu = np.triu_indices(n, 1)
    assert pairing(X, X) == pytest.approx(np.sum(X[iu] ** 2), rel=1e-12)
    assert pairing(X, Y) == pytest.approx(vec(X) @ vec(Y), rel=1e-10, abs=1e-12)


def test_basis_is_orthonormal():
    B = basis(4)
    G = np.array([[pairing(a, b) for b in B] for a in B])
    np.testing.assert_allclose(G, np.eye(dim_so(4)), atol=1e-15)


@given(seeds, dims)
def test_vec_unvec_roundtrip(seed, n):
    X = random_skew(n, np.random.default_rng(seed))
    np.testing.assert_array_equal(unvec(vec(X)), X)


def test_unvec_wrong_length():
    with pytest.raises(DimensionError):
        unvec(np.zeros(4), 3)


def test_as_skew_antisymmetrizes_and_checks():
    M = np.arange(9.0).reshape(3, 3)
    S = as_skew(M)
    np.testing.assert_array_equal(S, -S.T)
    with pytest.raises(ValueError):
        as_skew(M, tol=1e-12)
    with pytest.raises(DimensionError):
        as_skew(np.zeros((1, 1)))


def test_as_unit():
    np.testing.assert_allclose(as_unit([3.0, 4.0]), [0.6, 0.8])
    with pytest.raises(ValueError):
        as_unit([0.0, 0.0])
    with pytest.raises(ValueError):
        as_unit([1.0, 1.0], tol=1e-12)


def test_commutator_with_itself(rng):
    X = random_skew(4, rng)
    np.testing.assert_array_equal(commutator(X, X), np.zeros((4, 4)))


def test_adjoint_identity_and_rejects_non_rotation(rng):
    X = random_skew(4, rng)
    np.testing.assert_array_equal(adjoint(np.eye(4), X), X)
    with pytest.raises(NotOrthogonalError):
        adjoint(2 * np.eye(4), X)
    reflection = np.diag([1.0, 1.0, 1.0, -1.0])
    with pytest.raises(NotOrthogonalError):
        adjoint(reflection, X)


@given(seeds, dims)
def test_adjoint_preserves_pairing(seed, n):
    rng = np.random.default_rng(seed)
    g = random_rotation(n, rng)
    X, Y = random_skew(n, rng), random_skew(n, rng)
    assert abs(pairing(adjoint(g, X), adjoint(g, Y)) - pairing(X, Y)) < 1e-12 * max(1, abs(pairing(X, Y))) + 1e-12


def test_proj_v_n3_e3():
    X = unvec(np.array([1.0, 2.0, 3.0]), 3)  # (1,2), (1,3), (2,3) components
    P = proj_v(X, E(3, 2))
    np.testing.assert_allclose(vec(P), [0.0, 2.0, 3.0])


@given(seeds, st.integers(3, 6))
def test_projection_properties(seed, n):
    rng = np.random.default_rng(seed)
    X, Y = random_skew(n, rng), random_skew(n, rng)
    g = random_unit(n, rng)
    Pv = proj_v(X, g)
    np.testing.assert_allclose(proj_v(Pv, g), Pv, atol=1e-12)
    np.testing.assert_allclose(proj_v(X, g) + proj_h(X, g), X, atol=1e-12)
    assert abs(pairing(Pv, Y - proj_v(Y, g))) < 1e-12
    assert abs(pairing(Pv, proj_h(Y, g))) < 1e-12
    # self-adjoint
    assert abs(pairing(proj_v(X, g), Y) - pairing(X, proj_v(Y, g))) < 1e-12
    # image of x ^ gamma
    x = rng.normal(size=n)
    np.testing.assert_allclose(proj_h(wedge(x, g), g), 0, atol=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_proj_h_rank(n, rng):
    g = random_unit(n, rng)
    P = operator_matrix(lambda X: proj_h(X, g), n)
    assert np.linalg.matrix_rank(P, tol=1e-10) == (n - 1) * (n - 2) // 2
    np.testing.assert_allclose(np.eye(dim_so(n)) - P, proj_v_matrix(g), atol=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_complete_frame_at_pole_is_identity(n):
    np.testing.assert_allclose(complete_frame(E(n, n - 1)), np.eye(n), atol=1e-15)


@given(seeds, dims)
def test_complete_frame_is_oriented_orthonormal(seed, n):
    g = random_unit(n, np.random.default_rng(seed))
    F = complete_frame(g)
    np.testing.assert_allclose(F.T @ F, np.eye(n), atol=1e-12)
    assert np.linalg.det(F) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(F[:, -1], g, atol=1e-15)
    np.testing.assert_array_equal(complete_frame(g), F)


def test_complete_frame_south_pole():
    F = complete_frame(-E(4, 3))
    np.testing.assert_allclose(F.T @ F, np.eye(4), atol=1e-15)
    assert np.linalg.det(F) == pytest.approx(1.0)
    np.testing.assert_allclose(F[:, -1], -E(4, 3))


@given(seeds, st.integers(3, 6))
def test_subspace_bases_split_so_n(seed, n):
    F = complete_frame(random_unit(n, np.random.default_rng(seed)))
    B = np.hstack([v_basis(F), h_basis(F)])
    np.testing.assert_allclose(B.T @ B, np.eye(dim_so(n)), atol=1e-12)
    g = F[:, -1]
    np.testing.assert_allclose(proj_v_matrix(g) @ v_basis(F), v_basis(F), atol=1e-12)


def test_polar_rotation(rng):
    g = random_rotation(4, rng)
    R = polar_rotation(g + 1e-6 * rng.normal(size=(4, 4)))
    np.testing.assert_allclose(R.T @ R, np.eye(4), atol=1e-14)
    assert np.linalg.det(R) > 0
    assert np.abs(R - g).max() < 1e-5


@given(seeds)
def test_hat_commutator_is_cross_product(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(2, 3))
    np.testing.assert_allclose(vee(commutator(hat(x), hat(y))), np.cross(x, y), atol=1e-12)
    np.testing.assert_allclose(hat(x) @ y, np.cross(x, y), atol=1e-12)
    np.testing.assert_array_equal(vee(hat(x)), x)
