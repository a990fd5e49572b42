"""Linear algebra on so(n).

Skew matrices are plain ``numpy`` arrays of shape ``(n, n)``.  For building
linear operators on so(n) we use the ordered orthonormal basis
``{E_i ^ E_j : i < j}``; the coordinates of ``X`` in that basis are its
strict upper triangle (see :func:`vec`).  With this choice the pairing
``<X, Y> = -tr(XY)/2`` becomes the Euclidean dot product of coordinates.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

TOL_SKEW = 1e-12
TOL_UNIT = 1e-12
TOL_FRAME = 1e-10


class DimensionError(ValueError):
    """Operands live in spaces of different dimension."""


class NotOrthogonalError(ValueError):
    """A matrix that should be a rotation is not one."""


def dim_so(n: int) -> int:
    return n * (n - 1) // 2


def n_from_dim(N: int) -> int:
    n = int(round((1 + np.sqrt(1 + 8 * N)) / 2))
    if dim_so(n) != N:
        raise DimensionError(f"{N} is not the dimension of any so(n)")
    return n


@lru_cache(maxsize=None)
def _triu(n: int):
    return np.triu_indices(n, 1)


@lru_cache(maxsize=None)
def _basis(n: int) -> np.ndarray:
    iu = _triu(n)
    B = np.zeros((dim_so(n), n, n))
    a = np.arange(dim_so(n))
    B[a, iu[0], iu[1]] = 1.0
    B[a, iu[1], iu[0]] = -1.0
    B.setflags(write=False)
    return B


def basis(n: int) -> np.ndarray:
    """The wedge basis ``E_i ^ E_j`` (i < j) stacked into shape ``(N, n, n)``."""
    return _basis(n)


def vec(X: np.ndarray) -> np.ndarray:
    """Coordinates of a skew matrix (or a stack of them) in the wedge basis."""
    n = X.shape[-1]
    iu = _triu(n)
    return X[..., iu[0], iu[1]]


def unvec(v: np.ndarray, n: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if n is None:
        n = n_from_dim(v.shape[-1])
    elif v.shape[-1] != dim_so(n):
        raise DimensionError(f"expected {dim_so(n)} coordinates, got {v.shape[-1]}")
    iu = _triu(n)
    X = np.zeros(v.shape[:-1] + (n, n), dtype=v.dtype)
    X[..., iu[0], iu[1]] = v
    return X - np.swapaxes(X, -1, -2)


def as_skew(X, tol: float | None = None) -> np.ndarray:
    """Return ``(X - X^T)/2``.

    With ``tol`` set, first check that ``X`` was already skew to that
    (relative) tolerance.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {X.shape}")
    if X.shape[0] < 2:
        raise DimensionError("so(n) needs n >= 2")
    if tol is not None:
        scale = max(1.0, float(np.abs(X).max()))
        if np.abs(X + X.T).max() > tol * scale:
            raise ValueError("matrix is not skew-symmetric within tolerance")
    return 0.5 * (X - X.T)


def as_unit(v, tol: float | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise DimensionError(f"expected a vector of length >= 2, got shape {v.shape}")
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    if tol is not None and abs(norm - 1.0) > tol:
        raise ValueError(f"vector is not unit within {tol:g} (|v| = {norm!r})")
    return v / norm


def _check_same(x, y):
    if np.shape(x) != np.shape(y):
        raise DimensionError(f"shape mismatch: {np.shape(x)} vs {np.shape(y)}")


def wedge(x, y) -> np.ndarray:
    """``x ^ y = x y^T - y x^T``."""
    x = np.asarray(x)
    y = np.asarray(y)
    _check_same(x, y)
    if x.ndim != 1:
        raise DimensionError("wedge takes two vectors")
    return np.outer(x, y) - np.outer(y, x)


def pairing(X, Y) -> float:
    """The invariant scalar product ``-tr(XY)/2``."""
    _check_same(X, Y)
    return -0.5 * np.trace(X @ Y)


def commutator(X, Y) -> np.ndarray:
    _check_same(X, Y)
    return X @ Y - Y @ X


def is_rotation(g, tol: float = TOL_FRAME) -> bool:
    g = np.asarray(g)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        return False
    n = g.shape[0]
    return bool(np.abs(g.T @ g - np.eye(n)).max() <= tol and np.linalg.det(g) > 0)


def adjoint(g, X, tol: float = TOL_FRAME) -> np.ndarray:
    """``Ad_g X = g X g^{-1}`` for a rotation ``g``."""
    _check_same(g, X)
    if not is_rotation(g, tol):
        raise NotOrthogonalError("Ad_g needs g in SO(n)")
    return g @ X @ g.T


def proj_v(X, gamma) -> np.ndarray:
    """Orthogonal projection onto ``v_gamma = R^n ^ gamma``: ``(X gamma) ^ gamma``."""
    if X.shape[-1] != gamma.shape[-1]:
        raise DimensionError("X and gamma have different n")
    Xg = X @ gamma
    return np.outer(Xg, gamma) - np.outer(gamma, Xg)


def proj_h(X, gamma) -> np.ndarray:
    """Projection onto the complement ``h_gamma`` (rotations fixing gamma)."""
    return X - proj_v(X, gamma)


def operator_matrix(fn, n: int) -> np.ndarray:
    """Matrix of a linear map so(n) -> so(n) in wedge-basis coordinates."""
    return np.stack([vec(fn(b)) for b in basis(n)], axis=1)


def proj_v_matrix(gamma) -> np.ndarray:
    """Matrix of :func:`proj_v` in wedge-basis coordinates."""
    B = basis(gamma.shape[0])
    Bg = B @ gamma
    W = Bg[:, :, None] * gamma[None, None, :] - gamma[None, :, None] * Bg[:, None, :]
    return vec(W).T


def _householder_frame(gamma, north: bool | None = None) -> np.ndarray:
    # Written without abs/conj so that it also works for complex-step
    # differentiation.  ``north`` pins the branch; by default it follows
    # the sign of the last component.
    n = gamma.shape[0]
    gamma = gamma / np.sqrt(gamma @ gamma)
    if north is None:
        north = bool(np.real(gamma[-1]) >= 0.0)
    e_n = np.zeros(n)
    e_n[-1] = 1.0
    if north:
        v = gamma + e_n
        F = np.eye(n) - 2.0 * np.outer(v, v) / (v @ v)
        F[:, -1] = -F[:, -1]
    else:
        v = gamma - e_n
        F = np.eye(n) - 2.0 * np.outer(v, v) / (v @ v)
        F[:, 0] = -F[:, 0]
    return F


def complete_frame(gamma) -> np.ndarray:
    """A deterministic positively oriented orthonormal frame whose last column is ``gamma``.

    Built from one Householder reflection (sign-fixed to land in SO(n)).
    ``gamma = E_n`` gives the identity.  The map is smooth except across the
    equator ``gamma_n = 0`` where the branch switches.
    """
    return _householder_frame(as_unit(gamma))


def v_basis(frame) -> np.ndarray:
    """Coordinates of the orthonormal basis ``e_k ^ gamma`` (k < n) of v_gamma, as columns."""
    gamma = frame[:, -1]
    return np.stack([vec(wedge(frame[:, k], gamma)) for k in range(frame.shape[0] - 1)], axis=1)


def h_basis(frame) -> np.ndarray:
    """Coordinates of the orthonormal basis ``e_i ^ e_j`` (i < j < n) of h_gamma, as columns."""
    n = frame.shape[0]
    cols = [vec(wedge(frame[:, i], frame[:, j])) for i in range(n - 1) for j in range(i + 1, n - 1)]
    if not cols:
        return np.zeros((dim_so(n), 0))
    return np.stack(cols, axis=1)


def polar_rotation(M) -> np.ndarray:
    """Nearest rotation to ``M`` in the Frobenius norm."""
    U, _, Vt = np.linalg.svd(M)
    R = U @ Vt
    if np.linalg.det(R) < 0:
        U[:, -1] = -U[:, -1]
        R = U @ Vt
    return R


def hat(x) -> np.ndarray:
    """R^3 -> so(3), ``hat(x) y = x cross y``."""
    x1, x2, x3 = x
    return np.array([[0.0, -x3, x2], [x3, 0.0, -x1], [-x2, x1, 0.0]])


def vee(X) -> np.ndarray:
    return np.array([X[2, 1], X[0, 2], X[1, 0]])


def random_rotation(n: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.normal(size=(n, n)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def random_unit(n: int, rng: np.random.Generator) -> np.ndarray:
    return as_unit(rng.normal(size=n))


def random_skew(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return unvec(scale * rng.normal(size=dim_so(n)), n)
