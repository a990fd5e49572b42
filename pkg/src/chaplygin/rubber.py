"""The rubber Chaplygin ball: no slipping and no twisting at the contact point.

The admissible angular velocities are ``omega in v_gamma``.  Momentum is
``m = I omega`` with the modified operator ``I = inertia + D E``; the
constraint is maintained by a reaction ``lambda_0 in h_gamma``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .inertia import GeometryParams, InertiaSpec, SingularOperatorError
from .so_n import (
    TOL_FRAME,
    as_skew,
    as_unit,
    commutator,
    complete_frame,
    dim_so,
    h_basis,
    pairing,
    polar_rotation,
    proj_h,
    proj_v,
    proj_v_matrix,
    unvec,
    vec,
)

TOL_TWIST = 1e-8


@dataclass(frozen=True, eq=False)
class RubberState:
    """Momentum ``m`` and a body frame ``e_1..e_n`` whose last column is gamma."""

    m: np.ndarray
    frame: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "m", as_skew(self.m))
        F = np.asarray(self.frame, dtype=float)
        n = F.shape[0]
        if F.shape != (n, n) or self.m.shape != (n, n):
            raise ValueError("m and frame must both be n x n")
        if np.abs(F.T @ F - np.eye(n)).max() > TOL_FRAME or np.linalg.det(F) < 0:
            raise ValueError("frame must be positively oriented and orthonormal")
        object.__setattr__(self, "frame", F)

    @property
    def gamma(self) -> np.ndarray:
        return self.frame[:, -1]

    @property
    def n(self) -> int:
        return self.frame.shape[0]

    @classmethod
    def from_gamma(cls, m, gamma) -> RubberState:
        return cls(m, complete_frame(gamma))

    def pack(self) -> np.ndarray:
        return np.concatenate([vec(self.m), self.frame.ravel()])

    @classmethod
    def unpack(cls, y, n) -> RubberState:
        N = dim_so(n)
        return cls(unvec(y[:N], n), y[N:].reshape(n, n))


@dataclass(frozen=True, eq=False)
class ExtMomentumState:
    mm: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mm", as_skew(self.mm))
        object.__setattr__(self, "gamma", as_unit(self.gamma))

    @property
    def n(self) -> int:
        return self.gamma.shape[0]

    def pack(self) -> np.ndarray:
        return np.concatenate([vec(self.mm), self.gamma])

    @classmethod
    def unpack(cls, y, n) -> ExtMomentumState:
        N = dim_so(n)
        return cls(unvec(y[:N], n), y[N:])


class RubberOperators:
    """Caches ``I`` and ``I^{-1}`` for one inertia and geometry."""

    def __init__(self, spec: InertiaSpec, geom: GeometryParams):
        self.spec = spec
        self.geom = geom
        self.n = spec.n
        self.I = spec.modified(geom.D)
        self.Iinv = np.linalg.inv(self.I)

    def omega(self, m):
        return unvec(self.Iinv @ vec(m), self.n)

    def momentum(self, omega):
        return unvec(self.I @ vec(omega), self.n)


def _ops(spec, geom, ops):
    return ops if ops is not None else RubberOperators(spec, geom)


def no_twist_residuals(omega, frame) -> np.ndarray:
    """``phi_ij = <omega, e_i ^ e_j>`` for ``i < j < n``."""
    return h_basis(frame).T @ vec(omega)


def lambda0_solve(m, gamma, spec: InertiaSpec, geom: GeometryParams, frame=None, ops=None) -> np.ndarray:
    """Reaction ``lambda_0 in h_gamma`` keeping ``omega`` in ``v_gamma``.

    Solves ``A lambda = -H^T I^{-1} [m, omega]`` where the columns of ``H``
    are the ``e_i ^ e_j`` and ``A = H^T I^{-1} H``.
    """
    ops = _ops(spec, geom, ops)
    if frame is None:
        frame = complete_frame(gamma)
    H = h_basis(frame)
    if H.shape[1] == 0:
        return np.zeros_like(m)
    omega = ops.omega(m)
    rhs = -H.T @ (ops.Iinv @ vec(commutator(m, omega)))
    A = H.T @ ops.Iinv @ H
    try:
        lam = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularOperatorError("singular multiplier system") from exc
    return unvec(H @ lam, spec.n)


def rubber_rhs(m, frame, spec, geom, ops=None):
    ops = _ops(spec, geom, ops)
    gamma = frame[:, -1]
    omega = ops.omega(m)
    lam = lambda0_solve(m, gamma, spec, geom, frame, ops)
    mdot = commutator(m, omega) + lam
    framedot = -geom.epsilon * (omega @ frame)
    return mdot, framedot


def rubber_field(state: RubberState, spec: InertiaSpec, geom: GeometryParams, ops=None):
    """``m' = [m, omega] + lambda_0``, ``e_i' = -eps omega e_i`` (so ``gamma' = -eps omega gamma``).

    Returns ``(m', gamma', frame')``.
    """
    mdot, framedot = rubber_rhs(state.m, state.frame, spec, geom, ops)
    return mdot, framedot[:, -1], framedot


def rubber_reduced_field(m, gamma, spec, geom, ops=None):
    """``(m', gamma')`` without carrying a frame; ``lambda_0`` does not depend on the frame."""
    ops = _ops(spec, geom, ops)
    omega = ops.omega(m)
    lam = lambda0_solve(m, gamma, spec, geom, None, ops)
    return commutator(m, omega) + lam, -geom.epsilon * (omega @ gamma)


def project_rubber(m, frame, spec, geom, ops=None) -> RubberState:
    """Restore frame orthonormality and the no-twist constraint after a discrete step.

    Takes raw arrays since the drifted input is not a valid state.
    ``m <- m - I pr_h(I^{-1} m)``, the minimal change in the kinetic metric.
    """
    ops = _ops(spec, geom, ops)
    F = polar_rotation(np.asarray(frame, dtype=float))
    m = as_skew(m)
    m = m - ops.momentum(proj_h(ops.omega(m), F[:, -1]))
    return RubberState(m, F)


def rubber_energy(m, spec, geom, ops=None) -> float:
    ops = _ops(spec, geom, ops)
    return 0.5 * pairing(m, ops.omega(m))


def momentum_matrix(Ibold: np.ndarray, gamma) -> np.ndarray:
    """Matrix of ``omega -> pr_v(I omega) + pr_h(omega)``."""
    P = proj_v_matrix(gamma)
    return P @ Ibold + (np.eye(P.shape[0]) - P)


def ext_momentum(omega, gamma, Ibold) -> np.ndarray:
    n = gamma.shape[0]
    return unvec(momentum_matrix(Ibold, gamma) @ vec(omega), n)


def omega_from_ext_momentum(mm, gamma, Ibold) -> np.ndarray:
    n = gamma.shape[0]
    try:
        w = np.linalg.solve(momentum_matrix(Ibold, gamma), vec(mm))
    except np.linalg.LinAlgError as exc:
        raise SingularOperatorError("momentum map is not invertible") from exc
    return unvec(w, n)


def ext_momentum_field(state: ExtMomentumState, spec: InertiaSpec, geom: GeometryParams, ops=None):
    """``mm' = eps [mm, omega] + (1 - eps) pr_v [I omega, omega]``, ``gamma' = -eps omega gamma``."""
    ops = _ops(spec, geom, ops)
    eps = geom.epsilon
    gamma = state.gamma
    omega = omega_from_ext_momentum(state.mm, gamma, ops.I)
    Iw = ops.momentum(omega)
    mmdot = eps * commutator(state.mm, omega) + (1 - eps) * proj_v(commutator(Iw, omega), gamma)
    return mmdot, -eps * (omega @ gamma)


def rubber_field_3d(m3, gamma3, Ibold3, eps: float):
    """The 3D rubber ball in vector form.

    ``m' = m x omega + lambda gamma``, ``gamma' = eps gamma x omega`` with
    ``lambda = -(gamma, I^{-1}(m x omega)) / (gamma, I^{-1} gamma)``, obtained by
    differentiating ``(gamma, omega) = 0``.  ``Ibold3`` is the 3x3 modified
    inertia acting on angular velocity vectors.
    """
    m3 = np.asarray(m3, dtype=float)
    gamma3 = np.asarray(gamma3, dtype=float)
    if m3.shape != (3,) or gamma3.shape != (3,):
        raise ValueError("rubber_field_3d works on vectors in R^3")
    Iinv = np.linalg.inv(Ibold3)
    w = Iinv @ m3
    mxw = np.cross(m3, w)
    # (m, I^{-1}(m x omega)) = (omega, m x omega) = 0, so the numerator must pair with gamma
    lam = -(gamma3 @ (Iinv @ mxw)) / (gamma3 @ Iinv @ gamma3)
    return mxw + lam * gamma3, eps * np.cross(gamma3, w)


def ibold3_from_spec(spec: InertiaSpec, D: float) -> np.ndarray:
    """3x3 matrix of ``I + D E`` acting on angular velocity vectors (via the hat map)."""
    if spec.n != 3:
        raise ValueError("need n = 3")
    # wedge coordinates of hat(x) are (-x3, x2, -x1)
    S = np.array([[0, 0, -1.0], [0, 1.0, 0], [-1.0, 0, 0]])
    return S @ spec.modified(D) @ S


