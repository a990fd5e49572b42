"""The Chaplygin ball rolling without slipping over a fixed sphere.

State variables are the momentum ``k`` about the contact point, the unit
normal ``gamma`` in the body frame and, for the full system, the attitude
``g``.  The angular velocity is never stored; it is recovered from ``k``
by inverting ``kappa``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .inertia import GeometryParams, InertiaSpec, kappa_solve
from .so_n import (
    TOL_FRAME,
    adjoint,
    as_skew,
    as_unit,
    commutator,
    dim_so,
    is_rotation,
    pairing,
    unvec,
    vec,
    vee,
    wedge,
)


@dataclass(frozen=True, eq=False)
class BallState:
    k: np.ndarray
    gamma: np.ndarray
    g: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "k", as_skew(self.k))
        object.__setattr__(self, "gamma", as_unit(self.gamma))
        if self.k.shape[0] != self.gamma.shape[0]:
            raise ValueError("k and gamma have different n")
        if self.g is not None:
            g = np.asarray(self.g, dtype=float)
            if not is_rotation(g, TOL_FRAME):
                raise ValueError("g must be a rotation matrix")
            object.__setattr__(self, "g", g)

    @property
    def n(self) -> int:
        return self.gamma.shape[0]

    def pack(self) -> np.ndarray:
        parts = [vec(self.k), self.gamma]
        if self.g is not None:
            parts.append(self.g.ravel())
        return np.concatenate(parts)

    @classmethod
    def unpack(cls, y: np.ndarray, n: int, with_g: bool = False) -> BallState:
        k, gamma, g = _split(y, n, with_g)
        return cls(k, gamma, g)


def _split(y, n, with_g):
    N = dim_so(n)
    k = unvec(y[:N], n)
    gamma = y[N : N + n]
    g = y[N + n :].reshape(n, n) if with_g else None
    return k, gamma, g


@dataclass(frozen=True, eq=False)
class FixedFrameDiag:
    r: np.ndarray
    V: np.ndarray
    M: np.ndarray
    Lam: np.ndarray
    Omega: np.ndarray
    Gamma: np.ndarray


def omega_of(k, gamma, spec: InertiaSpec, geom: GeometryParams) -> np.ndarray:
    return kappa_solve(spec, geom.D, gamma, k)


def reduced_rhs(k, gamma, spec: InertiaSpec, geom: GeometryParams):
    omega = omega_of(k, gamma, spec, geom)
    return commutator(k, omega), -geom.epsilon * (omega @ gamma), omega


def reduced_field(state: BallState, spec: InertiaSpec, geom: GeometryParams):
    """``(k', gamma') = ([k, omega], -eps omega gamma)``."""
    kdot, gdot, _ = reduced_rhs(state.k, state.gamma, spec, geom)
    return kdot, gdot


def full_field(state: BallState, spec: InertiaSpec, geom: GeometryParams):
    """Reduced field plus ``g' = g omega``."""
    if state.g is None:
        raise ValueError("full_field needs the attitude g")
    kdot, gdot, omega = reduced_rhs(state.k, state.gamma, spec, geom)
    return kdot, state.g @ omega, gdot


def energy(state: BallState, spec: InertiaSpec, geom: GeometryParams) -> float:
    omega = omega_of(state.k, state.gamma, spec, geom)
    return 0.5 * pairing(state.k, omega)


def omega_dot(k, gamma, spec: InertiaSpec, geom: GeometryParams) -> np.ndarray:
    """Time derivative of the angular velocity along the flow.

    From ``k = kappa(gamma) omega``: ``omega' = kappa^{-1}(k' - D (d/dt pr_v) omega)``.
    """
    kdot, gdot, omega = reduced_rhs(k, gamma, spec, geom)
    wg = omega @ gamma
    wgd = omega @ gdot
    dproj = wedge(wgd, gamma) + wedge(wg, gdot)
    return kappa_solve(spec, geom.D, gamma, kdot - geom.D * dproj)


def diag_fixed_frame(state: BallState, spec: InertiaSpec, geom: GeometryParams) -> FixedFrameDiag:
    """Position, velocity, momentum and constraint reaction in the space frame."""
    if state.g is None:
        raise ValueError("fixed-frame quantities need the attitude g")
    g, gamma, s = state.g, state.gamma, geom.sign
    rho = geom.rho
    R = geom.center_radius
    omega = omega_of(state.k, gamma, spec, geom)
    Omega = adjoint(g, omega)
    Gamma = g @ gamma
    Gamma_dot = s * rho / R * (Omega @ Gamma)
    Omega_dot = adjoint(g, omega_dot(state.k, gamma, spec, geom))
    return FixedFrameDiag(
        r=R * Gamma,
        V=s * rho * (Omega @ Gamma),
        M=adjoint(g, spec.apply(omega)),
        Lam=s * geom.mass * rho * (Omega_dot @ Gamma + Omega @ Gamma_dot),
        Omega=Omega,
        Gamma=Gamma,
    )


def integrals_3d(state: BallState, spec: InertiaSpec, geom: GeometryParams) -> dict:
    """The classical integrals F1..F4 and the Borisov-Fedorov integral of the 3D ball.

    ``F4`` is conserved only for eps = 1 and ``F4_tilde`` only for eps = -1;
    both are returned regardless.  ``F4_tilde`` needs a body-diagonal inertia.
    """
    if state.n != 3:
        raise ValueError("integrals_3d is only defined for n = 3")
    omega = omega_of(state.k, state.gamma, spec, geom)
    k3, w3, g3 = vee(state.k), vee(omega), state.gamma
    out = {
        "F1": float(g3 @ g3),
        "F2": 0.5 * float(k3 @ w3),
        "F3": float(k3 @ k3),
        "F4": float(k3 @ g3),
    }
    M = spec.matrix
    if np.abs(M - np.diag(np.diag(M))).max() == 0.0:
        I3, I2, I1 = np.diag(M)
        D = geom.D
        c = np.array([I2 + I3 - I1 + D, I3 + I1 - I2 + D, I1 + I2 - I3 + D])
        out["F4_tilde"] = float(np.sum(c * k3 * g3))
    return out
