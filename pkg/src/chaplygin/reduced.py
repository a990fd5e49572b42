"""The rubber ball reduced by SO(n) to the cotangent bundle of the sphere.

Points of ``T*S^{n-1}`` are pairs ``(p, gamma)`` in ``R^{2n}`` with
``(gamma, gamma) = 1`` and ``(gamma, p) = 0``.  Fields here return
``(p', gamma')``.  For the special inertia ``I(E_i^E_j) = a_i a_j E_i^E_j``
(after adding ``D``) everything is in closed form in terms of
``A = diag(a)``; for general inertia the inverse Legendre map is solved
numerically.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .inertia import GeometryParams, InertiaSpec
from .so_n import as_unit, complete_frame, pairing, unvec, v_basis, vec, wedge

TOL_COT = 1e-10


class LegendreError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class CotangentState:
    p: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        g = np.asarray(self.gamma, dtype=float)
        if p.shape != g.shape or g.ndim != 1:
            raise ValueError("p and gamma must be vectors of the same length")
        if abs(g @ g - 1.0) > TOL_COT:
            raise ValueError(f"(gamma, gamma) = 1 violated: {g @ g!r}")
        if abs(g @ p) > TOL_COT * max(1.0, np.linalg.norm(p)):
            raise ValueError(f"(gamma, p) = 0 violated: {g @ p!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "gamma", g)

    @classmethod
    def project(cls, p, gamma) -> CotangentState:
        """Nearest admissible state: normalize gamma, drop the normal part of p."""
        g = as_unit(gamma)
        p = np.asarray(p, dtype=float)
        return cls(p - (p @ g) * g, g)

    def pack(self) -> np.ndarray:
        return np.concatenate([self.p, self.gamma])

    @classmethod
    def unpack(cls, y, n) -> CotangentState:
        return cls(y[:n], y[n:])


# the rescaled momenta p~ = nu p satisfy the same two constraints
TildeState = CotangentState


def _ibold(spec: InertiaSpec, geom: GeometryParams):
    return spec.modified(geom.D)


def _ibold_wedge(Ibold, x, y):
    n = x.shape[0]
    return unvec(Ibold @ vec(wedge(x, y)), n)


def reduced_lagrangian(gamma_dot, gamma, spec: InertiaSpec, geom: GeometryParams, tol: float = 1e-10) -> float:
    """``<I(gamma ^ gamma'), gamma ^ gamma'> / (2 eps^2)``."""
    if abs(gamma @ gamma_dot) > tol * max(1.0, np.linalg.norm(gamma_dot)):
        raise ValueError("gamma_dot must be tangent to the sphere at gamma")
    eps = geom.epsilon
    W = wedge(gamma, gamma_dot)
    return pairing(_ibold_wedge(_ibold(spec, geom), gamma, gamma_dot), W) / (2 * eps**2)


def reduced_lagrangian_special(gamma_dot, gamma, A, eps: float) -> float:
    Ag = A @ gamma
    return ((A @ gamma_dot) @ gamma_dot * (Ag @ gamma) - (Ag @ gamma_dot) ** 2) / (2 * eps**2)


def horizontal_lift(gamma_dot, gamma, g, geom: GeometryParams):
    """Lift of a base velocity to the constraint distribution: ``(omega, V)``.

    ``omega = gamma ^ gamma' / eps`` and ``V = -(sigma +- rho)(+-rho/sigma) g gamma'``.
    """
    eps = geom.epsilon
    omega = wedge(gamma, gamma_dot) / eps
    V = -geom.center_radius * (geom.sign * geom.rho / geom.sigma) * (g @ gamma_dot)
    return omega, V


def jk_coefficient(eps: float) -> float:
    """Curvature factor ``(2 eps - 1)/eps^2`` (equals ``1 - rho^2/sigma^2``)."""
    if eps == 0:
        raise ValueError("eps must be nonzero")
    return (2 * eps - 1) / eps**2


def curvature(xi1, xi2, g, eps: float) -> np.ndarray:
    """so(n)-valued curvature of the rubber connection on lifts of ``xi1, xi2``."""
    return jk_coefficient(eps) * (g @ wedge(xi2, xi1) @ g.T)


def jk_term(gamma_dot, gamma, xi, spec: InertiaSpec, geom: GeometryParams) -> float:
    """``((2 eps - 1)/eps^3) (I(gamma ^ gamma') gamma', xi)``."""
    eps = geom.epsilon
    X = _ibold_wedge(_ibold(spec, geom), gamma, gamma_dot)
    return jk_coefficient(eps) / eps * float((X @ gamma_dot) @ xi)


def legendre(gamma_dot, gamma, Ibold, eps: float) -> np.ndarray:
    """``p = -I(gamma ^ gamma') gamma / eps^2``."""
    return -(_ibold_wedge(Ibold, gamma, gamma_dot) @ gamma) / eps**2


def inverse_legendre(p, gamma, Ibold, eps: float, frame=None) -> np.ndarray:
    """Velocity ``gamma'`` with ``legendre(gamma') = p``, solved in the tangent basis of ``frame``."""
    F = complete_frame(gamma) if frame is None else frame
    B = v_basis(F)
    G = B.T @ Ibold @ B
    try:
        c = np.linalg.solve(G, F[:, :-1].T @ p)
    except np.linalg.LinAlgError as exc:
        raise LegendreError("Legendre map is singular") from exc
    return eps**2 * (F[:, :-1] @ c)


def reduced_field_generic(state: CotangentState, spec: InertiaSpec, geom: GeometryParams, Ibold=None):
    """Reduced flow ``p' = ((1 - eps)/eps) Upsilon + mu gamma`` for any inertia.

    ``Upsilon = I(gamma ^ gamma') gamma' / eps^2`` and ``mu`` keeps
    ``(gamma, p)`` constant.
    """
    eps = geom.epsilon
    Ib = _ibold(spec, geom) if Ibold is None else Ibold
    p, gamma = state.p, state.gamma
    gdot = inverse_legendre(p, gamma, Ib, eps)
    ups = (_ibold_wedge(Ib, gamma, gdot) @ gdot) / eps**2
    c = (1 - eps) / eps
    mu = -(gdot @ p + c * (ups @ gamma)) / (gamma @ gamma)
    return c * ups + mu * gamma, gdot


def reduced_field_special(state: CotangentState, A, eps: float):
    """Closed-form reduced flow for the special inertia with ``A = diag(a)``."""
    A = np.asarray(A, dtype=float)
    Ainv = np.linalg.inv(A)
    p, g = state.p, state.gamma
    gAg = g @ A @ g
    Ag = A @ g
    pAip = p @ Ainv @ p
    pAig = p @ Ainv @ g
    gdot = eps**2 / gAg * (Ainv @ p - pAig * g)
    pdot = eps * (1 - eps) / gAg**2 * (pAip * Ag + pAig * gAg * p) - eps / gAg * pAip * g
    return pdot, gdot


def hamiltonian_special(state: CotangentState, A, eps: float) -> float:
    A = np.asarray(A, dtype=float)
    return 0.5 * eps**2 * (state.p @ np.linalg.solve(A, state.p)) / (state.gamma @ A @ state.gamma)


def hamiltonian_generic(state: CotangentState, spec: InertiaSpec, geom: GeometryParams) -> float:
    """Energy ``(p, gamma')/2`` (the reduced Lagrangian is quadratic in the velocity)."""
    gdot = inverse_legendre(state.p, state.gamma, _ibold(spec, geom), geom.epsilon)
    return 0.5 * float(state.p @ gdot)


def multiplier(gamma, A, eps: float) -> float:
    """Chaplygin reducing multiplier ``nu = eps (A gamma, gamma)^(1/(2 eps) - 1)``."""
    if eps == 0:
        raise ValueError("eps must be nonzero")
    return eps * (gamma @ A @ gamma) ** (1 / (2 * eps) - 1)


def metric_eval(gamma, dgamma, A, eps: float, tol: float = 1e-10) -> float:
    """``ds^2_{A,eps}(dgamma) = (gamma, A gamma)^(1/eps - 2)[(A dg, dg)(A g, g) - (A g, dg)^2]``."""
    if eps == 0:
        raise ValueError("eps must be nonzero")
    if abs(gamma @ dgamma) > tol * max(1.0, np.linalg.norm(dgamma)):
        raise ValueError("dgamma must be tangent to the sphere at gamma")
    Ag = A @ gamma
    gAg = Ag @ gamma
    return gAg ** (1 / eps - 2) * ((A @ dgamma) @ dgamma * gAg - (Ag @ dgamma) ** 2)


def metric_horizontal(gamma, dgamma, A) -> float:
    """The metric of the rolling over a hyperplane."""
    Ag = A @ gamma
    gAg = Ag @ gamma
    return ((A @ dgamma) @ dgamma * gAg - (Ag @ dgamma) ** 2) / gAg


def hamiltonian_tilde(state: CotangentState, A, eps: float) -> float:
    g, pt = state.gamma, state.p
    return 0.5 * (g @ A @ g) ** (1 - 1 / eps) * (pt @ np.linalg.solve(A, pt))


def hamiltonized_field(state: CotangentState, A, eps: float):
    """Geodesic flow of ``ds^2_{A,eps}`` in the new time, returns ``(p~', gamma')``."""
    A = np.asarray(A, dtype=float)
    Ainv = np.linalg.inv(A)
    pt, g = state.p, state.gamma
    gAg = g @ A @ g
    s = gAg ** (1 - 1 / eps)
    Aip = Ainv @ pt
    ptAipt = pt @ Aip
    mu = s * (Aip @ g)
    two_lam = -s * ptAipt / eps
    gprime = s * Aip - mu * g
    ptprime = (1 - eps) / eps * gAg ** (-1 / eps) * ptAipt * (A @ g) + two_lam * g + mu * pt
    return ptprime, gprime


def to_tilde(state: CotangentState, A, eps: float) -> CotangentState:
    nu = multiplier(state.gamma, A, eps)
    return CotangentState(nu * state.p, state.gamma)


def from_tilde(state: CotangentState, A, eps: float) -> CotangentState:
    nu = multiplier(state.gamma, A, eps)
    return CotangentState(state.p / nu, state.gamma)


def verify_hamiltonization(state: CotangentState, A, eps: float) -> float:
    """Max discrepancy between the reduced field and the rescaled Hamiltonian field.

    With ``p~ = nu p`` and ``d tau = nu dt`` the chain rule gives
    ``gamma' = nu gamma^(tau)`` and ``p' = p~^(tau) - (d nu/dt / nu) p``.
    """
    A = np.asarray(A, dtype=float)
    pdot, gdot = reduced_field_special(state, A, eps)
    nu = multiplier(state.gamma, A, eps)
    ptau, gtau = hamiltonized_field(to_tilde(state, A, eps), A, eps)
    g = state.gamma
    gamma_dot = nu * gtau
    grad_log_nu = (1 / (2 * eps) - 1) * 2 * (A @ g) / (g @ A @ g)
    p_dot = ptau - (grad_log_nu @ gamma_dot) * state.p
    scale = max(1.0, np.abs(pdot).max(), np.abs(gdot).max())
    return float(max(np.abs(p_dot - pdot).max(), np.abs(gamma_dot - gdot).max()) / scale)


def ext_momentum_of(state: CotangentState, eps: float) -> np.ndarray:
    """The mixed momentum of the rubber ball over a reduced state: ``eps gamma ^ p``."""
    return eps * wedge(state.gamma, state.p)
