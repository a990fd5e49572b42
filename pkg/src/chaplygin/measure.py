"""Finite-difference Liouville test for invariant measures.

A density ``rho`` is invariant for a field ``f`` iff ``div(rho f) = 0``.
Divergence depends on the coordinates, so every check goes through a
:class:`Chart`: ambient points are mapped to chart coordinates ``x``,
the field is pushed forward to ``x'`` and the chart volume factor
``J(x)`` is folded into the density, giving ``sum_i d_i(rho J x'_i)``.
"""
from __future__ import annotations

import numpy as np

from .so_n import _householder_frame, dim_so, unvec, v_basis, vec

FD_STEP = 1e-5
CS_STEP = 1e-30


class DensityError(ValueError):
    pass


def _cs(fn, x, d):
    """Directional derivative of an analytic ``fn`` at ``x`` along ``d`` by complex step."""
    return np.imag(fn(x + 1j * CS_STEP * d)) / CS_STEP


class Chart:
    """Euclidean chart: the ambient coordinates themselves."""

    def __init__(self, dim: int):
        self.dim = dim
        # evaluation point in chart coordinates
        self.x0 = np.zeros(dim)

    def to_ambient(self, x):
        return np.asarray(x, dtype=float)

    def velocity(self, x, y, ydot):
        return ydot

    def volume(self, x) -> float:
        return 1.0

    def origin(self) -> np.ndarray:
        return self.x0.copy()


class SphereChart(Chart):
    """Gnomonic chart of ``S^{n-1}`` centered at ``gamma0``.

    ``gamma(q) = (gamma0 + E q)/|gamma0 + E q|`` with ``E`` an orthonormal
    basis of the tangent space at ``gamma0``; the round volume is
    ``(1 + |q|^2)^(-n/2) dq``.
    """

    def __init__(self, gamma0, north: bool | None = None):
        g = np.asarray(gamma0, dtype=float)
        g = g / np.linalg.norm(g)
        self.n = g.shape[0]
        self.north = bool(g[-1] >= 0) if north is None else north
        F = _householder_frame(g, self.north)
        self.g0 = F[:, -1]
        self.E = F[:, :-1]
        super().__init__(self.n - 1)

    def point(self, q):
        x = self.g0 + self.E @ q
        return x / np.sqrt(x @ x)

    def coords(self, gamma):
        return (self.E.T @ gamma) / (self.g0 @ gamma)

    def coord_velocity(self, gamma, gdot):
        c = self.g0 @ gamma
        return self.E.T @ gdot / c - (self.E.T @ gamma) * (self.g0 @ gdot) / c**2

    def tangent_map(self, q):
        """Columns ``d gamma / d q_k``."""
        x = self.g0 + self.E @ q
        r = np.sqrt(x @ x)
        g = x / r
        return (self.E - np.outer(g, g @ self.E)) / r

    def to_ambient(self, x):
        return self.point(x)

    def velocity(self, x, y, ydot):
        return self.coord_velocity(y, ydot)

    def volume(self, x) -> float:
        return float((1 + x @ x) ** (-self.n / 2))


class ProductChart(Chart):
    """Euclidean block of size ``k`` followed by a sphere chart; ambient ``[z, gamma]``."""

    def __init__(self, k: int, sphere: SphereChart):
        self.k, self.sphere = k, sphere
        super().__init__(k + sphere.dim)

    def to_ambient(self, x):
        return np.concatenate([x[: self.k], self.sphere.point(x[self.k :])])

    def velocity(self, x, y, ydot):
        k = self.k
        return np.concatenate([ydot[:k], self.sphere.coord_velocity(y[k:], ydot[k:])])

    def volume(self, x) -> float:
        return self.sphere.volume(x[self.k :])


class CotangentChart(Chart):
    """Canonical chart ``(q, P)`` of ``T*S^{n-1}``; ambient ``[p, gamma]``.

    ``P = J(q)^T p`` with ``J`` the tangent map of the sphere chart, so
    the Liouville volume is ``dq dP`` (volume factor 1).
    """

    def __init__(self, gamma0, north: bool | None = None):
        self.sphere = SphereChart(gamma0, north)
        self.n = self.sphere.n
        super().__init__(2 * (self.n - 1))

    def to_ambient(self, x):
        m = self.n - 1
        q, P = x[:m], x[m:]
        J = self.sphere.tangent_map(q)
        p = J @ np.linalg.solve(J.T @ J, P)
        return np.concatenate([p, self.sphere.point(q)])

    def velocity(self, x, y, ydot):
        n, m = self.n, self.n - 1
        p, gamma = y[:n], y[n:]
        pdot, gdot = ydot[:n], ydot[n:]
        q = x[:m]
        qdot = self.sphere.coord_velocity(gamma, gdot)
        # d/dt J(q)^T p = J^T p' + (dJ[q'])^T p
        Pdot = self.sphere.tangent_map(q).T @ pdot + _cs(lambda s: self.sphere.tangent_map(s).T @ p, q, qdot)
        return np.concatenate([qdot, Pdot])


class RubberChart(Chart):
    """Chart ``(v, q)`` of the no-twist manifold; ambient ``[vec m, gamma]``.

    ``v`` are the coordinates of ``omega`` in the orthonormal basis
    ``e_k ^ gamma`` of ``v_gamma`` built from the Householder frame, with
    its branch pinned at the chart center.
    """

    def __init__(self, gamma0, Ibold):
        self.sphere = SphereChart(gamma0)
        self.n = self.sphere.n
        self.N = dim_so(self.n)
        self.I = np.asarray(Ibold, dtype=float)
        self.Iinv = np.linalg.inv(self.I)
        super().__init__(2 * (self.n - 1))

    def _basis(self, gamma):
        return v_basis(_householder_frame(gamma, self.sphere.north))

    def to_ambient(self, x):
        m = self.n - 1
        v, q = x[:m], x[m:]
        gamma = self.sphere.point(q)
        omega = self._basis(gamma) @ v
        return np.concatenate([self.I @ omega, gamma])

    def velocity(self, x, y, ydot):
        N = self.N
        gamma, gdot = y[N:], ydot[N:]
        omega = self.Iinv @ y[:N]
        omega_dot = self.Iinv @ ydot[:N]
        # v_k = <omega, b_k(gamma)> with b_k orthonormal
        vdot = self._basis(gamma).T @ omega_dot + _cs(lambda g: self._basis(g).T @ omega, gamma, gdot)
        return np.concatenate([vdot, self.sphere.coord_velocity(gamma, gdot)])

    def volume(self, x) -> float:
        return self.sphere.volume(x[self.n - 1 :])


def _weighted(field, density, chart):
    def w(x):
        y = chart.to_ambient(x)
        rho = density(y)
        if not rho > 0:
            raise DensityError(f"density must be positive, got {rho!r}")
        return rho * chart.volume(x) * chart.velocity(x, y, field(y))

    return w


def _central_div(w, x0, h):
    total = 0.0
    for i in range(len(x0)):
        e = np.zeros_like(x0)
        e[i] = h
        total += (w(x0 + e)[i] - w(x0 - e)[i]) / (2 * h)
    return total


def divergence_check(field, density, point=None, chart: Chart | None = None, fd_step: float = FD_STEP) -> float:
    """Central-difference ``div(rho f)`` at ``point`` (chart coordinates, default the chart origin).

    ``field`` and ``density`` act on ambient vectors.  If the estimates at
    ``fd_step`` and ``10 fd_step`` differ by more than 10 %, the Richardson
    combination of the two is returned.
    """
    if not fd_step > 0:
        raise ValueError("fd_step must be > 0")
    if chart is None:
        if point is None:
            raise ValueError("need a point or a chart")
        chart = Chart(len(point))
    x0 = chart.origin() if point is None else np.asarray(point, dtype=float)
    w = _weighted(field, density, chart)
    d1 = _central_div(w, x0, fd_step)
    d2 = _central_div(w, x0, 10 * fd_step)
    if abs(d1 - d2) > 0.1 * max(abs(d1), abs(d2)):
        return float((100 * d1 - d2) / 99)
    return float(d1)


def normalized_divergence(field, density, point=None, chart: Chart | None = None, fd_step: float = FD_STEP) -> float:
    """``div(rho f) / rho`` at the point, which does not depend on the density's overall scale."""
    if chart is None:
        chart = Chart(len(point))
    x0 = chart.origin() if point is None else np.asarray(point, dtype=float)
    rho = density(chart.to_ambient(x0)) * chart.volume(x0)
    return divergence_check(field, density, x0, chart, fd_step) / rho


def flatten_skew_field(fn, n):
    """Adapt ``fn(X, gamma) -> (X', gamma')`` on skew matrices to ambient vectors ``[vec X, gamma]``."""
    N = dim_so(n)

    def f(y):
        Xd, gd = fn(unvec(y[:N], n), y[N:])
        return np.concatenate([vec(Xd), gd])

    return f
