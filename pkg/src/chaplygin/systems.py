"""Flat-vector adapters around the dynamics modules.

Each :class:`System` packs its state into one ``numpy`` vector so the
integrators stay generic, and knows how to project back onto its
constraint manifold, what to monitor and what counts as a constraint
residual.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import ball, reduced, rubber
from .inertia import GeometryParams, InertiaSpec, kappa_apply
from .so_n import (
    complete_frame,
    dim_so,
    polar_rotation,
    proj_h,
    random_skew,
    random_unit,
    unvec,
    vec,
    wedge,
)

# residual name -> tolerance; integration aborts at 1e3 x tolerance
RESIDUAL_TOL = {
    "gamma_norm": 1e-9,
    "g_orth": 1e-8,
    "frame_orth": 1e-8,
    "no_twist": 1e-8,
    "psi2": 1e-10,
}


class _Cot(NamedTuple):
    # unvalidated (p, gamma) for use inside integrator stages, which sit slightly off the constraints
    p: np.ndarray
    gamma: np.ndarray


class ScenarioError(ValueError):
    """Invalid scenario: bad field, unknown name or inadmissible initial data."""


def _arr(d, key, shape=None):
    try:
        a = np.asarray(d[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"initial.{key}: not a numeric array") from exc
    if shape is not None and a.shape != shape:
        raise ScenarioError(f"initial.{key}: expected shape {shape}, got {a.shape}")
    return a


def _skew_from(d, key, n):
    a = np.asarray(d[key], dtype=float)
    if a.shape == (n, n):
        if np.abs(a + a.T).max() > 1e-12 * max(1.0, np.abs(a).max()):
            raise ScenarioError(f"initial.{key}: matrix is not skew-symmetric")
        return 0.5 * (a - a.T)
    if a.shape == (dim_so(n),):
        return unvec(a, n)
    raise ScenarioError(f"initial.{key}: expected an {n}x{n} skew matrix or {dim_so(n)} wedge coordinates")


def _gamma_from(d, n, rng):
    # not normalized: a non-unit gamma is reported by the gamma_norm residual
    if "gamma" in d:
        return _arr(d, "gamma", (n,))
    return random_unit(n, rng)


class System:
    name = ""
    time_name = "t"

    def __init__(self, n: int, spec: InertiaSpec, geom: GeometryParams):
        if spec.n != n:
            raise ScenarioError(f"inertia is for n = {spec.n}, scenario has n = {n}")
        self.n, self.spec, self.geom = n, spec, geom
        self.N = dim_so(n)

    @property
    def eps(self) -> float:
        return self.geom.epsilon

    def field(self, y):
        raise NotImplementedError

    def project(self, y):
        return y

    def quantities(self, y) -> dict:
        return {}

    def residuals(self, y) -> dict:
        return {}

    def state_columns(self) -> list:
        raise NotImplementedError

    def initial(self, init: dict, rng) -> np.ndarray:
        raise NotImplementedError

    def meta(self, y0) -> dict:
        return {"system": self.name, "n": self.n, "eps": self.eps}

    def validate(self, y0):
        for name, value in self.residuals(y0).items():
            tol = RESIDUAL_TOL.get(name)
            if tol is not None and value > tol:
                raise ScenarioError(f"initial state violates constraint {name!r}: residual {value:.3e} > {tol:g}")

    def _wedge_cols(self, prefix):
        iu = np.triu_indices(self.n, 1)
        return [f"{prefix}_{i + 1}{j + 1}" for i, j in zip(*iu)]

    def _vec_cols(self, prefix):
        return [f"{prefix}_{i + 1}" for i in range(self.n)]

    def _mat_cols(self, prefix):
        return [f"{prefix}_{i + 1}{j + 1}" for i in range(self.n) for j in range(self.n)]


class NonrubberReduced(System):
    name = "nonrubber-reduced"

    def split(self, y):
        return unvec(y[: self.N], self.n), y[self.N : self.N + self.n]

    def field(self, y):
        k, gamma = self.split(y)
        kdot, gdot, _ = ball.reduced_rhs(k, gamma, self.spec, self.geom)
        return np.concatenate([vec(kdot), gdot])

    def project(self, y):
        y = y.copy()
        g = y[self.N : self.N + self.n]
        y[self.N : self.N + self.n] = g / np.linalg.norm(g)
        return y

    def quantities(self, y):
        k, gamma = self.split(y)
        omega = ball.omega_of(k, gamma, self.spec, self.geom)
        out = {"energy": 0.5 * float(vec(k) @ vec(omega))}
        if self.n == 3:
            out.update(ball.integrals_3d(ball.BallState(k, gamma), self.spec, self.geom))
        return out

    def residuals(self, y):
        _, gamma = self.split(y)
        return {"gamma_norm": abs(float(np.linalg.norm(gamma)) - 1.0)}

    def state_columns(self):
        return self._wedge_cols("k") + self._vec_cols("gamma")

    def _k_gamma(self, init, rng):
        gamma = _gamma_from(init, self.n, rng)
        if "k" in init:
            k = _skew_from(init, "k", self.n)
        elif "omega" in init:
            k = kappa_apply(self.spec, self.geom.D, gamma, _skew_from(init, "omega", self.n))
        else:
            omega = random_skew(self.n, rng, float(init.get("scale", 1.0)))
            k = kappa_apply(self.spec, self.geom.D, gamma, omega)
        return k, gamma

    def initial(self, init, rng):
        k, gamma = self._k_gamma(init, rng)
        return np.concatenate([vec(k), gamma])


class NonrubberFull(NonrubberReduced):
    name = "nonrubber-full"

    def split3(self, y):
        k, gamma = self.split(y)
        return k, gamma, y[self.N + self.n :].reshape(self.n, self.n)

    def field(self, y):
        k, gamma, g = self.split3(y)
        kdot, gdot, omega = ball.reduced_rhs(k, gamma, self.spec, self.geom)
        return np.concatenate([vec(kdot), gdot, (g @ omega).ravel()])

    def project(self, y):
        y = NonrubberReduced.project(self, y)
        g = y[self.N + self.n :].reshape(self.n, self.n)
        y[self.N + self.n :] = polar_rotation(g).ravel()
        return y

    def residuals(self, y):
        out = NonrubberReduced.residuals(self, y)
        g = y[self.N + self.n :].reshape(self.n, self.n)
        out["g_orth"] = float(np.abs(g.T @ g - np.eye(self.n)).max())
        return out

    def state_columns(self):
        return NonrubberReduced.state_columns(self) + self._mat_cols("g")

    def initial(self, init, rng):
        k, gamma = self._k_gamma(init, rng)
        g = _arr(init, "g", (self.n, self.n)) if "g" in init else np.eye(self.n)
        return np.concatenate([vec(k), gamma, g.ravel()])


class Rubber(System):
    name = "rubber"

    def __init__(self, n, spec, geom):
        super().__init__(n, spec, geom)
        self.ops = rubber.RubberOperators(spec, geom)

    def split(self, y):
        return unvec(y[: self.N], self.n), y[self.N :].reshape(self.n, self.n)

    def field(self, y):
        m, F = self.split(y)
        mdot, Fdot = rubber.rubber_rhs(m, F, self.spec, self.geom, self.ops)
        return np.concatenate([vec(mdot), Fdot.ravel()])

    def project(self, y):
        st = rubber.project_rubber(*self.split(y), self.spec, self.geom, self.ops)
        return np.concatenate([vec(st.m), st.frame.ravel()])

    def quantities(self, y):
        m, _ = self.split(y)
        return {"energy": rubber.rubber_energy(m, self.spec, self.geom, self.ops)}

    def residuals(self, y):
        m, F = self.split(y)
        phi = rubber.no_twist_residuals(self.ops.omega(m), F)
        return {
            "gamma_norm": abs(float(np.linalg.norm(F[:, -1])) - 1.0),
            "frame_orth": float(np.abs(F.T @ F - np.eye(self.n)).max()),
            "no_twist": float(np.abs(phi).max()) if phi.size else 0.0,
        }

    def state_columns(self):
        return self._wedge_cols("m") + self._mat_cols("e")

    def initial(self, init, rng):
        gamma = _gamma_from(init, self.n, rng)
        F = _arr(init, "frame", (self.n, self.n)) if "frame" in init else complete_frame(gamma)
        if "frame" in init and "gamma" in init and np.abs(F[:, -1] - gamma).max() > 1e-10:
            raise ScenarioError("initial.frame: last column must equal gamma")
        gamma = F[:, -1]
        if "m" in init:
            m = _skew_from(init, "m", self.n)
        elif "omega" in init:
            m = self.ops.momentum(_skew_from(init, "omega", self.n))
        else:
            v = rng.normal(size=self.n) * float(init.get("scale", 1.0))
            m = self.ops.momentum(wedge(v, gamma))
        return np.concatenate([vec(m), F.ravel()])


class RubberExtended(System):
    name = "rubber-extended"

    def __init__(self, n, spec, geom):
        super().__init__(n, spec, geom)
        self.ops = rubber.RubberOperators(spec, geom)

    def split(self, y):
        return unvec(y[: self.N], self.n), y[self.N :]

    def field(self, y):
        mm, gamma = self.split(y)
        mmdot, gdot = rubber.ext_momentum_field(rubber.ExtMomentumState(mm, gamma), self.spec, self.geom, self.ops)
        return np.concatenate([vec(mmdot), gdot])

    def project(self, y):
        y = y.copy()
        g = y[self.N :]
        y[self.N :] = g / np.linalg.norm(g)
        return y

    def _omega(self, y):
        mm, gamma = self.split(y)
        return rubber.omega_from_ext_momentum(mm, gamma, self.ops.I), gamma

    def quantities(self, y):
        omega, gamma = self._omega(y)
        return {
            "energy": 0.5 * float(vec(omega) @ self.ops.I @ vec(omega)),
            "twist": float(np.abs(vec(proj_h(omega, gamma))).max()),
        }

    def residuals(self, y):
        _, gamma = self.split(y)
        return {"gamma_norm": abs(float(np.linalg.norm(gamma)) - 1.0)}

    def meta(self, y0):
        out = super().meta(y0)
        out["on_constraint"] = self.quantities(y0)["twist"] < RESIDUAL_TOL["no_twist"]
        return out

    def state_columns(self):
        return self._wedge_cols("mm") + self._vec_cols("gamma")

    def initial(self, init, rng):
        gamma = _gamma_from(init, self.n, rng)
        if "mm" in init:
            mm = _skew_from(init, "mm", self.n)
        else:
            if "omega" in init:
                omega = _skew_from(init, "omega", self.n)
            else:
                v = rng.normal(size=self.n) * float(init.get("scale", 1.0))
                omega = wedge(v, gamma)
            mm = rubber.ext_momentum(omega, gamma, self.ops.I)
        return np.concatenate([vec(mm), gamma])


class ReducedGeneric(System):
    name = "reduced-generic"

    def __init__(self, n, spec, geom):
        super().__init__(n, spec, geom)
        self.Ibold = spec.modified(geom.D)

    def split(self, y):
        return y[: self.n], y[self.n : 2 * self.n]

    def field(self, y):
        p, g = self.split(y)
        pdot, gdot = reduced.reduced_field_generic(_Cot(p, g), self.spec, self.geom, self.Ibold)
        return np.concatenate([pdot, gdot])

    def project(self, y):
        p, g = self.split(y)
        g = g / np.linalg.norm(g)
        return np.concatenate([p - (p @ g) * g, g])

    def quantities(self, y):
        p, g = self.split(y)
        gdot = reduced.inverse_legendre(p, g, self.Ibold, self.eps)
        return {"hamiltonian": 0.5 * float(p @ gdot)}

    def residuals(self, y):
        p, g = self.split(y)
        return {
            "gamma_norm": abs(float(np.linalg.norm(g)) - 1.0),
            "psi2": abs(float(g @ p)) / max(1.0, float(np.linalg.norm(p))),
        }

    def state_columns(self):
        return self._vec_cols("p") + self._vec_cols("gamma")

    def initial(self, init, rng):
        g = _gamma_from(init, self.n, rng)
        if "p" in init:
            p = _arr(init, "p", (self.n,))
        elif "gamma_dot" in init:
            gd = _arr(init, "gamma_dot", (self.n,))
            p = reduced.legendre(gd, g, self.Ibold, self.eps)
        else:
            p = rng.normal(size=self.n) * float(init.get("scale", 1.0))
            p = p - (p @ g) * g
        return np.concatenate([p, g])


class ReducedSpecial(ReducedGeneric):
    name = "reduced-special"

    def __init__(self, n, spec, geom):
        super().__init__(n, spec, geom)
        if spec.kind != "specop":
            raise ScenarioError("reduced-special needs inertia kind 'specop'")
        self.A = np.diag(spec.a)
        self.Ainv = np.diag(1 / spec.a)

    def field(self, y):
        p, g = self.split(y)
        pdot, gdot = reduced.reduced_field_special(_Cot(p, g), self.A, self.eps)
        return np.concatenate([pdot, gdot])

    def quantities(self, y):
        p, g = self.split(y)
        return {"hamiltonian": 0.5 * self.eps**2 * float(p @ self.Ainv @ p) / float(g @ self.A @ g)}


class Hamiltonized(ReducedSpecial):
    """Geodesic flow in the new time tau; the last state entry is the physical time t."""

    name = "hamiltonized"
    time_name = "tau"

    def split(self, y):
        return y[: self.n], y[self.n : 2 * self.n]

    def field(self, y):
        pt, g = self.split(y)
        ptd, gd = reduced.hamiltonized_field(_Cot(pt, g), self.A, self.eps)
        return np.concatenate([ptd, gd, [1.0 / reduced.multiplier(g, self.A, self.eps)]])

    def project(self, y):
        return np.concatenate([ReducedGeneric.project(self, y[:-1]), y[-1:]])

    def quantities(self, y):
        pt, g = self.split(y)
        return {"hamiltonian": 0.5 * float(g @ self.A @ g) ** (1 - 1 / self.eps) * float(pt @ self.Ainv @ pt)}

    def state_columns(self):
        return self._vec_cols("p_tilde") + self._vec_cols("gamma") + ["t"]

    def initial(self, init, rng):
        if "p_tilde" in init:
            g = _gamma_from(init, self.n, rng)
            pt = _arr(init, "p_tilde", (self.n,))
        else:
            y = ReducedGeneric.initial(self, init, rng)
            p, g = y[: self.n], y[self.n :]
            pt = reduced.multiplier(g, self.A, self.eps) * p
        return np.concatenate([pt, g, [0.0]])


SYSTEMS = {
    cls.name: cls
    for cls in (NonrubberReduced, NonrubberFull, Rubber, RubberExtended, ReducedGeneric, ReducedSpecial, Hamiltonized)
}


def make_system(name: str, n: int, spec: InertiaSpec, geom: GeometryParams) -> System:
    try:
        cls = SYSTEMS[name]
    except KeyError:
        raise ScenarioError(f"unknown system {name!r}; choose from {sorted(SYSTEMS)}") from None
    return cls(n, spec, geom)
