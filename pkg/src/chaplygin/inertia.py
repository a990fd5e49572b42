"""Inertia operators on so(n), the contact-point operator kappa and invariant densities."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .so_n import (
    DimensionError,
    complete_frame,
    dim_so,
    h_basis,
    n_from_dim,
    proj_v_matrix,
    unvec,
    v_basis,
    vec,
)

VARIANTS = ("i", "ii", "iii")


class SingularOperatorError(np.linalg.LinAlgError):
    pass


class InertiaWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class InertiaSpec:
    """A symmetric positive operator on so(n), stored as its matrix in wedge-basis coordinates.

    Use the constructors :meth:`generic`, :meth:`ch_op`, :meth:`spec_op`,
    :meth:`diagonal` or :meth:`body3d` rather than building one directly.
    """

    matrix: np.ndarray
    kind: str = "generic"
    a: np.ndarray | None = None
    D: float | None = None
    n: int = field(init=False)

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionError("inertia matrix must be square")
        object.__setattr__(self, "n", n_from_dim(M.shape[0]))
        M = M.copy()
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @classmethod
    def generic(cls, matrix, tol: float = 1e-10) -> InertiaSpec:
        M = np.asarray(matrix, dtype=float)
        if np.abs(M - M.T).max() > tol * max(1.0, np.abs(M).max()):
            raise ValueError("inertia operator must be symmetric with respect to the pairing")
        M = 0.5 * (M + M.T)
        if np.linalg.eigvalsh(M).min() <= 0:
            raise ValueError("inertia operator must be positive definite")
        return cls(M)

    @classmethod
    def diagonal(cls, values) -> InertiaSpec:
        """Diagonal in the wedge basis, ``values`` ordered as ``(1,2), (1,3), ..., (n-1,n)``."""
        values = np.asarray(values, dtype=float)
        if np.any(values <= 0):
            raise ValueError("diagonal inertia values must be positive")
        return cls(np.diag(values), kind="diagonal")

    @classmethod
    def body3d(cls, I1: float, I2: float, I3: float) -> InertiaSpec:
        """``diag(I1, I2, I3)`` acting on angular velocity vectors in R^3."""
        # hat(x) has wedge coordinates (-x3, x2, -x1); the signs cancel in a diagonal operator
        return cls(np.diag([I3, I2, I1]).astype(float), kind="body3d")

    @classmethod
    def ch_op(cls, a, D: float) -> InertiaSpec:
        """``I(E_i^E_j) = D a_i a_j / (D - a_i a_j) E_i^E_j`` with ``0 < a_i a_j < D``."""
        a = np.asarray(a, dtype=float)
        prod = np.outer(a, a)
        if np.any(a <= 0) or np.any(prod >= D):
            raise ValueError("ChOp inertia requires 0 < a_i a_j < D for all i, j")
        iu = np.triu_indices(a.size, 1)
        p = prod[iu]
        return cls(np.diag(D * p / (D - p)), kind="chop", a=a, D=float(D))

    @classmethod
    def spec_op(cls, a, D: float) -> InertiaSpec:
        """``I(E_i^E_j) = (a_i a_j - D) E_i^E_j``, so that ``I + D`` has eigenvalues ``a_i a_j``."""
        a = np.asarray(a, dtype=float)
        if np.any(a <= 0):
            raise ValueError("SpecOp parameters a_i must be positive")
        iu = np.triu_indices(a.size, 1)
        p = np.outer(a, a)[iu]
        if np.any(p <= D):
            warnings.warn("SpecOp inertia is not positive (some a_i a_j <= D)", InertiaWarning, stacklevel=2)
        return cls(np.diag(p - D), kind="specop", a=a, D=float(D))

    def apply(self, X: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(X), self.n)

    def modified(self, D: float) -> np.ndarray:
        """Matrix of ``I + D E`` (E the identity on so(n))."""
        return self.matrix + D * np.eye(self.matrix.shape[0])

    def to_dict(self) -> dict:
        if self.kind in ("chop", "specop"):
            return {"kind": self.kind, "a": self.a.tolist(), "D": self.D}
        if self.kind in ("diagonal", "body3d"):
            d = np.diag(self.matrix)
            if self.kind == "body3d":
                return {"kind": "body3d", "I": [d[2], d[1], d[0]]}
            return {"kind": "diagonal", "values": d.tolist()}
        return {"kind": "generic", "matrix": self.matrix.tolist()}

    @classmethod
    def from_dict(cls, d: dict, D: float | None = None) -> InertiaSpec:
        kind = d.get("kind")
        if kind == "generic":
            return cls.generic(d["matrix"])
        if kind == "diagonal":
            return cls.diagonal(d["values"])
        if kind == "body3d":
            return cls.body3d(*d["I"])
        if kind in ("chop", "specop"):
            Dv = d.get("D", D)
            if Dv is None:
                raise ValueError(f"{kind} inertia needs D")
            return (cls.ch_op if kind == "chop" else cls.spec_op)(d["a"], Dv)
        raise ValueError(f"unknown inertia kind {kind!r}")


@dataclass(frozen=True)
class GeometryParams:
    """Radii, mass and rolling variant.

    Variant ``"i"``: outside of the fixed sphere; ``"ii"``: inside
    (``sigma > rho``); ``"iii"``: the ball is a shell around the fixed sphere
    (``sigma < rho``).  ``eps`` and ``D`` may be given directly, in which
    case the radii are optional (they are only needed to rebuild
    fixed-frame positions and velocities).
    """

    sigma: float | None = None
    rho: float | None = None
    mass: float | None = None
    variant: str = "i"
    eps: float | None = None
    D_value: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        radii = (self.sigma, self.rho, self.mass)
        if any(x is not None for x in radii):
            if any(x is None for x in radii):
                raise ValueError("sigma, rho and mass must be given together")
            if min(radii) <= 0:
                raise ValueError("sigma, rho and mass must be positive")
            if self.variant == "ii" and not self.sigma > self.rho:
                raise ValueError("variant (ii) requires sigma > rho")
            if self.variant == "iii" and not self.sigma < self.rho:
                raise ValueError("variant (iii) requires sigma < rho")
        elif self.eps is None or self.D_value is None:
            raise ValueError("give either sigma, rho, mass or both eps and D")
        if self.eps is not None and self.eps == 0:
            raise ValueError("eps must be nonzero")
        if self.D_value is not None and self.D_value < 0:
            raise ValueError("D must be >= 0")

    @property
    def sign(self) -> int:
        return 1 if self.variant == "i" else -1

    @property
    def has_radii(self) -> bool:
        return self.sigma is not None

    @property
    def epsilon(self) -> float:
        if self.eps is not None:
            return float(self.eps)
        return self.sigma / (self.sigma + self.sign * self.rho)

    @property
    def D(self) -> float:
        if self.D_value is not None:
            return float(self.D_value)
        return self.mass * self.rho**2

    @property
    def center_radius(self) -> float:
        """``sigma +- rho``, the radius of the sphere traced by the ball's center."""
        self._need_radii()
        return self.sigma + self.sign * self.rho

    def _need_radii(self):
        if not self.has_radii:
            raise ValueError("this quantity needs sigma, rho and mass")

    @classmethod
    def from_eps(cls, eps: float, D: float) -> GeometryParams:
        return cls(eps=eps, D_value=D)

    def to_dict(self) -> dict:
        d = {"variant": self.variant}
        if self.has_radii:
            d.update(sigma=self.sigma, rho=self.rho, mass=self.mass)
        if self.eps is not None:
            d["eps"] = self.eps
        if self.D_value is not None:
            d["D"] = self.D_value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> GeometryParams:
        known = {"sigma", "rho", "mass", "variant", "eps", "D"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown geometry fields: {sorted(extra)}")
        return cls(
            sigma=d.get("sigma"),
            rho=d.get("rho"),
            mass=d.get("mass"),
            variant=d.get("variant", "i"),
            eps=d.get("eps"),
            D_value=d.get("D"),
        )


def epsilon_of(geom: GeometryParams) -> float:
    return geom.epsilon


def apply_inertia(spec: InertiaSpec, omega: np.ndarray) -> np.ndarray:
    if omega.shape != (spec.n, spec.n):
        raise DimensionError("omega does not match the inertia operator")
    return spec.apply(omega)


def kappa_matrix(spec: InertiaSpec, D: float, gamma: np.ndarray) -> np.ndarray:
    """``kappa = I + D pr_v`` in wedge-basis coordinates."""
    return spec.matrix + D * proj_v_matrix(gamma)


def kappa_apply(spec: InertiaSpec, D: float, gamma, omega) -> np.ndarray:
    Xg = omega @ gamma
    return spec.apply(omega) + D * (np.outer(Xg, gamma) - np.outer(gamma, Xg))


def _solve(M, b):
    try:
        return np.linalg.solve(M, b)
    except np.linalg.LinAlgError as exc:
        raise SingularOperatorError(str(exc)) from exc


def kappa_solve(spec: InertiaSpec, D: float, gamma, k) -> np.ndarray:
    """Angular velocity ``omega`` with ``kappa(omega) = k``."""
    return unvec(_solve(kappa_matrix(spec, D, gamma), vec(k)), spec.n)


def density_nonrubber(spec: InertiaSpec, D: float, gamma) -> float:
    """``sqrt(det kappa)``."""
    sign, logdet = np.linalg.slogdet(kappa_matrix(spec, D, gamma))
    if sign <= 0:
        raise SingularOperatorError("kappa is not positive definite")
    return float(np.exp(0.5 * logdet))


def restricted_det(M: np.ndarray, basis_cols: np.ndarray) -> float:
    """Determinant of the compression ``B^T M B`` of ``M`` to an orthonormal subspace basis."""
    if basis_cols.shape[1] == 0:
        return 1.0
    return float(np.linalg.det(basis_cols.T @ M @ basis_cols))


def _frame_for(gamma, frame):
    if frame is None:
        return complete_frame(gamma)
    if np.abs(frame[:, -1] - gamma).max() > 1e-10:
        raise ValueError("frame's last column must be gamma")
    return frame


def density_rubber_h(Ibold: np.ndarray, gamma, eps: float, frame=None) -> float:
    """``(det I^{-1}|h_gamma)^(1/(2 eps))``; ``Ibold`` is the matrix of ``I + D E``."""
    if eps == 0:
        raise ValueError("eps must be nonzero")
    F = _frame_for(gamma, frame)
    d = restricted_det(np.linalg.inv(Ibold), h_basis(F))
    return d ** (1.0 / (2.0 * eps))


def density_rubber_v(Ibold: np.ndarray, gamma, eps: float, frame=None) -> float:
    """``(det I|v_gamma)^(1/(2 eps) - 1)``."""
    if eps == 0:
        raise ValueError("eps must be nonzero")
    F = _frame_for(gamma, frame)
    d = restricted_det(Ibold, v_basis(F))
    return d ** (1.0 / (2.0 * eps) - 1.0)


def random_generic(n: int, rng: np.random.Generator, lo: float = 0.5, hi: float = 2.0) -> InertiaSpec:
    """A random SPD operator with spectrum in ``[lo, hi]`` and random eigenvectors."""
    N = dim_so(n)
    Q, _ = np.linalg.qr(rng.normal(size=(N, N)))
    return InertiaSpec.generic(Q @ np.diag(rng.uniform(lo, hi, N)) @ Q.T)


def random_ch_op(n: int, rng: np.random.Generator, D: float = 1.0) -> InertiaSpec:
    a = rng.uniform(0.2, 0.95, n) * np.sqrt(D)
    return InertiaSpec.ch_op(a, D)


def random_spec_op(n: int, rng: np.random.Generator, D: float = 1.0) -> InertiaSpec:
    a = rng.uniform(1.1, 2.0, n) * np.sqrt(D)
    return InertiaSpec.spec_op(a, D)
