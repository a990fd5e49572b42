"""Fixed-step RK4 with projection and an adaptive RK45 path."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .systems import RESIDUAL_TOL, System

BLOWUP_FACTOR = 1e3


class IntegratorConfigError(ValueError):
    pass


class ConstraintBlowup(RuntimeError):
    """A constraint residual left the admissible band during integration."""

    def __init__(self, name, value, t):
        super().__init__(f"residual {name!r} = {value:.3e} exceeded {BLOWUP_FACTOR:g} x tolerance at t = {t:.6g}")
        self.name, self.value, self.t = name, value, t


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "RK4"
    h: float = 1e-3
    t_end: float = 1.0
    projection: bool = True
    stride: int = 1
    atol: float = 1e-10
    rtol: float = 1e-10

    def __post_init__(self):
        if self.method not in ("RK4", "RK45"):
            raise IntegratorConfigError(f"integrator.method: expected 'RK4' or 'RK45', got {self.method!r}")
        if not self.h > 0:
            raise IntegratorConfigError("integrator.h must be > 0")
        if not self.t_end >= 0:
            raise IntegratorConfigError("integrator.t_end must be >= 0")
        if not (self.atol > 0 and self.rtol > 0):
            raise IntegratorConfigError("integrator.atol and integrator.rtol must be > 0")
        if int(self.stride) != self.stride or self.stride < 1:
            raise IntegratorConfigError("integrator.stride must be a positive integer")

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.h))

    @classmethod
    def from_dict(cls, d: dict) -> IntegratorConfig:
        known = {"method", "h", "t_end", "projection", "stride", "atol", "rtol"}
        extra = set(d) - known
        if extra:
            raise IntegratorConfigError(f"integrator: unknown fields {sorted(extra)}")
        d = dict(d)
        if d.get("method") == "RK45-adaptive":
            d["method"] = "RK45"
        return cls(**d)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("method", "h", "t_end", "projection", "stride", "atol", "rtol")}


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    quantities: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    columns: list = field(default_factory=list)
    time_name: str = "t"
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def monitor_columns(self) -> list:
        return list(self.quantities) + list(self.residuals)

    def table(self) -> np.ndarray:
        cols = [self.t[:, None], self.y]
        cols += [np.asarray(v)[:, None] for v in self.quantities.values()]
        cols += [np.asarray(v)[:, None] for v in self.residuals.values()]
        return np.hstack(cols)

    def header(self) -> list:
        return [self.time_name] + list(self.columns) + self.monitor_columns()


def rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_blowup(system: System, y, t):
    for name, value in system.residuals(y).items():
        tol = RESIDUAL_TOL.get(name)
        if tol is not None and not value <= BLOWUP_FACTOR * tol:
            raise ConstraintBlowup(name, value, t)


def _collect(system: System, ts, ys, meta) -> Trajectory:
    ys = np.asarray(ys)
    q = [system.quantities(y) for y in ys]
    r = [system.residuals(y) for y in ys]
    quantities = {k: np.array([d[k] for d in q]) for k in q[0]} if q else {}
    residuals = {k: np.array([d[k] for d in r]) for k in r[0]} if r else {}
    return Trajectory(
        t=np.asarray(ts, dtype=float),
        y=ys,
        quantities=quantities,
        residuals=residuals,
        columns=system.state_columns(),
        time_name=system.time_name,
        meta=meta,
    )


def integrate_system(system: System, y0, cfg: IntegratorConfig) -> Trajectory:
    """Integrate from ``y0`` and sample every ``cfg.stride`` steps (the end point is always kept)."""
    y = np.array(y0, dtype=float)
    meta = dict(system.meta(y), **{"integrator": cfg.to_dict()})
    if cfg.method == "RK45":
        return _integrate_adaptive(system, y, cfg, meta)
    ts, ys = [0.0], [y.copy()]
    nsteps = cfg.steps
    for i in range(1, nsteps + 1):
        y = rk4_step(system.field, y, cfg.h)
        if cfg.projection:
            y = system.project(y)
        t = i * cfg.h
        if not np.all(np.isfinite(y)):
            raise ConstraintBlowup("finite", float("inf"), t)
        _check_blowup(system, y, t)
        if i % cfg.stride == 0 or i == nsteps:
            ts.append(t)
            ys.append(y.copy())
    return _collect(system, ts, ys, meta)


def _integrate_adaptive(system: System, y0, cfg: IntegratorConfig, meta) -> Trajectory:
    dt = cfg.h * cfg.stride
    t_eval = np.arange(0, cfg.steps // cfg.stride + 1) * dt
    if t_eval[-1] < cfg.t_end:
        t_eval = np.append(t_eval, cfg.t_end)
    sol = solve_ivp(
        lambda t, y: system.field(y), (0.0, cfg.t_end), y0,
        method="RK45", t_eval=t_eval, atol=cfg.atol, rtol=cfg.rtol,
    )
    if sol.status != 0:
        raise ConstraintBlowup("solver", float("nan"), float(sol.t[-1]) if sol.t.size else 0.0)
    ys = sol.y.T
    if cfg.projection:
        # projection is only applied to the output samples; the solver state itself is never modified
        ys = np.array([system.project(y) for y in ys])
    for t, y in zip(sol.t, ys):
        _check_blowup(system, y, t)
    return _collect(system, sol.t, ys, meta)
