"""Drift and residual monitors evaluated over a finished trajectory."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrate import Trajectory


class UnknownCheckError(KeyError):
    pass


@dataclass(frozen=True)
class Check:
    key: str
    kind: str  # "drift" of a conserved quantity or "residual" of a constraint
    tol: float
    scale: str = "unit"  # drift denominator: "relative" -> |q0|, "unit" -> max(1, |q0|)
    only_eps: float | None = None
    needs_constraint: bool = False

    def applies(self, meta: dict) -> tuple[bool, str]:
        if self.only_eps is not None and meta.get("eps") != self.only_eps:
            return False, f"not an integral here (only for eps = {self.only_eps:g})"
        if self.needs_constraint and not meta.get("on_constraint", True):
            return False, "initial state is off the no-twist manifold"
        return True, ""


CHECKS = {
    "energy": Check("energy", "drift", 1e-8, "relative", needs_constraint=True),
    "hamiltonian": Check("hamiltonian", "drift", 1e-8, "relative"),
    "gamma_norm": Check("gamma_norm", "residual", 1e-9),
    "g_orth": Check("g_orth", "residual", 1e-8),
    "frame_orth": Check("frame_orth", "residual", 1e-8),
    "no_twist": Check("no_twist", "residual", 1e-8),
    "twist": Check("twist", "residual", 1e-8, needs_constraint=True),
    "psi2": Check("psi2", "residual", 1e-10),
    "F1": Check("F1", "drift", 1e-8),
    "F2": Check("F2", "drift", 1e-8),
    "F3": Check("F3", "drift", 1e-8),
    "F4": Check("F4", "drift", 1e-8, only_eps=1.0),
    "F4_tilde": Check("F4_tilde", "drift", 1e-8, only_eps=-1.0),
}


def available_checks(traj: Trajectory) -> list:
    return [name for name, c in CHECKS.items() if c.key in traj.quantities or c.key in traj.residuals]


def _series(traj: Trajectory, key):
    if key in traj.quantities:
        return np.asarray(traj.quantities[key], dtype=float)
    return np.asarray(traj.residuals[key], dtype=float)


def evaluate(traj: Trajectory, name: str) -> dict:
    if name not in CHECKS:
        raise UnknownCheckError(f"unknown check {name!r}; known: {sorted(CHECKS)}")
    c = CHECKS[name]
    if c.key not in traj.quantities and c.key not in traj.residuals:
        raise UnknownCheckError(f"check {name!r} is not available for system {traj.meta.get('system')!r}")
    q = _series(traj, c.key)
    if c.kind == "drift":
        q0 = q[0]
        abs_drift = float(np.abs(q - q0).max())
        if c.scale == "relative":
            denom = abs(q0) if q0 != 0 else 1.0
        else:
            denom = max(1.0, abs(q0))
        rel_drift = abs_drift / denom
        value = rel_drift
    else:
        abs_drift = float(np.abs(q).max())
        rel_drift = abs_drift
        value = abs_drift
    ok, note = c.applies(traj.meta)
    if not np.isfinite(value):
        status = "fail"
    elif not ok:
        status = "info"
    else:
        status = "pass" if value < c.tol else "fail"
    return {
        "name": name,
        "kind": c.kind,
        "max_abs": abs_drift,
        "max_rel": rel_drift,
        "tolerance": c.tol,
        "status": status,
        "note": note,
    }


def monitor_suite(traj: Trajectory, checks=None) -> dict:
    """Evaluate ``checks`` (default: everything the system provides).

    Checks flagged ``info`` are reported but do not affect ``passed``.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    names = available_checks(traj) if checks is None else list(checks)
    results = [evaluate(traj, name) for name in names]
    return {
        "checks": results,
        "passed": all(r["status"] != "fail" for r in results),
        "samples": len(traj),
        "t_end": float(traj.t[-1]),
    }


def format_report(report: dict) -> str:
    lines = []
    for r in report["checks"]:
        tail = f"  ({r['note']})" if r["note"] else ""
        lines.append(
            f"{r['status'].upper():4s}  {r['name']:<12s} max_abs={r['max_abs']:.3e} "
            f"max_rel={r['max_rel']:.3e} tol={r['tolerance']:.0e}{tail}"
        )
    return "\n".join(lines)
