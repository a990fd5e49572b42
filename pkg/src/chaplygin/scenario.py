"""JSON scenario files: one system, geometry, inertia, initial data and integrator."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .inertia import GeometryParams, InertiaSpec, random_ch_op, random_generic, random_spec_op
from .integrate import IntegratorConfig, IntegratorConfigError, Trajectory, integrate_system
from .monitors import UnknownCheckError, monitor_suite
from .systems import SYSTEMS, ScenarioError, make_system

RANDOM_INERTIA = {
    "random-generic": lambda n, rng, D: random_generic(n, rng),
    "random-chop": random_ch_op,
    "random-specop": random_spec_op,
}
TOP_FIELDS = {"name", "system", "n", "geometry", "inertia", "initial", "integrator", "checks", "seed"}


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


@dataclass
class Scenario:
    system: str
    n: int
    geometry: dict
    inertia: dict
    initial: dict = field(default_factory=dict)
    integrator: dict = field(default_factory=dict)
    checks: list | None = None
    seed: int = 0
    name: str = "scenario"

    @classmethod
    def from_dict(cls, d: dict) -> Scenario:
        if not isinstance(d, dict):
            raise ScenarioError("scenario must be a JSON object")
        extra = set(d) - TOP_FIELDS
        if extra:
            raise ScenarioError(f"unknown top-level fields {sorted(extra)}")
        for key in ("system", "n", "geometry", "inertia"):
            if key not in d:
                raise ScenarioError(f"missing required field {key!r}")
        if d["system"] not in SYSTEMS:
            raise ScenarioError(f"system: unknown {d['system']!r}; choose from {sorted(SYSTEMS)}")
        n = d["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 2:
            raise ScenarioError("n: must be an integer >= 2")
        for key in ("geometry", "inertia", "initial", "integrator"):
            if key in d and not isinstance(d[key], dict):
                raise ScenarioError(f"{key}: must be an object")
        checks = d.get("checks")
        if checks is not None and not (isinstance(checks, list) and all(isinstance(c, str) for c in checks)):
            raise ScenarioError("checks: must be a list of check names")
        seed = d.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ScenarioError("seed: must be an integer")
        return cls(
            system=d["system"],
            n=n,
            geometry=dict(d["geometry"]),
            inertia=dict(d["inertia"]),
            initial=dict(d.get("initial", {})),
            integrator=dict(d.get("integrator", {})),
            checks=checks,
            seed=seed,
            name=str(d.get("name", "scenario")),
        )

    @classmethod
    def loads(cls, text: str, source: str = "<string>") -> Scenario:
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(d)

    @classmethod
    def load(cls, path) -> Scenario:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario {str(p)!r}: {exc.strerror}") from None
        sc = cls.loads(text, str(p))
        if sc.name == "scenario":
            sc.name = p.stem
        return sc

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "system": self.system,
            "n": self.n,
            "geometry": self.geometry,
            "inertia": self.inertia,
            "initial": self.initial,
            "integrator": self.integrator,
            "seed": self.seed,
        }
        if self.checks is not None:
            d["checks"] = self.checks
        return _jsonable(d)

    def build(self):
        """Construct ``(system, y0, integrator_config)``, validating the initial state."""
        rng = np.random.default_rng(self.seed)
        try:
            geom = GeometryParams.from_dict(self.geometry)
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"geometry: {exc}") from None
        kind = self.inertia.get("kind")
        try:
            if kind in RANDOM_INERTIA:
                spec = RANDOM_INERTIA[kind](self.n, rng, geom.D)
            else:
                spec = InertiaSpec.from_dict(self.inertia, D=geom.D)
        except (TypeError, ValueError, KeyError) as exc:
            raise ScenarioError(f"inertia: {exc}") from None
        try:
            cfg = IntegratorConfig.from_dict(self.integrator)
        except (TypeError, IntegratorConfigError) as exc:
            raise ScenarioError(str(exc)) from None
        system = make_system(self.system, self.n, spec, geom)
        y0 = system.initial(self.initial, rng)
        system.validate(y0)
        return system, y0, cfg


def run_scenario(sc: Scenario) -> tuple[Trajectory, dict]:
    system, y0, cfg = sc.build()
    traj = integrate_system(system, y0, cfg)
    try:
        report = monitor_suite(traj, sc.checks)
    except UnknownCheckError as exc:
        raise ScenarioError(f"checks: {exc.args[0]}") from None
    report["name"] = sc.name
    return traj, report


def write_csv(traj: Trajectory, path) -> None:
    """Header ``t, state..., monitor...`` then rows at 17 significant digits."""
    np.savetxt(path, traj.table(), fmt="%.17g", delimiter=",", header=",".join(traj.header()), comments="")
