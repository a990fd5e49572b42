"""Structural checks: invariant measures, Hamiltonization, formulation equivalences.

Each ``*_check`` returns a plain dict with the measured worst value, the
threshold it is judged against and a boolean ``passed``.
"""
from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import ball, reduced, rubber
from .inertia import (
    GeometryParams,
    InertiaSpec,
    density_nonrubber,
    density_rubber_h,
    density_rubber_v,
    kappa_apply,
    random_ch_op,
    random_generic,
    random_spec_op,
)
from .integrate import IntegratorConfig, integrate_system, rk4_step
from .measure import CotangentChart, ProductChart, RubberChart, SphereChart, divergence_check, flatten_skew_field
from .so_n import complete_frame, dim_so, h_basis, random_rotation, random_skew, random_unit, unvec, vec, wedge
from .systems import Hamiltonized, ReducedGeneric, ReducedSpecial, Rubber, RubberExtended, _Cot

MEASURE_SYSTEMS = (
    "nonrubber-reduced",
    "nonrubber-omega",
    "rubber",
    "rubber-extended",
    "reduced-generic",
    "reduced-special",
)
MEASURE_TOL = {
    "nonrubber-reduced": 1e-5,
    "nonrubber-omega": 1e-5,
    "rubber-extended": 1e-5,
    "reduced-special": 1e-5,
    "rubber": 1e-4,
    "reduced-generic": 1e-4,
}
NEGATIVE_CONTROL_MIN = 1e-2


def _tangent(gamma, rng, scale=1.0):
    v = scale * rng.normal(size=gamma.shape[0])
    return v - (v @ gamma) * gamma


def measure_problem(system: str, spec: InertiaSpec, geom: GeometryParams, rng, exponent=None, scale: float = 1.0):
    """Random phase point with its field, density and chart: ``(field, density, chart)``.

    The point is the chart origin and its momentum-like coordinates are
    drawn with standard deviation ``scale``.  ``exponent`` overrides the
    density exponent of ``reduced-special`` (used for the negative control).
    """
    n, eps, D = spec.n, geom.epsilon, geom.D
    N = dim_so(n)
    gamma0 = random_unit(n, rng)
    if system == "nonrubber-reduced":
        def field(y):
            kd, gd, _ = ball.reduced_rhs(unvec(y[:N], n), y[N:], spec, geom)
            return np.concatenate([vec(kd), gd])

        chart = _at(ProductChart(N, SphereChart(gamma0)), vec(kappa_apply(spec, D, gamma0, random_skew(n, rng, scale))))
        return field, lambda y: 1.0 / density_nonrubber(spec, D, y[N:]), chart
    if system == "nonrubber-omega":
        def field(y):
            omega, gamma = unvec(y[:N], n), y[N:]
            k = kappa_apply(spec, D, gamma, omega)
            _, gd, _ = ball.reduced_rhs(k, gamma, spec, geom)
            return np.concatenate([vec(ball.omega_dot(k, gamma, spec, geom)), gd])

        chart = _at(ProductChart(N, SphereChart(gamma0)), vec(random_skew(n, rng, scale)))
        return field, lambda y: density_nonrubber(spec, D, y[N:]), chart
    Ibold = spec.modified(D)
    if system == "rubber":
        ops = rubber.RubberOperators(spec, geom)
        field = flatten_skew_field(lambda m, g: rubber.rubber_reduced_field(m, g, spec, geom, ops), n)
        chart = _at(RubberChart(gamma0, Ibold), scale * rng.normal(size=n - 1))
        return field, lambda y: density_rubber_h(Ibold, y[N:], eps), chart
    if system == "rubber-extended":
        ops = rubber.RubberOperators(spec, geom)
        field = flatten_skew_field(
            lambda mm, g: rubber.ext_momentum_field(rubber.ExtMomentumState(mm, g), spec, geom, ops), n
        )
        chart = _at(ProductChart(N, SphereChart(gamma0)), vec(random_skew(n, rng, scale)))
        return field, lambda y: density_rubber_v(Ibold, y[N:], eps), chart
    if system == "reduced-generic":
        sysobj = ReducedGeneric(n, spec, geom)
        chart = _cot_chart(gamma0, rng, scale)
        return sysobj.field, lambda y: density_rubber_v(Ibold, y[n:], eps), chart
    if system == "reduced-special":
        sysobj = ReducedSpecial(n, spec, geom)
        A = sysobj.A
        k = (n - 2) / (2 * eps) + 2 - n if exponent is None else exponent
        chart = _cot_chart(gamma0, rng, scale)
        return sysobj.field, lambda y: float(y[n:] @ A @ y[n:]) ** k, chart
    raise ValueError(f"unknown measure system {system!r}; choose from {MEASURE_SYSTEMS}")


def _cot_chart(gamma0, rng, scale):
    chart = CotangentChart(gamma0)
    n = gamma0.shape[0]
    chart.x0[n - 1 :] = chart.sphere.E.T @ _tangent(gamma0, rng, scale)
    return chart


def _at(chart, z):
    """Place the evaluation point at leading coordinates ``z`` (sphere coordinate 0)."""
    chart.x0[: len(z)] = z
    return chart


def make_inertia(system: str, n: int, D: float, rng) -> InertiaSpec:
    if system == "reduced-special":
        return random_spec_op(n, rng, D)
    if system.startswith("nonrubber"):
        # alternate between the two structured families and a generic operator
        pick = rng.integers(3)
        if pick == 0:
            return random_ch_op(n, rng, D)
        if pick == 1:
            return random_spec_op(n, rng, D)
    return random_generic(n, rng)


def measure_check(system: str, n: int, eps: float, samples: int = 50, seed: int = 0, D: float = 1.0,
                  exponent=None, fd_step: float = 1e-5, scale: float = 1.0) -> dict:
    rng = np.random.default_rng(seed)
    geom = GeometryParams.from_eps(eps, D)
    divs = []
    for _ in range(samples):
        spec = make_inertia(system, n, D, rng)
        field, density, chart = measure_problem(system, spec, geom, rng, exponent, scale)
        divs.append(abs(divergence_check(field, density, None, chart, fd_step)))
    divs = np.array(divs)
    tol = MEASURE_TOL[system]
    return {
        "check": "measure", "system": system, "n": n, "eps": eps, "samples": samples, "scale": scale,
        "max_div": float(divs.max()), "median_div": float(np.median(divs)),
        "min_div": float(divs.min()),
        "threshold": tol, "passed": bool(divs.max() < tol),
    }


def negative_control(n: int = 3, eps: float = 0.3, samples: int = 50, seed: int = 0, scale: float = 10.0) -> dict:
    """Reduced special flow with the density exponent replaced by 0.

    The same phase points are also checked with the correct exponent, so a
    pass shows the evaluator separates the two by several decades.
    """
    wrong = measure_check("reduced-special", n, eps, samples, seed, exponent=0.0, scale=scale)
    right = measure_check("reduced-special", n, eps, samples, seed, scale=scale)
    return {
        "check": "negative-control", "system": "reduced-special", "n": n, "eps": eps, "samples": samples,
        "scale": scale, "median_div_wrong": wrong["median_div"], "min_div_wrong": float(wrong["min_div"]),
        "max_div_right": right["max_div"], "threshold": NEGATIVE_CONTROL_MIN,
        "passed": bool(wrong["median_div"] > NEGATIVE_CONTROL_MIN and right["passed"]),
    }


def density_ratio_check(kind: str, n: int, samples: int = 100, seed: int = 0, eps: float = 0.3, D: float = 1.0) -> dict:
    """Relative spread of density / stated closed form over random gamma.

    ``kind``: ``"chop"`` (non-rubber density against ``(gamma, A^{-1} gamma)^((n-2)/2)``),
    ``"specop"`` (rubber density against ``(gamma, A gamma)^((1/(2 eps) - 1)(n-2))``) or
    ``"multiplier-matrix"`` (``det(H^T I^{-1} H)^(1/(2 eps))`` in a random frame against the
    Householder-frame density).
    """
    rng = np.random.default_rng(seed)
    ratios = []
    if kind == "chop":
        spec = random_ch_op(n, rng, D)
        Ainv = np.diag(1 / spec.a)
        for _ in range(samples):
            g = random_unit(n, rng)
            ratios.append(density_nonrubber(spec, D, g) / (g @ Ainv @ g) ** ((n - 2) / 2))
    elif kind == "specop":
        spec = random_spec_op(n, rng, D)
        A = np.diag(spec.a)
        Ib = spec.modified(D)
        for _ in range(samples):
            g = random_unit(n, rng)
            ratios.append(density_rubber_v(Ib, g, eps) / (g @ A @ g) ** ((1 / (2 * eps) - 1) * (n - 2)))
    elif kind == "multiplier-matrix":
        spec = random_generic(n, rng)
        Ib = spec.modified(D)
        Iinv = np.linalg.inv(Ib)
        for _ in range(samples):
            g = random_unit(n, rng)
            # any positively oriented frame with last column gamma
            F = complete_frame(g)
            R = np.eye(n)
            R[: n - 1, : n - 1] = random_rotation(n - 1, rng)
            F = F @ R
            H = h_basis(F)
            Amat = H.T @ Iinv @ H
            ratios.append(np.linalg.det(Amat) ** (1 / (2 * eps)) / density_rubber_h(Ib, g, eps))
    else:
        raise ValueError(f"unknown ratio kind {kind!r}")
    ratios = np.array(ratios)
    spread = float((ratios.max() - ratios.min()) / abs(ratios.mean()))
    return {"check": "density-ratio", "kind": kind, "n": n, "spread": spread, "threshold": 1e-8,
            "passed": spread < 1e-8}


def _random_cotangent(n, rng, scale=1.0):
    g = random_unit(n, rng)
    return reduced.CotangentState(_tangent(g, rng, scale), g)


def hamiltonization_check(n: int, eps: float, samples: int = 200, seed: int = 0, tol: float = 1e-10) -> dict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        spec = random_spec_op(n, rng)
        A = np.diag(spec.a)
        st = _random_cotangent(n, rng)
        worst = max(worst, reduced.verify_hamiltonization(st, A, eps))
    return {"check": "hamiltonization", "n": n, "eps": eps, "samples": samples, "max_residual": worst,
            "threshold": tol, "passed": worst < tol}


def reparametrization_check(n: int, eps: float, seed: int = 0, t_end: float = 1.0, h: float = 1e-3,
                            tol: float = 1e-5, scale: float = 3.0) -> dict:
    """Integrate the reduced flow in ``t`` and the Hamiltonian flow in ``tau``; compare ``gamma``."""
    rng = np.random.default_rng(seed)
    spec = random_spec_op(n, rng)
    geom = GeometryParams.from_eps(eps, spec.D)
    st = _random_cotangent(n, rng, scale)
    sys_t = ReducedSpecial(n, spec, geom)
    traj = integrate_system(sys_t, st.pack(), IntegratorConfig(h=h, t_end=t_end))
    pg = traj.y
    dpg = np.array([sys_t.field(y) for y in pg])
    spline = CubicHermiteSpline(traj.t, pg[:, n:], dpg[:, n:])

    sys_tau = Hamiltonized(n, spec, geom)
    y = sys_tau.initial({"gamma": st.gamma.tolist(), "p": st.p.tolist()}, rng)
    nu0 = reduced.multiplier(st.gamma, sys_tau.A, eps)
    htau = h * abs(nu0)
    worst = 0.0
    # sign of nu sets the direction of t in tau; march until t leaves [0, t_end]
    direction = 1.0 if nu0 > 0 else -1.0
    steps = 0
    while True:
        y_next = sys_tau.project(rk4_step(sys_tau.field, y, direction * htau))
        if y_next[-1] > t_end:
            break
        y = y_next
        steps += 1
        worst = max(worst, float(np.abs(y[n : 2 * n] - spline(y[-1])).max()))
        if steps > 10**7:
            raise RuntimeError("reparametrized integration did not reach t_end")
    travel = float(np.abs(pg[:, n:] - pg[0, n:]).max())
    return {"check": "reparametrization", "n": n, "eps": eps, "max_gamma_error": worst, "t_reached": float(y[-1]),
            "gamma_travel": travel,
            "threshold": tol, "passed": worst < tol and y[-1] > t_end - 2 * h}


def el_check(n: int, samples: int = 50, seed: int = 0, tol: float = 1e-8, eps: float = 0.5) -> dict:
    """Compare the reduced flow with an independent Euler-Lagrange flow of the reduced Lagrangian.

    They agree only where the curvature term vanishes, i.e. at eps = 1/2.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        spec = random_generic(n, rng)
        geom = GeometryParams.from_eps(eps, 1.0)
        Ib = spec.modified(geom.D)

        def M(gamma):
            W = np.stack([vec(wedge(gamma, e)) for e in np.eye(n)], axis=1)
            return W.T @ Ib @ W / eps**2

        def L(gamma, gd):
            return 0.5 * gd @ M(gamma) @ gd

        g = random_unit(n, rng)
        gd = _tangent(g, rng)
        h = 1e-30
        dM = np.imag(M(g + 1j * h * gd)) / h
        gradL = np.array([np.imag(L(g + 1j * h * e, gd)) / h for e in np.eye(n)])
        K = np.zeros((n + 1, n + 1))
        K[:n, :n] = M(g)
        K[:n, n] = -g
        K[n, :n] = g
        rhs = np.concatenate([gradL - dM @ gd, [-(gd @ gd)]])
        gdd = np.linalg.solve(K, rhs)[:n]
        # d/dt of the momentum along the Euler-Lagrange flow
        p = reduced.legendre(gd, g, Ib, eps)
        pdot_el = np.imag(reduced.legendre(gd + 1j * h * gdd, g + 1j * h * gd, Ib, eps)) / h
        pdot, gdot = reduced.reduced_field_generic(reduced.CotangentState(p, g), spec, geom, Ib)
        scale = max(1.0, np.abs(pdot).max())
        worst = max(worst, np.abs(pdot - pdot_el).max() / scale, np.abs(gdot - gd).max())
    return {"check": "euler-lagrange", "n": n, "eps": eps, "jk_coefficient": reduced.jk_coefficient(eps),
            "max_discrepancy": float(worst), "threshold": tol,
            "passed": bool(worst < tol)}


def _ext_omega_dot(mm, mmdot, gamma, gdot, Ib):
    h = 1e-30
    n = gamma.shape[0]
    M = lambda g: rubber.momentum_matrix(Ib, g)
    w = np.linalg.solve(M(gamma + 1j * h * gdot), vec(mm) + 1j * h * vec(mmdot))
    return unvec(np.imag(w) / h, n)


def rubber_formulations_check(n: int, eps: float, seed: int = 0, samples: int = 20, t_end: float = 5.0,
                              h: float = 1e-3, field_tol: float = 1e-10, traj_tol: float = 1e-6) -> dict:
    """Multiplier vs extended-momentum rubber flows, at field level and along trajectories."""
    rng = np.random.default_rng(seed)
    worst_field = 0.0
    for _ in range(samples):
        spec = random_generic(n, rng)
        geom = GeometryParams.from_eps(eps, 1.0)
        ops = rubber.RubberOperators(spec, geom)
        g = random_unit(n, rng)
        omega = wedge(_tangent(g, rng), g)
        m = ops.momentum(omega)
        mdot, gdot1 = rubber.rubber_reduced_field(m, g, spec, geom, ops)
        mm = rubber.ext_momentum(omega, g, ops.I)
        mmdot, gdot2 = rubber.ext_momentum_field(rubber.ExtMomentumState(mm, g), spec, geom, ops)
        wdot1 = ops.omega(mdot)
        wdot2 = _ext_omega_dot(mm, mmdot, g, gdot2, ops.I)
        scale = max(1.0, np.abs(wdot1).max())
        worst_field = max(worst_field, np.abs(gdot1 - gdot2).max(), np.abs(wdot1 - wdot2).max() / scale)

    spec = random_generic(n, rng)
    geom = GeometryParams.from_eps(eps, 1.0)
    g0 = random_unit(n, rng)
    omega0 = wedge(_tangent(g0, rng), g0)
    cfg = IntegratorConfig(h=h, t_end=t_end, stride=10)
    s1, s2 = Rubber(n, spec, geom), RubberExtended(n, spec, geom)
    tr1 = integrate_system(s1, s1.initial({"gamma": g0, "omega": omega0}, rng), cfg)
    tr2 = integrate_system(s2, s2.initial({"gamma": g0, "omega": omega0}, rng), cfg)
    N = dim_so(n)
    gam1 = tr1.y[:, N:].reshape(len(tr1), n, n)[:, :, -1]
    gam2 = tr2.y[:, N:]
    traj_err = float(np.abs(gam1 - gam2).max())
    return {"check": "rubber-formulations", "n": n, "eps": eps, "field_discrepancy": float(worst_field),
            "trajectory_discrepancy": traj_err, "field_threshold": field_tol, "trajectory_threshold": traj_tol,
            "passed": worst_field < field_tol and traj_err < traj_tol}


def reduced_formulations_check(n: int, eps: float, seed: int = 0, samples: int = 50, t_end: float = 5.0,
                               h: float = 1e-3, field_tol: float = 1e-10, traj_tol: float = 1e-6) -> dict:
    """Generic vs closed-form special reduced fields under the special inertia, and the lift
    ``mm = eps gamma ^ p`` into the extended rubber system."""
    rng = np.random.default_rng(seed)
    worst_special = 0.0
    worst_lift = 0.0
    for _ in range(samples):
        spec = random_spec_op(n, rng)
        geom = GeometryParams.from_eps(eps, spec.D)
        A = np.diag(spec.a)
        st = _random_cotangent(n, rng)
        pd1, gd1 = reduced.reduced_field_generic(st, spec, geom)
        pd2, gd2 = reduced.reduced_field_special(st, A, eps)
        scale = max(1.0, np.abs(pd2).max(), np.abs(gd2).max())
        worst_special = max(worst_special, np.abs(pd1 - pd2).max() / scale, np.abs(gd1 - gd2).max() / scale)

        gspec = random_generic(n, rng)
        ops = rubber.RubberOperators(gspec, geom)
        pd, gd = reduced.reduced_field_generic(st, gspec, geom)
        mm = reduced.ext_momentum_of(st, eps)
        mmdot, gdot = rubber.ext_momentum_field(rubber.ExtMomentumState(mm, st.gamma), gspec, geom, ops)
        lifted = eps * (wedge(gd, st.p) + wedge(st.gamma, pd))
        scale = max(1.0, np.abs(mmdot).max())
        worst_lift = max(worst_lift, np.abs(lifted - mmdot).max() / scale, np.abs(gdot - gd).max() / scale)

    spec = random_spec_op(n, rng)
    geom = GeometryParams.from_eps(eps, spec.D)
    st = _random_cotangent(n, rng)
    cfg = IntegratorConfig(h=h, t_end=t_end, stride=10)
    sg, ss = ReducedGeneric(n, spec, geom), ReducedSpecial(n, spec, geom)
    tg = integrate_system(sg, st.pack(), cfg)
    ts = integrate_system(ss, st.pack(), cfg)
    se = RubberExtended(n, spec, geom)
    te = integrate_system(se, np.concatenate([vec(reduced.ext_momentum_of(st, eps)), st.gamma]), cfg)
    N = dim_so(n)
    traj_special = float(np.abs(tg.y - ts.y).max())
    traj_lift = float(np.abs(te.y[:, N:] - tg.y[:, n:]).max())
    fields = max(worst_special, worst_lift)
    trajs = max(traj_special, traj_lift)
    return {"check": "reduced-formulations", "n": n, "eps": eps,
            "special_field_discrepancy": float(worst_special), "lift_field_discrepancy": float(worst_lift),
            "special_trajectory_discrepancy": traj_special, "lift_trajectory_discrepancy": traj_lift,
            "field_threshold": field_tol, "trajectory_threshold": traj_tol,
            "passed": fields < field_tol and trajs < traj_tol}


def metric_limit_check(n: int, samples: int = 200, seed: int = 0, tol: float = 1e-12) -> dict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        A = np.diag(rng.uniform(0.5, 2.0, n))
        g = random_unit(n, rng)
        dg = _tangent(g, rng)
        a = reduced.metric_eval(g, dg, A, 1.0)
        b = reduced.metric_horizontal(g, dg, A)
        worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    return {"check": "metric-limit", "n": n, "max_discrepancy": worst, "threshold": tol, "passed": worst < tol}
