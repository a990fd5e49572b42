import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chaplygin import rubber
from chaplygin.inertia import GeometryParams, InertiaSpec, random_generic
from chaplygin.so_n import (
    commutator,
    complete_frame,
    hat,
    proj_h,
    proj_v,
    random_rotation,
    random_skew,
    random_unit,
    unvec,
    vec,
    vee,
    wedge,
)

seeds = st.integers(0, 2**32 - 1)
EPS = [-1.0, 0.3, 0.5, 1.0, 2.0]


def admissible(n, rng, spec, geom):
    g = random_unit(n, rng)
    omega = wedge(rng.normal(size=n), g)
    ops = rubber.RubberOperators(spec, geom)
    return rubber.RubberState.from_gamma(ops.momentum(omega), g), ops


def directional(fn, y, v, h=1e-6):
    return (fn(y + h * v) - fn(y - h * v)) / (2 * h)


def test_state_validation(rng):
    g = random_unit(3, rng)
    with pytest.raises(ValueError):
        rubber.RubberState(random_skew(3, rng), np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(ValueError):
        rubber.RubberState(random_skew(4, rng), complete_frame(g))
    st_ = rubber.RubberState.from_gamma(random_skew(3, rng), g)
    np.testing.assert_allclose(st_.gamma, g, atol=1e-15)
    back = rubber.RubberState.unpack(st_.pack(), 3)
    np.testing.assert_array_equal(back.frame, st_.frame)


def test_lambda_vanishes_for_isotropic_operator(rng):
    spec = InertiaSpec(1.3 * np.eye(6))
    geom = GeometryParams.from_eps(0.4, 0.5)
    st_, _ = admissible(4, rng, spec, geom)
    np.testing.assert_allclose(rubber.lambda0_solve(st_.m, st_.gamma, spec, geom), 0, atol=1e-15)


@given(seeds, st.integers(3, 6), st.sampled_from(EPS))
def test_lambda_keeps_velocity_admissible(seed, n, eps):
    rng = np.random.default_rng(seed)
    spec, geom = random_generic(n, rng), GeometryParams.from_eps(eps, rng.uniform(0, 2))
    st_, ops = admissible(n, rng, spec, geom)
    lam = rubber.lambda0_solve(st_.m, st_.gamma, spec, geom)
    np.testing.assert_allclose(proj_v(lam, st_.gamma), 0, atol=1e-12)
    mdot = commutator(st_.m, ops.omega(st_.m)) + lam
    assert np.abs(proj_h(ops.omega(mdot), st_.gamma)).max() < 1e-12
    # the multiplier does not depend on which frame completes gamma
    R = np.eye(n)
    R[: n - 1, : n - 1] = random_rotation(n - 1, rng)
    lam2 = rubber.lambda0_solve(st_.m, st_.gamma, spec, geom, frame=st_.frame @ R)
    np.testing.assert_allclose(lam2, lam, atol=1e-12)


@given(seeds)
def test_n3_multiplier_closed_form(seed):
    rng = np.random.default_rng(seed)
    spec, geom = random_generic(3, rng), GeometryParams.from_eps(0.7, 0.5)
    st_, ops = admissible(3, rng, spec, geom)
    lam = rubber.lambda0_solve(st_.m, st_.gamma, spec, geom)
    I3 = rubber.ibold3_from_spec(spec, geom.D)
    m3, g3 = vee(st_.m), st_.gamma
    w3 = np.linalg.solve(I3, m3)
    mxw = np.cross(m3, w3)
    # the numerator with m in place of gamma is identically zero
    assert abs(m3 @ np.linalg.solve(I3, mxw)) < 1e-12 * max(1.0, np.abs(m3).max() ** 2)
    value = -(g3 @ np.linalg.solve(I3, mxw)) / (g3 @ np.linalg.solve(I3, g3))
    np.testing.assert_allclose(lam, value * hat(g3), atol=1e-12)


def test_ibold3_on_vectors(rng):
    spec, D = random_generic(3, rng), 0.3
    x = rng.normal(size=3)
    np.testing.assert_allclose(vee(unvec(spec.modified(D) @ vec(hat(x)), 3)), rubber.ibold3_from_spec(spec, D) @ x)
    with pytest.raises(ValueError):
        rubber.ibold3_from_spec(random_generic(4, rng), D)


@given(seeds, st.integers(3, 5), st.sampled_from(EPS))
def test_field_preserves_frame_twist_and_energy(seed, n, eps):
    rng = np.random.default_rng(seed)
    spec, geom = random_generic(n, rng), GeometryParams.from_eps(eps, 0.8)
    st_, ops = admissible(n, rng, spec, geom)
    mdot, gdot, Fdot = rubber.rubber_field(st_, spec, geom)
    F = st_.frame
    np.testing.assert_allclose(gdot, Fdot[:, -1])
    np.testing.assert_allclose(Fdot.T @ F + F.T @ Fdot, 0, atol=1e-12)
    N = len(vec(st_.m))
    y = np.concatenate([vec(st_.m), F.ravel()])
    v = np.concatenate([vec(mdot), Fdot.ravel()])
    phi = lambda z: rubber.no_twist_residuals(ops.omega(unvec(z[:N], n)), z[N:].reshape(n, n))
    assert np.abs(directional(phi, y, v)).max() < 1e-8
    energy = lambda z: rubber.rubber_energy(unvec(z[:N], n), spec, geom, ops)
    assert abs(directional(energy, y, v)) < 1e-8 * max(1.0, energy(y))


def test_reduced_field_matches_frame_field(rng):
    spec, geom = random_generic(4, rng), GeometryParams.from_eps(1.5, 0.5)
    st_, ops = admissible(4, rng, spec, geom)
    a = rubber.rubber_field(st_, spec, geom)
    b = rubber.rubber_reduced_field(st_.m, st_.gamma, spec, geom)
    np.testing.assert_allclose(a[0], b[0], atol=1e-14)
    np.testing.assert_allclose(a[1], b[1], atol=1e-14)


def test_projection_restores_constraints(rng):
    n = 4
    spec, geom = random_generic(n, rng), GeometryParams.from_eps(0.3, 0.5)
    st_, ops = admissible(n, rng, spec, geom)
    F = st_.frame + 1e-7 * rng.normal(size=(n, n))
    m = st_.m + 1e-7 * random_skew(n, rng)
    fixed = rubber.project_rubber(m, F, spec, geom)
    np.testing.assert_allclose(fixed.frame.T @ fixed.frame, np.eye(n), atol=1e-14)
    assert np.abs(rubber.no_twist_residuals(ops.omega(fixed.m), fixed.frame)).max() < 1e-14
    assert np.abs(fixed.m - st_.m).max() < 1e-5


class TestExtendedMomentum:
    @given(seeds, st.integers(3, 5))
    def test_roundtrip(self, seed, n):
        rng = np.random.default_rng(seed)
        Ib = random_generic(n, rng).modified(0.5)
        g, w = random_unit(n, rng), random_skew(n, rng)
        mm = rubber.ext_momentum(w, g, Ib)
        back = rubber.omega_from_ext_momentum(mm, g, Ib)
        assert np.abs(back - w).max() < 1e-10 * np.abs(w).max()

    def test_on_constraint_is_projected_momentum(self, rng):
        Ib = random_generic(4, rng).modified(0.5)
        g = random_unit(4, rng)
        w = wedge(rng.normal(size=4), g)
        np.testing.assert_allclose(rubber.ext_momentum(w, g, Ib), proj_v(unvec(Ib @ vec(w), 4), g), atol=1e-14)

    def test_eps_one_is_euler_type(self, rng):
        spec, geom = random_generic(4, rng), GeometryParams.from_eps(1.0, 0.5)
        st_ = rubber.ExtMomentumState(random_skew(4, rng), random_unit(4, rng))
        mmdot, _ = rubber.ext_momentum_field(st_, spec, geom)
        w = rubber.omega_from_ext_momentum(st_.mm, st_.gamma, spec.modified(geom.D))
        np.testing.assert_allclose(mmdot, commutator(st_.mm, w), atol=1e-14)

    @given(seeds, st.integers(3, 5), st.sampled_from(EPS))
    def test_keeps_rubber_submanifold(self, seed, n, eps):
        rng = np.random.default_rng(seed)
        spec, geom = random_generic(n, rng), GeometryParams.from_eps(eps, 0.7)
        Ib = spec.modified(geom.D)
        g = random_unit(n, rng)
        mm = rubber.ext_momentum(wedge(rng.normal(size=n), g), g, Ib)
        mmdot, gdot = rubber.ext_momentum_field(rubber.ExtMomentumState(mm, g), spec, geom)
        N = len(vec(mm))

        def twist(z):
            gg = z[N:]
            return vec(proj_h(rubber.omega_from_ext_momentum(unvec(z[:N], n), gg, Ib), gg))

        y = np.concatenate([vec(mm), g])
        assert np.abs(directional(twist, y, np.concatenate([vec(mmdot), gdot]))).max() < 1e-8


class TestThreeDimensional:
    @given(seeds, st.sampled_from(EPS))
    def test_matches_general_code(self, seed, eps):
        rng = np.random.default_rng(seed)
        spec, geom = random_generic(3, rng), GeometryParams.from_eps(eps, 0.6)
        st_, ops = admissible(3, rng, spec, geom)
        mdot, gdot, _ = rubber.rubber_field(st_, spec, geom)
        m3d, g3d = rubber.rubber_field_3d(vee(st_.m), st_.gamma, rubber.ibold3_from_spec(spec, geom.D), eps)
        np.testing.assert_allclose(m3d, vee(mdot), atol=1e-12)
        np.testing.assert_allclose(g3d, gdot, atol=1e-12)

    def test_constraint_rate_vanishes(self, rng):
        spec, eps = random_generic(3, rng), 1.0
        I3 = rubber.ibold3_from_spec(spec, 0.5)
        g = random_unit(3, rng)
        m = I3 @ np.cross(rng.normal(size=3), g)
        md, gd = rubber.rubber_field_3d(m, g, I3, eps)
        phi = lambda z: z[3:] @ np.linalg.solve(I3, z[:3])
        y = np.concatenate([m, g])
        assert abs(phi(y)) < 1e-14
        assert abs(directional(phi, y, np.concatenate([md, gd]))) < 1e-9

    def test_rejects_other_dimensions(self, rng):
        with pytest.raises(ValueError):
            rubber.rubber_field_3d(np.ones(4), np.ones(4), np.eye(4), 1.0)
