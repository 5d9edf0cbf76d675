import numpy as np
import pytest
from hypothesis import given, strategies as st

from maglab import manifold as mf
from maglab import systems
from maglab.systems import TrigPoly

seeds = st.integers(0, 2**32 - 1)


def frame_vectors(rng, n):
    return rng.standard_normal((4, n))


def test_richardson_jacobian_of_sine():
    p = np.array([0.3, -1.1])
    jac = mf.richardson_jacobian(lambda q: np.sin(q), p, 1e-3)
    assert np.allclose(jac, np.diag(np.cos(p)), atol=1e-10)


def test_flat_torus_has_no_connection(rng):
    S = systems.builtin("flat-t3")
    p = systems.sample_point(S, rng)
    assert np.abs(mf.christoffel(S.metric, p)).max() == 0
    assert np.abs(mf.riemann_tensor(S.metric, p)).max() == 0


@pytest.mark.parametrize("name,K", [("sphere", 1.0), ("hyperbolic", -1.0)])
@given(seed=seeds)
def test_space_form_sectional_curvature(name, K, seed):
    rng = np.random.default_rng(seed)
    S = systems.builtin(name, n=3)
    p = systems.sample_point(S, rng)
    x, y = rng.standard_normal((2, 3))
    assert np.isclose(mf.sectional_curvature(S.metric, p, x, y), K, atol=1e-10)


@given(seeds)
def test_conformal_surface_gauss_curvature(seed):
    rng = np.random.default_rng(seed)
    S = systems.builtin("conformal-t2")
    phi = S.params["phi"]
    p = systems.sample_point(S, rng)
    K = -np.exp(-2 * phi.value(p)) * np.trace(phi.hess(p))
    assert np.isclose(mf.sectional_curvature(S.metric, p, np.eye(2)[0], np.eye(2)[1]), K, atol=1e-12)


@pytest.mark.parametrize("name", ["conformal-t2", "sphere", "conformal-t3"])
def test_riemann_symmetries(name, rng):
    S = systems.builtin(name)
    n = S.n
    for _ in range(10):
        p = systems.sample_point(S, rng)
        g = S.metric.g(p)
        x, y, z, w = frame_vectors(rng, n)
        R = lambda a, b, c: mf.riemann(S.metric, p, a, b, c)
        assert np.abs(R(x, y, z) + R(y, z, x) + R(z, x, y)).max() < 1e-8
        assert np.allclose(R(x, y, z), -R(y, x, z))
        assert np.isclose(R(x, y, z) @ g @ w, -(R(x, y, w) @ g @ z))
        assert np.isclose(R(x, y, z) @ g @ w, R(z, w, x) @ g @ y)


@pytest.mark.parametrize("name", ["conformal-t2", "sphere", "conformal-t3"])
def test_finite_difference_derivatives_match_analytic(name, rng):
    S = systems.builtin(name)
    fd = S.without_analytic_derivatives()
    for _ in range(3):
        p = systems.sample_point(S, rng)
        assert np.abs(mf.christoffel(S.metric, p) - mf.christoffel(fd.metric, p)).max() < 1e-8
        assert np.abs(mf.riemann_tensor(S.metric, p) - mf.riemann_tensor(fd.metric, p)).max() < 1e-5
        assert np.abs(S.dsigma_at(p) - fd.dsigma_at(p)).max() < 1e-8


def test_fd_step_halving_converges():
    # Richardson extrapolation is fourth order: halving h shrinks the error by ~16
    S = systems.builtin("conformal-t2")
    p = np.array([0.4, 1.3])
    exact = S.metric.dg(p)
    errs = []
    for h in (4e-2, 2e-2):
        fd = S.without_analytic_derivatives()
        fd.metric.fd_step = h
        errs.append(np.abs(fd.metric.dg(p) - exact).max())
    assert 10 < errs[0] / errs[1] < 20


@given(seeds)
def test_lorentz_is_dual_to_sigma(seed):
    rng = np.random.default_rng(seed)
    S = systems.builtin("conformal-t3")
    p = systems.sample_point(S, rng)
    x, y = rng.standard_normal((2, 3))
    om = mf.lorentz(S, p)
    assert np.isclose(x @ S.sigma_at(p) @ y, (om @ x) @ S.metric.g(p) @ y)


def test_constant_field_rotates_counterclockwise():
    S = systems.builtin("constant-field", b=2.0)
    om = mf.lorentz(S, np.zeros(2))
    assert np.allclose(om, [[0, -2], [2, 0]])


def test_nabla_omega_vanishes_for_kahler(rng):
    S = systems.builtin("kahler-t4")
    p = systems.sample_point(S, rng)
    assert np.abs(mf.nabla_omega(S, p, rng.standard_normal(4))).max() == 0


@pytest.mark.parametrize("name", ["conformal-t3", "sphere", "conformal-t2"])
def test_nabla_omega_is_skew(name, rng):
    S = systems.builtin(name, b=0.7) if name == "sphere" else systems.builtin(name)
    p = systems.sample_point(S, rng)
    g = S.metric.g(p)
    A = mf.nabla_omega(S, p, rng.standard_normal(S.n))
    assert np.abs(g @ A + (g @ A).T).max() < 1e-12


@pytest.mark.parametrize("name", ["conformal-t3", "nonclosed-t3"])
def test_d_sigma_from_covariant_derivative(name, rng):
    # dσ(x,y,z) = 𝔖 g((∇_x Ω) y, z) for the Levi-Civita connection
    S = systems.builtin(name)
    p = systems.sample_point(S, rng)
    g = S.metric.g(p)
    x, y, z = rng.standard_normal((3, 3))
    cyc = sum(mf.nabla_omega(S, p, a) @ b @ g @ c for a, b, c in ((x, y, z), (y, z, x), (z, x, y)))
    assert np.isclose(mf.d_sigma(S, p, x, y, z), cyc, atol=1e-12)


def test_closed_and_nonclosed_forms(rng):
    x, y, z = np.eye(3)
    closed = systems.builtin("flat-t3", sigma_matrix=np.array([[0, 1.0, 0], [-1.0, 0, 0], [0, 0, 0]]))
    open_ = systems.builtin("nonclosed-t3")
    p = systems.sample_point(open_, rng)
    assert mf.d_sigma(closed, p, x, y, z) == 0
    assert abs(mf.d_sigma(open_, np.array([0.3, 0.2, 0.1]), x, y, z)) > 1e-3


def test_pull_back_checks_arity():
    with pytest.raises(ValueError):
        mf.pull_back(np.zeros((2, 2, 2)), np.eye(2))


def test_pull_back_matches_einsum(rng):
    T = rng.standard_normal((3, 3, 3))
    A, B, C = rng.standard_normal((3, 3, 3))
    assert np.allclose(mf.pull_back(T, A, B, C), np.einsum("abc,ai,bj,ck->ijk", T, A, B, C))


def test_trig_poly_derivatives():
    f = TrigPoly.from_terms(2, [((1, 2), 0.3, -0.4), ((0, 1), 0.1, 0.2)], const=0.5)
    p = np.array([0.7, -0.2])
    assert np.allclose(f.grad(p), mf.richardson_jacobian(lambda q: np.array(f.value(q)), p, 1e-3), atol=1e-10)
    assert np.allclose(f.hess(p), mf.richardson_jacobian(f.grad, p, 1e-3), atol=1e-9)
