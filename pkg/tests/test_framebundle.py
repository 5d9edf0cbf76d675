import numpy as np
import pytest
from hypothesis import given, strategies as st

from maglab import dynamics as dy
from maglab import framebundle as fb
from maglab import liealg, systems
from maglab import magtensor as mt
from maglab.suites import bracket_residuals

seeds = st.integers(0, 2**32 - 1)
SYSTEMS = ["flat-t2", "conformal-t2", "sphere", "nonclosed-t3", "conformal-t3", "kahler-t4"]


def tangency_defect(S, w, field):
    """d/dt of WᵀgW along the field at w."""
    dp, dW = field(w)
    g = S.metric.g(w.p)
    dg = np.einsum("kij,k->ij", S.metric.dg(w.p), dp)
    return np.abs(dW.T @ g @ w.W + w.W.T @ g @ dW + w.W.T @ dg @ w.W).max()


@pytest.mark.parametrize("name", SYSTEMS)
def test_random_frames_are_oriented_orthonormal(name, rng):
    S = systems.builtin(name)
    for _ in range(5):
        w = fb.random_frame(S, rng)
        assert w.orthonormality_error(S) < 1e-10
        assert np.linalg.det(w.W) > 0


@pytest.mark.parametrize("name", SYSTEMS)
def test_fields_are_tangent_to_the_bundle(name, rng):
    S = systems.builtin(name)
    w = fb.random_frame(S, rng)
    x = rng.standard_normal(S.n)
    for field in (fb.fundamental_field(liealg.random_skew(rng, S.n)), fb.standard_field(S, x),
                  fb.magnetic_standard_field(S, x), fb.magnetic_generator(S)):
        assert tangency_defect(S, w, field) < 1e-8


def test_zero_field_and_fundamental_flow(rng):
    S = systems.builtin("sphere")
    w = fb.random_frame(S, rng)
    dp, dW = fb.fundamental_field(np.zeros((2, 2)))(w)
    assert not dp.any() and not dW.any()
    xi = liealg.random_skew(rng, 2)
    # integrate Ẇ = Wξ with RK4 and compare with the exponential
    W = w.W.copy()
    steps = 200
    for _ in range(steps):
        W = dy.rk4_step(lambda M: M @ xi, W, 1.0 / steps)
    assert np.abs(W - fb.flow_fundamental(w, xi, 1.0).W).max() < 1e-10


def test_flat_standard_field_is_straight_line(rng):
    S = systems.builtin("flat-t3")
    w = fb.random_frame(S, rng)
    x = rng.standard_normal(3)
    dp, dW = fb.standard_field(S, x)(w)
    assert np.allclose(dp, w.W @ x) and not dW.any()


def test_magnetic_standard_equals_standard_without_field(rng):
    S = systems.builtin("conformal-t3", components={})
    w = fb.random_frame(S, rng)
    x = rng.standard_normal(3)
    a, b = fb.magnetic_standard_field(S, x)(w), fb.standard_field(S, x)(w)
    assert np.allclose(a[0], b[0]) and np.allclose(a[1], b[1])


def test_magnetic_standard_along_e1_is_generator(rng):
    S = systems.builtin("conformal-t3")
    w = fb.random_frame(S, rng)
    a = fb.magnetic_standard_field(S, np.eye(3)[0])(w)
    b = fb.magnetic_generator(S)(w)
    assert np.allclose(a[0], b[0]) and np.allclose(a[1], b[1], atol=1e-14)


@pytest.mark.parametrize("name", SYSTEMS)
def test_structure_equations_under_bracket_oracle(name, rng):
    S = systems.builtin(name, b=0.6) if name == "sphere" else systems.builtin(name)
    for _ in range(5):
        res = bracket_residuals(S, fb.random_frame(S, rng), rng)
        assert res["fundamental"] < 1e-6
        assert res["mixed"] < 1e-6
        assert res["horizontal"] < 1e-5
        assert res["magnetic"] < 1e-4


def test_fundamental_bracket_sign_in_so3(rng):
    # so(3) is non-abelian, so this pins [Y_ξ, Y_η] = +Y_{[ξ,η]}
    S = systems.builtin("flat-t3")
    w = fb.random_frame(S, rng)
    xi, eta = liealg.random_skew(rng, 3), liealg.random_skew(rng, 3)
    Z = fb.fd_bracket(fb.fundamental_field(xi), fb.fundamental_field(eta), w)
    expected = w.W @ liealg.commutator(xi, eta)
    assert np.abs(Z[1] - expected).max() < 1e-8
    assert np.abs(expected).max() > 1e-2


@pytest.mark.parametrize("name", ["conformal-t3", "nonclosed-t3", "kahler-t4"])
def test_magnetic_standard_from_generator_bracket(name, rng):
    S = systems.builtin(name)
    n = S.n
    e = np.eye(n)
    w = fb.random_frame(S, rng)
    for j in range(1, n):
        Z = fb.fd_bracket(fb.magnetic_generator(S), fb.fundamental_field(liealg.wedge(e[0], e[j])), w)
        E = fb.magnetic_standard_field(S, e[j])(w)
        assert max(np.abs(Z[0] + E[0]).max(), np.abs(Z[1] + E[1]).max()) < 1e-6


def test_fd_bracket_trivial_cases(rng):
    S = systems.builtin("flat-t2")
    w = fb.random_frame(S, rng)
    U = fb.magnetic_generator(systems.builtin("conformal-t2"))
    Z = fb.fd_bracket(U, U, w)
    assert not Z[0].any() and not Z[1].any()
    Z = fb.fd_bracket(fb.standard_field(S, np.eye(2)[0]), fb.standard_field(S, np.eye(2)[1]), w)
    assert np.abs(Z[0]).max() == 0 and np.abs(Z[1]).max() == 0
    with pytest.raises(ValueError):
        fb.fd_bracket(U, U, w, h=0.0)


def test_fd_bracket_second_order_convergence(rng):
    S = systems.builtin("conformal-t2")
    w = fb.random_frame(S, rng)
    x, y = np.eye(2)
    E = -w.W @ mt.curvature_sample(S, w).riemann_op(x, y)
    errs = []
    for h in (2e-2, 1e-2):
        Z = fb.fd_bracket(fb.standard_field(S, x), fb.standard_field(S, y), w, h)
        errs.append(max(np.abs(Z[0]).max(), np.abs(Z[1] - E).max()))
    assert 3.0 < errs[0] / errs[1] < 5.0


@pytest.mark.parametrize("name", ["conformal-t3", "kahler-t4"])
def test_omega_equivariance(name, rng):
    # Y_ξ 𝛀 = [𝛀, ξ]
    S = systems.builtin(name)
    w = fb.random_frame(S, rng)
    xi = liealg.random_skew(rng, S.n)
    h = 1e-4
    deriv = (mt.frame_omega(S, fb.flow_fundamental(w, xi, h))
             - mt.frame_omega(S, fb.flow_fundamental(w, xi, -h))) / (2 * h)
    om = mt.frame_omega(S, w)
    assert np.abs(deriv - liealg.commutator(om, xi)).max() < 1e-6


def test_decompose_known_vectors(rng):
    S = systems.builtin("conformal-t3")
    w = fb.random_frame(S, rng)
    c, h, xi = fb.decompose_fm_vector(S, w, fb.magnetic_generator(S)(w))
    assert np.isclose(c, 1) and np.allclose(h, 0) and np.allclose(xi, 0, atol=1e-12)
    e = np.eye(3)
    Y = liealg.wedge(e[1], e[2])
    c, h, xi = fb.decompose_fm_vector(S, w, fb.fundamental_field(Y)(w))
    assert np.isclose(c, 0) and np.allclose(h, 0) and np.allclose(xi, Y)


@given(seeds)
def test_decompose_reconstructs(seed):
    rng = np.random.default_rng(seed)
    S = systems.builtin("conformal-t3")
    w = fb.random_frame(S, rng)
    x, xi = rng.standard_normal(3), liealg.random_skew(rng, 3)
    Z = fb.combine((1.0, fb.magnetic_standard_field(S, x)), (1.0, fb.fundamental_field(xi)))(w)
    c, h, eta = fb.decompose_fm_vector(S, w, Z)
    R = fb.combine((1.0, fb.magnetic_standard_field(S, np.concatenate([[c], h]))),
                   (1.0, fb.fundamental_field(eta)))(w)
    assert max(np.abs(R[0] - Z[0]).max(), np.abs(R[1] - Z[1]).max()) < 1e-10
    assert np.isclose(c, x[0]) and np.allclose(h, x[1:]) and np.allclose(eta, xi)


def test_decompose_rejects_singular_frame():
    S = systems.builtin("flat-t2")
    w = fb.FramePoint(np.zeros(2), np.array([[1.0, 1.0], [0.0, 1e-12]]))
    with pytest.raises(np.linalg.LinAlgError):
        fb.decompose_fm_vector(S, w, (np.zeros(2), np.zeros((2, 2))))
