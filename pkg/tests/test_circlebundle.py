import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maglab import circlebundle as cb
from maglab import systems
from maglab.systems import TrigPoly

GRID = cb.SurfaceGrid((24, 24, 24))
seeds = st.integers(0, 2**32 - 1)


@pytest.fixture(scope="module")
def conformal():
    return cb.surface_geometry(systems.builtin("conformal-t2"), GRID)


@pytest.fixture(scope="module")
def flat():
    return cb.surface_geometry(systems.builtin("flat-t2"), GRID)


def field(fn, grid=GRID):
    return cb.field_from_function(fn, grid)


# vertical calculus


@pytest.mark.parametrize("m", [1, 2, 5])
def test_vertical_derivative_of_cosine(m):
    u = field(lambda x1, x2, th: np.cos(m * th))
    expected = field(lambda x1, x2, th: -m * np.sin(m * th))
    assert (cb.vertical_derivative(u) - expected).max_abs() < 1e-12


@pytest.mark.parametrize("m", [0, 3, 7])
def test_second_vertical_derivative_is_minus_m_squared(m):
    u = field(lambda x1, x2, th: np.sin(x1) * np.cos(m * th + 0.3))
    vv = cb.vertical_derivative(cb.vertical_derivative(u))
    assert (vv + m * m * u).max_abs() < 1e-11


def test_spectral_derivative_in_base_direction():
    u = field(lambda x1, x2, th: np.sin(2 * x1 + x2) * np.cos(th))
    expected = field(lambda x1, x2, th: 2 * np.cos(2 * x1 + x2) * np.cos(th))
    assert (cb.spectral_derivative(u, 0) - expected).max_abs() < 1e-12


def test_fiber_field_rejects_wrong_shape():
    with pytest.raises(ValueError):
        cb.FiberField(np.zeros((4, 4, 5)), cb.SurfaceGrid((4, 4, 4)))


def test_grid_needs_three_axes():
    with pytest.raises(ValueError):
        cb.SurfaceGrid((8, 8))


def test_fiber_field_is_read_only():
    u = field(lambda x1, x2, th: np.cos(th))
    with pytest.raises(ValueError):
        u.values[0, 0, 0] = 1.0


def test_fiber_field_arithmetic():
    u = field(lambda x1, x2, th: np.cos(th))
    w = field(lambda x1, x2, th: np.sin(x1))
    assert np.allclose((2 * u + w - u / 2).values, 1.5 * u.values + w.values)
    assert np.allclose((-u * w).values, -u.values * w.values)


# geodesic and magnetic derivatives


def test_x_sigma_kills_constants(conformal):
    one = field(lambda x1, x2, th: np.ones_like(x1 + x2 + th))
    assert cb.x_sigma(one, conformal).max_abs() < 1e-13


def test_flat_geodesic_derivative(flat):
    u = field(lambda x1, x2, th: np.sin(x1) + 0 * th)
    expected = field(lambda x1, x2, th: np.cos(x1) * np.cos(th))
    assert (cb.geodesic_derivative(u, flat) - expected).max_abs() < 1e-12


def test_field_term_is_b_times_vertical():
    S = systems.builtin("constant-field", b=1.7)
    G = cb.surface_geometry(S, GRID)
    u = field(lambda x1, x2, th: np.cos(2 * th) + 0 * x1)
    expected = field(lambda x1, x2, th: -2 * 1.7 * np.sin(2 * th) + 0 * x1)
    assert (cb.field_term(u, G) - expected).max_abs() < 1e-12


def test_horizontal_is_commutator_of_vertical_and_geodesic(conformal):
    u = cb.random_field(np.random.default_rng(3), GRID, degree=3, fiber_degree=3, count=5)
    H = cb.horizontal_derivative(u, conformal)
    VX = cb.vertical_derivative(cb.geodesic_derivative(u, conformal))
    XV = cb.geodesic_derivative(cb.vertical_derivative(u), conformal)
    assert (H - (VX - XV)).max_abs() < 1e-10 * max(1.0, H.max_abs())


@settings(max_examples=10)
@given(seeds)
def test_x_sigma_is_skew_adjoint(conformal, seed):
    rng = np.random.default_rng(seed)
    u = cb.random_field(rng, GRID, degree=3, fiber_degree=3, count=5)
    w = cb.random_field(rng, GRID, degree=3, fiber_degree=3, count=5)
    lhs = cb.inner(cb.x_sigma(u, conformal), w, conformal) + cb.inner(u, cb.x_sigma(w, conformal), conformal)
    scale = np.sqrt(cb.norm2(u, conformal) * cb.norm2(w, conformal))
    assert abs(lhs) < 1e-10 * max(1.0, scale)


def test_geometry_rejects_non_surface():
    with pytest.raises(ValueError):
        cb.surface_geometry(systems.builtin("nonclosed-t3"), GRID)
    with pytest.raises(ValueError):
        cb.surface_geometry(systems.builtin("sphere"), GRID)


def test_gauss_curvature_integrates_to_zero(conformal):
    total = np.sum(conformal.gauss_curvature * np.exp(2 * conformal.phi)) * (2 * np.pi / 24) ** 2
    assert abs(total) < 1e-11


def test_geometry_mismatch_raises(conformal):
    u = cb.random_field(np.random.default_rng(0), cb.SurfaceGrid((16, 16, 16)), degree=2)
    with pytest.raises(ValueError):
        cb.x_sigma(u, conformal)


# fiber harmonics


@settings(max_examples=15)
@given(seeds)
def test_parseval_over_harmonics(conformal, seed):
    u = cb.random_field(np.random.default_rng(seed), GRID, degree=3, fiber_degree=5, count=6)
    pieces = [cb.project_harmonic(u, m) for m in range(GRID.shape[2] // 2 + 1)]
    total = sum(cb.norm2(p, conformal) for p in pieces)
    assert abs(total - cb.norm2(u, conformal)) < 1e-12 * cb.norm2(u, conformal)
    assert (sum(pieces[1:], pieces[0]) - u).max_abs() < 1e-12 * u.max_abs()


@settings(max_examples=15)
@given(seeds, st.integers(0, 6))
def test_project_harmonic_is_idempotent(seed, m):
    u = cb.random_field(np.random.default_rng(seed), GRID, degree=3, fiber_degree=6, count=6)
    p = cb.project_harmonic(u, m)
    assert (cb.project_harmonic(p, m) - p).max_abs() < 1e-13 * max(1.0, u.max_abs())


def test_project_harmonic_rejects_negative_degree():
    with pytest.raises(ValueError):
        cb.project_harmonic(field(lambda x1, x2, th: np.cos(th)), -1)


def test_fiber_degrees():
    u = field(lambda x1, x2, th: np.cos(2 * th) + np.sin(x1) * np.sin(5 * th))
    assert cb.fiber_degrees(u) == [2, 5]
    assert cb.fiber_degrees(field(lambda x1, x2, th: 0 * th + 0 * x1)) == []


@settings(max_examples=10)
@given(seeds, st.integers(1, 5))
def test_x_plus_minus_split(conformal, seed, m):
    u = cb.random_field(np.random.default_rng(seed), GRID, degree=3, harmonic=m, count=5)
    plus, minus, zero = cb.x_plus_minus(u, conformal, m)
    assert (plus + minus + zero - cb.x_sigma(u, conformal)).max_abs() < 1e-11 * max(1.0, u.max_abs())
    assert cb.fiber_degrees(plus, tol=1e-22) == [m + 1]
    if m >= 1 and minus.max_abs() > 0:
        assert cb.fiber_degrees(minus, tol=1e-22) == [m - 1]
    assert set(cb.fiber_degrees(zero, tol=1e-22)) <= {m}


def test_x_zero_vanishes_without_field(flat):
    u = cb.random_field(np.random.default_rng(1), GRID, degree=3, harmonic=2, count=4)
    _, _, zero = cb.x_plus_minus(u, flat, 2)
    assert zero.max_abs() == 0.0


def test_x_plus_minus_requires_pure_degree(conformal):
    u = field(lambda x1, x2, th: np.cos(2 * th) + np.cos(3 * th))
    with pytest.raises(ValueError):
        cb.x_plus_minus(u, conformal, 2)


def test_omega_zero_term_vanishes_on_surfaces(conformal):
    # the normal block of Ω⁰ is 1x1 and skew, so the magnetic gradient equals H u
    u = cb.random_field(np.random.default_rng(5), GRID, degree=3, fiber_degree=4, count=5)
    diff = cb.magnetic_horizontal_gradient(u, conformal) - cb.horizontal_derivative(u, conformal)
    assert diff.max_abs() == 0.0


# curvature term


def test_tangential_curvature_paths_agree(conformal):
    closed = cb.tangential_curvature_closed(conformal)
    frame = cb.tangential_curvature_frame(cb.surface_geometry(conformal.system, cb.SurfaceGrid((8, 8, 8))))
    closed8 = cb.tangential_curvature_closed(conformal.system, cb.SurfaceGrid((8, 8, 8)))
    assert np.abs(frame - closed8).max() < 1e-10
    assert closed.shape == GRID.shape


def test_constant_field_curvature_is_b_squared():
    S = systems.builtin("constant-field", b=0.7)
    M = cb.tangential_curvature_closed(S, cb.SurfaceGrid((8, 8, 8)))
    assert np.allclose(M, 0.49, atol=1e-14)


# Pestov identity


def test_pestov_terms_vanish_on_constants(conformal):
    one = field(lambda x1, x2, th: np.ones_like(x1 + x2 + th))
    report = cb.pestov_residual(one, conformal, frame_check=False)
    assert all(v == 0 for v in report.terms.values())
    assert report.relative == 0.0


def test_pestov_flat(flat):
    u = cb.random_field(np.random.default_rng(2), GRID, degree=3, fiber_degree=3, count=6)
    assert cb.pestov_residual(u, flat, frame_check=False).relative < 1e-10


@settings(max_examples=4)
@given(seeds)
def test_pestov_conformal_both_curvature_paths(conformal, seed):
    u = cb.random_field(np.random.default_rng(seed), GRID, degree=3, fiber_degree=3, count=6)
    report = cb.pestov_residual(u, conformal)
    assert report.relative < 1e-8
    assert report.relative_frame < 1e-8
    assert set(report.to_dict()) >= {"residual", "relative", "curvature_frame", "grid"}


def test_pestov_field_terms_scale_quadratically():
    # with b = λ b₀ every Pestov term is a quadratic polynomial in λ
    u = cb.random_field(np.random.default_rng(4), GRID, degree=2, fiber_degree=2, count=4)

    def terms(lam):
        b = TrigPoly.from_terms(2, [((1, 0), 0.0, 0.3 * lam)], const=0.5 * lam)
        return cb.pestov_residual(u, systems.conformal_t2(b=b), frame_check=False).terms

    samples = [terms(lam) for lam in (0.0, 1.0, 2.0, 3.0)]
    for key in ("vertical_of_flow", "flow", "curvature"):
        f = [t[key] for t in samples]
        second = [f[0] - 2 * f[1] + f[2], f[1] - 2 * f[2] + f[3]]
        assert abs(second[0] - second[1]) < 1e-9 * max(1.0, max(abs(x) for x in f))
    assert abs(samples[0]["curvature"] - samples[1]["curvature"]) > 1e-3


def test_band_limit_is_enforced():
    coarse = cb.SurfaceGrid((12, 12, 12))
    u = field(lambda x1, x2, th: np.cos(5 * x1) * np.cos(th), coarse)
    with pytest.raises(cb.AliasingError):
        cb.pestov_residual(u, systems.builtin("flat-t2"), frame_check=False)
    cb.check_band_limit(field(lambda x1, x2, th: np.cos(3 * x1) * np.cos(th), coarse))


# localized identity


@pytest.mark.parametrize("m", [2, 3, 4])
def test_localized_identity(conformal, m):
    u = cb.random_field(np.random.default_rng(10 + m), GRID, degree=3, harmonic=m, count=5)
    report = cb.localized_pestov_residual(u, conformal, m)
    assert report.relative < 1e-8
    assert report.orthogonality < 1e-10
    assert report.divergence < 1e-10
    assert report.to_dict()["m"] == m


def test_localized_without_field():
    G = cb.surface_geometry(systems.conformal_t2(b=TrigPoly.constant(2, 0.0)), GRID)
    u = cb.random_field(np.random.default_rng(7), GRID, degree=3, harmonic=2, count=5)
    report = cb.localized_pestov_residual(u, G, 2)
    assert report.terms["field"] == 0.0
    assert report.relative < 1e-8


def test_localized_constant_field():
    G = cb.surface_geometry(systems.builtin("constant-field", b=1.3), GRID)
    u = cb.random_field(np.random.default_rng(8), GRID, degree=3, harmonic=3, count=5)
    assert cb.localized_pestov_residual(u, G, 3).relative < 1e-8


@settings(max_examples=6)
@given(seeds, st.integers(2, 4))
def test_gradient_decomposition(conformal, seed, m):
    u = cb.random_field(np.random.default_rng(seed), GRID, degree=3, harmonic=m, count=5)
    a, c, d, z = cb.gradient_decomposition(u, conformal, m)
    total = cb.magnetic_horizontal_gradient(u, conformal)
    assert (a + c + d + z - total).max_abs() < 1e-11 * max(1.0, total.max_abs())
    assert d.max_abs() == 0.0
    norms = [np.sqrt(cb.norm2(p, conformal)) for p in (a, c, z)]
    for (p, q), (i, j) in zip([(a, c), (a, z), (c, z)], [(0, 1), (0, 2), (1, 2)]):
        assert abs(cb.inner(p, q, conformal)) < 1e-10 * max(1.0, norms[i] * norms[j])


def test_localized_rejects_low_degree(conformal):
    u = cb.random_field(np.random.default_rng(0), GRID, degree=2, harmonic=1, count=3)
    with pytest.raises(ValueError):
        cb.localized_pestov_residual(u, conformal, 1)
    with pytest.raises(ValueError):
        cb.gradient_decomposition(u, conformal, 1)


def test_localized_rejects_mixed_degree(conformal):
    u = cb.random_field(np.random.default_rng(0), GRID, degree=2, fiber_degree=4, count=6)
    with pytest.raises(ValueError):
        cb.localized_pestov_residual(u, conformal, 2)
