import numpy as np
import pytest

from maglab import frame_quadrature as fq
from maglab import systems
from maglab.liealg import wedge


@pytest.fixture(scope="module")
def grid():
    return fq.frame_grid(systems.builtin("nonclosed-t3"))


@pytest.fixture(scope="module")
def pair():
    rng = np.random.default_rng(0)
    return fq.random_test_function(rng), fq.random_test_function(rng)


def test_grid_shapes_and_volume(grid):
    nb, nf = grid.weights.shape
    assert grid.p.shape == (nb, nf, 3) and grid.W.shape == (nb, nf, 3, 3)
    assert abs(grid.weights.sum() - (2 * np.pi) ** 3) < 1e-10


def test_grid_omega_is_skew(grid):
    om = grid.omega
    assert np.abs(om + np.swapaxes(om, -1, -2)).max() < 1e-14


def test_grid_rejects_other_systems():
    with pytest.raises(ValueError):
        fq.frame_grid(systems.builtin("kahler-t4"))
    with pytest.raises(ValueError):
        fq.frame_grid(systems.builtin("conformal-t3"))


def test_field_pair_matrix(grid):
    om = grid.omega[0, 0]
    expected = wedge(np.eye(3)[0], om[:, 0])
    assert np.allclose(fq.field_pair_matrix(grid)[0, 0], expected)


def test_derivative_along_vertical_matches_closed_form(grid):
    # f(W) = W[1, 2] has derivative (W ξ)[1, 2] along Y_ξ
    xi = wedge(np.eye(3)[0], np.eye(3)[2])
    d = fq.derivative(lambda p, W: W[..., 1, 2], fq.vertical(xi), grid)
    assert np.allclose(d, (grid.W @ xi)[..., 1, 2], atol=1e-10)


def test_integration_is_exact_for_torus_modes(grid):
    vals = np.cos(grid.p[..., 0] + 2 * grid.p[..., 2])
    assert abs(grid.integrate(vals)) < 1e-12


def test_flat_standard_field_is_skew_adjoint(grid, pair):
    f, g = pair
    for x in np.eye(3):
        r = fq.skew_adjointness(fq.standard(x), f, g, grid)
        assert abs(r.lhs - r.rhs) < 1e-9


@pytest.mark.parametrize("x", [np.eye(3)[0], np.eye(3)[1], np.array([0.3, 1.0, -0.5])])
def test_magnetic_standard_field_is_skew_adjoint(grid, pair, x):
    f, g = pair
    r = fq.skew_adjointness(fq.magnetic_standard(x), f, g, grid)
    assert r.scale > 1.0
    assert r.relative < 1e-9


def test_magnetic_generator_is_skew_adjoint(grid, pair):
    f, g = pair
    assert fq.skew_adjointness(fq.magnetic_generator(), f, g, grid).relative < 1e-9


def test_omega_zero_field_is_skew_adjoint(grid, pair):
    f, g = pair
    assert fq.skew_adjointness(fq.vertical(fq.omega_zero_field), f, g, grid).relative < 1e-9


def test_structure_identity_with_negative_coefficient(grid, pair):
    f, g = pair
    assert fq.structure_identity(f, g, grid).relative < 1e-9


def test_structure_identity_fails_with_positive_coefficient(grid, pair):
    f, g = pair
    assert fq.structure_identity(f, g, grid, omega_zero_coeff=6).relative > 1e-2


@pytest.mark.slow
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_structure_identity_random_seeds(grid, seed):
    rng = np.random.default_rng(seed)
    f, g = fq.random_test_function(rng), fq.random_test_function(rng)
    assert fq.structure_identity(f, g, grid).relative < 1e-9
