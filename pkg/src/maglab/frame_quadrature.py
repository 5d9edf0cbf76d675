"""Weak operator identities on the frame bundle of a flat 3-torus.

FM(T³) with the flat metric is ``T³ × SO(3)``; the Liouville measure is the
product of the torus volume and Haar measure. Integrals use a uniform torus
grid times the Euler-angle Haar rule, exact for trigonometric polynomials in
the base and polynomials in the frame entries of moderate degree.

Vector fields are given by their velocity ``(dp, dW)`` at a batch of points;
test functions are polynomial in the frame entries, so their derivative along
a tangent vector is the ambient directional derivative.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .liealg import wedge
from .magtensor import contorsion_matrix, omega_tilde, omega_zero
from .manifold import MagneticSystem, christoffel
from .reptheory import haar_so3
from .systems import TWO_PI


@dataclass
class FrameGrid:
    """Product quadrature on ``T³ × SO(3)``; arrays have shape ``(base, fiber, ...)``."""

    p: np.ndarray
    W: np.ndarray
    weights: np.ndarray
    sigma: np.ndarray

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values * self.weights))

    @property
    def omega(self) -> np.ndarray:
        """Frame components ``-Wᵀ σ W`` at every point."""
        return -np.einsum("...ai,...ab,...bj->...ij", self.W, self.sigma, self.W)


def frame_grid(system: MagneticSystem, base_points: int = 6, resolution: int = 6) -> FrameGrid:
    if system.n != 3 or system.params.get("domain") != "torus":
        raise ValueError("frame quadrature is set up on T³ systems")
    x = TWO_PI * np.arange(base_points) / base_points
    P = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1).reshape(-1, 3)
    if np.abs(christoffel(system.metric, P[1])).max() > 1e-12:
        raise ValueError("frame quadrature needs the flat metric")
    rule = haar_so3(resolution)
    sig = np.array([system.sigma_at(p) for p in P])
    nb, nf = len(P), len(rule.weights)
    weights = np.outer(np.full(nb, TWO_PI ** 3 / nb), rule.weights)
    return FrameGrid(np.broadcast_to(P[:, None, :], (nb, nf, 3)),
                     np.broadcast_to(rule.points[None], (nb, nf, 3, 3)), weights,
                     np.broadcast_to(sig[:, None], (nb, nf, 3, 3)))


# velocity fields (dp, dW) as functions of the grid


def vertical(xi: np.ndarray) -> Callable:
    """``Y_ξ`` for a (possibly point-dependent) ξ in so(3)."""
    return lambda G: (np.zeros_like(G.p), G.W @ xi(G) if callable(xi) else G.W @ xi)


def standard(x: np.ndarray) -> Callable:
    """``B_x`` for the flat metric."""
    return lambda G: (G.W @ x, np.zeros_like(G.W))


def magnetic_standard(x: np.ndarray) -> Callable:
    """``B^σ_x = B_x - Y_{T_x}``."""
    def field(G):
        om = G.omega
        T = contorsion_matrix(om, x)
        return G.W @ x, -G.W @ T
    return field


def magnetic_generator() -> Callable:
    """``X^σ = B_{e₁} + Y_{Ω̃}``."""
    e1 = np.eye(3)[0]

    def field(G):
        return G.W @ e1, G.W @ omega_tilde(G.omega)
    return field


def omega_zero_field(G: FrameGrid) -> np.ndarray:
    return omega_zero(G.omega)


def field_pair_matrix(G: FrameGrid) -> np.ndarray:
    """``e₁ ∧ Ω e₁`` at every point."""
    om = G.omega
    return wedge(np.broadcast_to(np.eye(3)[0], om.shape[:-1]), om[..., :, 0])


@dataclass
class FrameTestFunction:
    """``Σ_t cos(k_t·p + φ_t) (a_t + A_t:W + (B_t:W)(C_t:W))``."""

    waves: np.ndarray
    phases: np.ndarray
    const: np.ndarray
    lin: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __call__(self, p: np.ndarray, W: np.ndarray) -> np.ndarray:
        base = np.cos(p @ self.waves.T + self.phases)
        lin = np.einsum("tij,...ij->...t", self.lin, W)
        quad = np.einsum("tij,...ij->...t", self.left, W) * np.einsum("tij,...ij->...t", self.right, W)
        return np.sum(base * (self.const + lin + quad), axis=-1)


def random_test_function(rng: np.random.Generator, terms: int = 3, degree: int = 1) -> FrameTestFunction:
    return FrameTestFunction(rng.integers(-degree, degree + 1, size=(terms, 3)),
                             rng.uniform(0, TWO_PI, terms), rng.standard_normal(terms),
                             rng.standard_normal((terms, 3, 3)), rng.standard_normal((terms, 3, 3)),
                             rng.standard_normal((terms, 3, 3)))


def derivative(f: Callable, field: Callable, G: FrameGrid, h: float = 1e-3) -> np.ndarray:
    """Directional derivative of ``f`` along ``field`` by a fourth-order stencil."""
    dp, dW = field(G)
    vals = [f(G.p + k * h * dp, G.W + k * h * dW) for k in (-2, -1, 1, 2)]
    return (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)


@dataclass
class WeakResidual:
    lhs: float
    rhs: float
    scale: float

    @property
    def relative(self) -> float:
        return abs(self.lhs - self.rhs) / max(self.scale, 1e-300)


def skew_adjointness(field: Callable, f, g, G: FrameGrid) -> WeakResidual:
    """``<U f, g>`` against ``-<f, U g>``."""
    a = G.integrate(derivative(f, field, G) * g(G.p, G.W))
    b = -G.integrate(f(G.p, G.W) * derivative(g, field, G))
    return WeakResidual(a, b, max(abs(a), abs(b)))


def structure_identity(f, g, G: FrameGrid, omega_zero_coeff: Optional[float] = None) -> WeakResidual:
    """Weak form of ``∇_V^*(e₁∧∇^σ_H) - (e₁∧∇^σ_H)^*∇_V = (n-1)X^σ + c Y_{Ω⁰} - Y_{e₁∧Ωe₁}``.

    ``c`` defaults to ``-(n+3)``. The left side pairs as
    ``Σ_j <B^σ_{e_j} f, Y_{e₁∧e_j} g> - <Y_{e₁∧e_j} f, B^σ_{e_j} g>``.
    """
    n = 3
    c = -(n + 3) if omega_zero_coeff is None else omega_zero_coeff
    e = np.eye(n)
    lhs = 0.0
    for j in range(1, n):
        B = magnetic_standard(e[j])
        Y = vertical(wedge(e[0], e[j]))
        lhs += G.integrate(derivative(f, B, G) * derivative(g, Y, G)
                           - derivative(f, Y, G) * derivative(g, B, G))
    gv = g(G.p, G.W)
    flow = G.integrate(derivative(f, magnetic_generator(), G) * gv)
    zero = G.integrate(derivative(f, vertical(omega_zero_field), G) * gv)
    pair = G.integrate(derivative(f, vertical(field_pair_matrix), G) * gv)
    rhs = (n - 1) * flow + c * zero - pair
    scale = max(abs(lhs), abs((n - 1) * flow), abs(c * zero), abs(pair))
    return WeakResidual(lhs, rhs, scale)
