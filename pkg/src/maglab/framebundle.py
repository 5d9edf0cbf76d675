"""Orthonormal frame bundle in chart coordinates.

A frame point is a pair ``(p, W)`` where the columns of ``W`` are
g-orthonormal. Vector fields on FM are evaluation maps returning
``(base velocity, frame velocity)``; they are defined on all pairs, not only on
the constraint set, which is what the finite-difference bracket needs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm, sqrtm

from . import liealg
from .manifold import MagneticSystem, christoffel, connection_matrix
from .systems import sample_point
from .magtensor import contorsion_matrix, frame_omega, omega_tilde, omega_zero  # noqa: F401

Tangent = tuple[np.ndarray, np.ndarray]
FMVectorField = Callable[["FramePoint"], Tangent]


@dataclass(frozen=True)
class FramePoint:
    p: np.ndarray
    W: np.ndarray

    @property
    def n(self) -> int:
        return self.p.size

    def shifted(self, dp, dW, step: float) -> "FramePoint":
        return FramePoint(self.p + step * dp, self.W + step * dW)

    def rotated(self, R) -> "FramePoint":
        """Right action by an orthogonal matrix."""
        return FramePoint(self.p, self.W @ R)

    def orthonormality_error(self, system: MagneticSystem) -> float:
        g = system.metric.g(self.p)
        return float(np.abs(self.W.T @ g @ self.W - np.eye(self.n)).max())


def orthonormalize(system: MagneticSystem, p, W) -> np.ndarray:
    """Polar projection of ``W`` onto g-orthonormal frames: ``W (Wᵀ g W)^{-1/2}``."""
    gram = W.T @ system.metric.g(p) @ W
    vals, vecs = np.linalg.eigh(gram)
    return W @ (vecs / np.sqrt(vals)) @ vecs.T


def random_rotation(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def frame_at(system: MagneticSystem, p, R=None) -> FramePoint:
    """Frame ``g^{-1/2} R`` at ``p`` (identity rotation by default)."""
    p = np.asarray(p, dtype=float)
    g = system.metric.g(p)
    root = np.real(sqrtm(np.linalg.inv(g)))
    R = np.eye(system.n) if R is None else R
    return FramePoint(p, root @ R)


def random_frame(system: MagneticSystem, rng: np.random.Generator) -> FramePoint:
    return frame_at(system, sample_point(system, rng), random_rotation(rng, system.n))


def fundamental_field(xi) -> FMVectorField:
    """``Y_ξ``: rotate the frame on the right, ``Ẇ = W ξ``."""
    xi = np.asarray(xi, dtype=float)

    def field(w: FramePoint) -> Tangent:
        return np.zeros_like(w.p), w.W @ xi

    return field


def varying_fundamental_field(xi_of: Callable[[FramePoint], np.ndarray]) -> FMVectorField:
    """``Y_{ξ(w)}`` for a skew-matrix-valued function on FM."""

    def field(w: FramePoint) -> Tangent:
        return np.zeros_like(w.p), w.W @ xi_of(w)

    return field


def standard_field(system: MagneticSystem, x) -> FMVectorField:
    """``B_x``: move along ``W x`` and parallel-transport every column."""
    x = np.asarray(x, dtype=float)

    def field(w: FramePoint) -> Tangent:
        v = w.W @ x
        gz = connection_matrix(christoffel(system.metric, w.p), v)
        return v, -gz @ w.W

    return field


def magnetic_standard_field(system: MagneticSystem, x) -> FMVectorField:
    """``B^σ_x = B_x - Y_{T_x}``."""
    x = np.asarray(x, dtype=float)
    base = standard_field(system, x)

    def field(w: FramePoint) -> Tangent:
        dp, dW = base(w)
        T = contorsion_matrix(frame_omega(system, w), x)
        return dp, dW - w.W @ T

    return field


def magnetic_generator(system: MagneticSystem) -> FMVectorField:
    """``X^σ = B_{e₁} + Y_{Ω̃}``, generator of the magnetic frame flow."""
    e1 = liealg.basis_vector(system.n, 0)
    base = standard_field(system, e1)

    def field(w: FramePoint) -> Tangent:
        dp, dW = base(w)
        return dp, dW + w.W @ omega_tilde(frame_omega(system, w))

    return field


def combine(*terms: tuple[float, FMVectorField]) -> FMVectorField:
    """Linear combination of fields with constant coefficients."""

    def field(w: FramePoint) -> Tangent:
        dp = np.zeros_like(w.p)
        dW = np.zeros_like(w.W)
        for c, f in terms:
            a, b = f(w)
            dp = dp + c * a
            dW = dW + c * b
        return dp, dW

    return field


def directional_derivative(V: FMVectorField, w: FramePoint, direction: Tangent, h: float) -> Tangent:
    """Central difference of ``V`` along ``direction`` in the ambient coordinates (p, W)."""
    dp, dW = direction
    a_plus, b_plus = V(w.shifted(dp, dW, h))
    a_minus, b_minus = V(w.shifted(dp, dW, -h))
    return (a_plus - a_minus) / (2 * h), (b_plus - b_minus) / (2 * h)


def fd_bracket(U: FMVectorField, V: FMVectorField, w: FramePoint, h: float = 1e-5) -> Tangent:
    """``[U, V](w) = DV·U - DU·V`` with central-difference Jacobians of step ``h``."""
    if not h > 1e-12:
        raise ValueError(f"bracket step {h} underflows")
    u = U(w)
    v = V(w)
    dv_u = directional_derivative(V, w, u, h)
    du_v = directional_derivative(U, w, v, h)
    return dv_u[0] - du_v[0], dv_u[1] - du_v[1]


def decompose_fm_vector(system: MagneticSystem, w: FramePoint, Z: Tangent) -> tuple[float, np.ndarray, np.ndarray]:
    """Write ``Z = c X^σ + B^σ_h + Y_ξ`` with ``h ⊥ e₁``; returns ``(c, h[1:], ξ)``."""
    dp, dW = Z
    g = system.metric.g(w.p)
    if np.linalg.cond(w.W) > 1e8:
        raise np.linalg.LinAlgError("frame is ill-conditioned")
    coords = w.W.T @ g @ dp
    b_p, b_W = magnetic_standard_field(system, coords)(w)
    vertical = dW - b_W
    xi = liealg.skew_part(w.W.T @ g @ vertical)
    return float(coords[0]), coords[1:], xi


def flow_fundamental(w: FramePoint, xi, t: float) -> FramePoint:
    return FramePoint(w.p.copy(), w.W @ expm(t * np.asarray(xi)))
