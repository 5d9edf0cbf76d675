"""Closed-form magnetic tensors pulled back to a frame.

Everything here works in frame components: vectors are in R^n with e₁ the
velocity, endomorphisms are n×n matrices. ``CurvatureSample`` caches the
frame data at one point of FM; the functions below are pure algebra on it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.stats import qmc

from . import liealg
from .liealg import perp, wedge
from .manifold import MagneticSystem, contract_first, local_geometry, pull_back

if TYPE_CHECKING:
    from .framebundle import FramePoint


def frame_omega(system: MagneticSystem, w: "FramePoint") -> np.ndarray:
    """Frame components ``W⁻¹ Ω W = -Wᵀ σ W`` of the Lorentz endomorphism."""
    return -(w.W.T @ system.sigma_at(w.p) @ w.W)


def omega_zero(omega) -> np.ndarray:
    """``Ω⁰ = ½ (Ω - e₁ ∧ Ω e₁)``; batches along leading axes."""
    omega = np.asarray(omega, dtype=float)
    e1 = liealg.basis_vector(omega.shape[-1], 0)
    return 0.5 * (omega - wedge(e1, omega[..., :, 0]))


def omega_tilde(omega) -> np.ndarray:
    """``Ω̃ = e₁ ∧ Ω e₁ + Ω⁰``, the lift used by the magnetic frame flow."""
    omega = np.asarray(omega, dtype=float)
    e1 = liealg.basis_vector(omega.shape[-1], 0)
    return wedge(e1, omega[..., :, 0]) + omega_zero(omega)


def contorsion_matrix(omega, x) -> np.ndarray:
    """``-<x, e₁> Ω⁰ + ½ (Ω e₁ ∧ x - e₁ ∧ Ω x)``; linear in ``omega`` and in ``x``.

    Both arguments batch along broadcast-compatible leading axes.
    """
    omega = np.asarray(omega, dtype=float)
    x = np.asarray(x, dtype=float)
    e1 = liealg.basis_vector(omega.shape[-1], 0)
    ox = (omega @ x[..., None])[..., 0]
    xs = np.broadcast_to(x, ox.shape)
    return (-x[..., 0, None, None] * omega_zero(omega)
            + 0.5 * (wedge(np.broadcast_to(omega[..., :, 0], ox.shape), xs)
                     - wedge(np.broadcast_to(e1, ox.shape), ox)))


@dataclass(frozen=True)
class CurvatureSample:
    """Frame-pulled tensors at a frame point.

    Attributes
    ----------
    riemann : (n, n, n, n) array
        ``riemann[l, i, j, k]`` is the l-th component of R(e_i, e_j) e_k.
    omega : (n, n) array
        Lorentz endomorphism in the frame.
    nabla : (n, n, n) array
        ``nabla[k]`` is the frame matrix of ∇_{w(e_k)} Ω, i.e. ``B_{e_k} Ω``.
    dsigma : (n, n, n) array
        ``dσ(w e_a, w e_b, w e_c)`` from coordinate derivatives of σ.
    """

    w: "FramePoint"
    riemann: np.ndarray
    omega: np.ndarray
    nabla: np.ndarray
    dsigma: np.ndarray

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    @property
    def e1(self) -> np.ndarray:
        return liealg.basis_vector(self.n, 0)

    def riemann_op(self, x, y) -> np.ndarray:
        return np.einsum("lijk,i,j->lk", self.riemann, x, y)

    def nabla_along(self, x) -> np.ndarray:
        return np.einsum("kij,k->ij", self.nabla, x)


def curvature_sample(system: MagneticSystem, w: "FramePoint") -> CurvatureSample:
    W = w.W
    L = local_geometry(system, w.p)
    Winv = W.T @ L.g
    riem = pull_back(L.riemann, Winv.T, W, W, W)

    # ∇Ω along each W e_k, stacked on the leading axis
    d_along = contract_first(W.T, L.d_omega)
    g_along = contract_first(W.T, L.christoffel.transpose(1, 0, 2))
    nab = Winv @ (d_along + g_along @ L.omega - L.omega @ g_along) @ W

    ds = L.dsigma
    frame_ds = pull_back(ds + ds.transpose(2, 0, 1) + ds.transpose(1, 2, 0), W, W, W)
    return CurvatureSample(w, riem, Winv @ L.omega @ W, nab, frame_ds)


def contorsion(C: CurvatureSample, x) -> np.ndarray:
    return contorsion_matrix(C.omega, x)


def torsion(C: CurvatureSample, x, y) -> np.ndarray:
    """``-½ [(x ∧ y) Ω e₁]^⊥ + <Ω x, y> e₁``; ``x`` and ``y`` may carry leading batch axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    om = C.omega
    pair = np.sum((x @ om.T) * y, axis=-1)
    return -0.5 * perp(wedge(x, y) @ om[:, 0]) + pair[..., None] * C.e1


def derivative_of_contorsion(C: CurvatureSample, x, y) -> np.ndarray:
    """``B_x T_y``: the contorsion formula applied to ``B_x Ω``."""
    return contorsion_matrix(C.nabla_along(x), y)


def curvature(C: CurvatureSample, x, y) -> np.ndarray:
    """Magnetic curvature ``R^σ(x, y)`` as a skew matrix."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    om = C.omega
    om2 = om @ om
    e1 = C.e1
    quarter = (np.dot(om @ e1, om @ e1) * wedge(perp(x), perp(y))
               + wedge(perp(om2 @ x), y)
               + wedge(x, perp(om2 @ y))
               - wedge(om @ x, om @ y)
               - 2 * float(om @ x @ y) * om)
    return (C.riemann_op(x, y)
            + derivative_of_contorsion(C, x, y) - derivative_of_contorsion(C, y, x)
            + 0.25 * quarter)


def _normal(z, n) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.size == n - 1:
        return np.concatenate([[0.0], z])
    if z.size == n and abs(z[0]) <= 1e-10:
        return perp(z)
    raise ValueError("expected a vector orthogonal to e1")


def tangential_curvature(C: CurvatureSample, z) -> np.ndarray:
    """``M^σ z`` for a normal vector ``z`` given by its n-1 components."""
    n = C.n
    x = _normal(z, n)
    e1 = C.e1
    om = C.omega
    flow_derivative = C.nabla[0]
    out = (C.riemann_op(x, e1) @ e1
           - C.nabla_along(x) @ e1
           + 0.5 * perp(flow_derivative @ x)
           + 0.75 * float(om @ e1 @ x) * (om @ e1)
           - 0.25 * perp(om @ om @ x))
    return out[1:]


def tangential_matrix(C: CurvatureSample) -> np.ndarray:
    """Matrix of ``M^σ`` on the normal space."""
    om = C.omega
    om_e1 = om[:, 0]
    # columns indexed by the normal basis vectors e_2 .. e_n
    full = (C.riemann[:, 1:, 0, 0]
            - C.nabla[1:, :, 0].T
            + 0.75 * np.outer(om_e1, om_e1[1:]))
    full[1:] += 0.5 * C.nabla[0][1:, 1:] - 0.25 * (om @ om)[1:, 1:]
    return full[1:]


def sec_sigma(C: CurvatureSample, x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    area2 = np.dot(x, x) * np.dot(y, y) - np.dot(x, y) ** 2
    if area2 <= 1e-16:
        raise ValueError("degenerate plane")
    return float(curvature(C, x, y) @ y @ x / area2)


def d_omega_from_nabla(C: CurvatureSample, x, y, z) -> float:
    """``<(B_x Ω) y, z> + <(B_y Ω) z, x> + <(B_z Ω) x, y>``."""
    return float(C.nabla_along(x) @ y @ z + C.nabla_along(y) @ z @ x + C.nabla_along(z) @ x @ y)


def d_omega(C: CurvatureSample, x, y, z) -> float:
    """dσ on frame vectors from the coordinate derivatives of σ."""
    return float(np.einsum("ijk,i,j,k->", C.dsigma, x, y, z))


def bianchi_pair(C: CurvatureSample, x, y, z, flip_derivative_terms: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic sum of ``R^σ(x, y) z`` and its closed-form remainder.

    The remainder is ``dσ(x,y,z) e₁ + 𝔖[¼ <x∧z, e₁∧Ω²e₁> y - ½ <(XΩ) z, x> y^⊥
    + ½ dσ(x,e₁,z) y^⊥]``. ``flip_derivative_terms`` negates the last two
    terms; that variant agrees with the left side only when ∇Ω = 0 and is
    kept so the discrepancy can be measured.
    """
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    lhs = curvature(C, x, y) @ z + curvature(C, y, z) @ x + curvature(C, z, x) @ y
    e1 = C.e1
    om = C.omega
    e1_om2 = wedge(e1, om @ om @ e1)
    flow_derivative = C.nabla[0]
    sign = -1.0 if flip_derivative_terms else 1.0

    def term(a, b, c):
        return (0.25 * liealg.skew_inner(wedge(a, c), e1_om2) * b
                - sign * 0.5 * float(flow_derivative @ c @ a) * perp(b)
                + sign * 0.5 * d_omega(C, a, e1, c) * perp(b))

    rhs = d_omega(C, x, y, z) * e1 + term(x, y, z) + term(y, z, x) + term(z, x, y)
    return lhs, rhs


def constant_curvature_operator(a, b, c) -> np.ndarray:
    """``G(a, b) c = (a ∧ b) c``; the curvature of constant sectional curvature -1."""
    return wedge(a, b) @ c


def pinched_decomposition(C: CurvatureSample, K: float, delta: float, a, b, c, d) -> float:
    """``R^σ₀(a, b, c, d) = <R^σ(a, b) c, d> - K(1+δ)/2 <G(a, b) c, d>``."""
    if K <= 0 or not 0 < delta <= 1:
        raise ValueError("need K > 0 and 0 < delta <= 1")
    return float(curvature(C, a, b) @ c @ d
                 - 0.5 * K * (1 + delta) * (constant_curvature_operator(a, b, c) @ d))


def decomposition_gap(C: CurvatureSample, K: float, delta: float, a, b, c, d) -> float:
    """``|R₀ - ⅓ 𝔖 R₀| - 2K(1-δ)/3``; non-positive when the pinching bound holds."""
    r0 = pinched_decomposition(C, K, delta, a, b, c, d)
    cyc = (r0 + pinched_decomposition(C, K, delta, b, c, a, d)
           + pinched_decomposition(C, K, delta, c, a, b, d))
    return abs(r0 - cyc / 3) - 2 * K * (1 - delta) / 3


def plane_mesh(n: int, size: int = 2000) -> np.ndarray:
    """Deterministic orthonormal pairs spanning 2-planes, shape ``(size, 2, n)``.

    In dimension 3 planes are the orthogonal complements of a Fibonacci
    sphere; in higher dimension a scrambled-free Sobol sequence is pushed
    through the normal quantile and orthonormalised.
    """
    if n == 2:
        return np.eye(2)[None]
    pairs = []
    if n == 3:
        i = np.arange(size) + 0.5
        zc = 1 - 2 * i / size
        theta = np.pi * (1 + 5 ** 0.5) * i
        normals = np.column_stack([np.sqrt(1 - zc ** 2) * np.cos(theta),
                                   np.sqrt(1 - zc ** 2) * np.sin(theta), zc])
        for nv in normals:
            q, _ = np.linalg.qr(np.column_stack([nv, np.eye(3)]))
            pairs.append(q[:, 1:3].T)
        return np.array(pairs)
    from scipy.special import ndtri
    pts = qmc.Sobol(2 * n, scramble=False).random(size + 1)[1:]
    gauss = ndtri(np.clip(pts, 1e-12, 1 - 1e-12))
    for row in gauss:
        q, _ = np.linalg.qr(row.reshape(2, n).T)
        pairs.append(q.T)
    return np.array(pairs)


@dataclass(frozen=True)
class PinchingEstimate:
    K: float
    delta: float
    sec_min: float
    sec_max: float

    @property
    def pinched(self) -> bool:
        return self.sec_max < 0


def estimate_pinching(C: CurvatureSample, mesh_size: int = 2000) -> PinchingEstimate:
    """Range of sec^σ over a plane mesh, read as ``[-K, -K δ]``."""
    values = np.array([sec_sigma(C, a, b) for a, b in plane_mesh(C.n, mesh_size)])
    lo, hi = float(values.min()), float(values.max())
    K = -lo
    delta = hi / lo if lo < 0 and hi < 0 else 0.0
    return PinchingEstimate(K, delta, lo, hi)
