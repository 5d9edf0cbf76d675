"""Spectral calculus on the unit tangent bundle of a conformal 2-torus.

Points of SM are ``(x₁, x₂, θ)`` with ``v = e^{-φ}(cos θ, sin θ)``. Fields
live on a uniform periodic grid and are differentiated by FFT; integrals use
the trapezoidal rule against the Liouville measure ``e^{2φ} dx dθ``, which is
exact for the trigonometric polynomials used as test data.

Vector fields on SM used here:

* ``V = ∂_θ`` (vertical),
* ``X = e^{-φ}(cos θ ∂₁ + sin θ ∂₂ + (-sin θ φ₁ + cos θ φ₂) ∂_θ)`` (geodesic),
* ``H = [V, X]`` (horizontal),
* ``X^σ = X + b V`` (magnetic).

A normal field along ``v`` is stored by its single component on ``iv``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np

from .magtensor import curvature_sample, omega_zero, tangential_matrix
from .manifold import MagneticSystem
from .systems import TWO_PI, TrigPoly


class AliasingError(ValueError):
    """Raised when a field carries energy above the band limit of its grid."""


@dataclass(frozen=True)
class SurfaceGrid:
    shape: tuple = (64, 64, 64)

    def __post_init__(self):
        if len(self.shape) != 3 or min(self.shape) < 4:
            raise ValueError("grid needs three axes of at least 4 points")

    @cached_property
    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(TWO_PI * np.arange(N) / N for N in self.shape)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x1, x2, th = self.axes
        return x1[:, None, None], x2[None, :, None], th[None, None, :]

    @cached_property
    def base_points(self) -> np.ndarray:
        x1, x2, _ = self.axes
        return np.stack(np.meshgrid(x1, x2, indexing="ij"), axis=-1)

    def wavenumbers(self, axis: int) -> np.ndarray:
        N = self.shape[axis]
        k = np.fft.fftfreq(N, 1.0 / N)
        shape = [1, 1, 1]
        shape[axis] = N
        return k.reshape(shape)

    @property
    def cell_volume(self) -> float:
        return TWO_PI ** 3 / np.prod(self.shape)


@dataclass(frozen=True, eq=False)
class FiberField:
    """Real samples of a function on SM; Fourier coefficients are computed on demand."""

    values: np.ndarray
    grid: SurfaceGrid = field(default_factory=SurfaceGrid)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != tuple(self.grid.shape):
            raise ValueError(f"values of shape {vals.shape} do not match grid {self.grid.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @cached_property
    def coeffs(self) -> np.ndarray:
        return np.fft.fftn(self.values)

    def _wrap(self, values) -> "FiberField":
        return FiberField(values, self.grid)

    def __add__(self, other):
        return self._wrap(self.values + _vals(other))

    def __sub__(self, other):
        return self._wrap(self.values - _vals(other))

    def __mul__(self, other):
        return self._wrap(self.values * _vals(other))

    __rmul__ = __mul__
    __radd__ = __add__

    def __neg__(self):
        return self._wrap(-self.values)

    def __truediv__(self, c: float):
        return self._wrap(self.values / c)

    def max_abs(self) -> float:
        return float(np.abs(self.values).max())


def _vals(x):
    return x.values if isinstance(x, FiberField) else x


def spectral_derivative(u: FiberField, axis: int) -> FiberField:
    N = u.grid.shape[axis]
    k = u.grid.wavenumbers(axis).astype(complex)
    if N % 2 == 0:
        k[np.abs(k) == N // 2] = 0.0
    return u._wrap(np.fft.ifft(1j * k * np.fft.fft(u.values, axis=axis), axis=axis).real)


def vertical_derivative(u: FiberField) -> FiberField:
    return spectral_derivative(u, 2)


def check_band_limit(u: FiberField, tol: float = 1e-12) -> None:
    """Raise :class:`AliasingError` if modes above a third of the grid carry energy."""
    c = np.abs(u.coeffs) ** 2
    total = c.sum()
    if total == 0:
        return
    mask = np.zeros(c.shape, dtype=bool)
    for axis, N in enumerate(u.grid.shape):
        mask |= np.abs(u.grid.wavenumbers(axis)) > N / 3
    if c[mask].sum() > tol * total:
        raise AliasingError("field is not band-limited on this grid")


@dataclass
class SurfaceGeometry:
    """Conformal factor and field intensity sampled on a grid's base."""

    grid: SurfaceGrid
    system: MagneticSystem
    phi: np.ndarray
    dphi: np.ndarray
    lap_phi: np.ndarray
    b: np.ndarray
    db: np.ndarray

    @property
    def weight(self) -> np.ndarray:
        """Density of the Liouville measure, broadcast over the fiber."""
        return np.exp(2 * self.phi)[..., None]

    @property
    def gauss_curvature(self) -> np.ndarray:
        return -np.exp(-2 * self.phi) * self.lap_phi


def _conformal_factor(system: MagneticSystem):
    phi = system.params.get("phi")
    if phi is None:
        phi = TrigPoly.constant(2, 0.0)
    if not isinstance(phi, TrigPoly):
        raise ValueError("conformal factor must be a trigonometric polynomial")
    return phi


def surface_geometry(system: MagneticSystem, grid: Optional[SurfaceGrid] = None) -> SurfaceGeometry:
    """Sample φ and b on the base grid; ``b = σ₁₂ e^{-2φ}`` is read from the 2-form."""
    grid = grid or SurfaceGrid()
    if system.n != 2 or system.params.get("domain") != "torus":
        raise ValueError("circle-bundle calculus needs a magnetic system on T²")
    phi = _conformal_factor(system)
    pts = grid.base_points
    phi_vals = phi.value(pts)
    probe = pts[1, 2]
    if not np.allclose(system.metric.g(probe), np.exp(2 * phi.value(probe)) * np.eye(2), atol=1e-12):
        raise ValueError("metric is not e^{2φ} times the flat metric")
    sigma12 = np.array([[system.sigma_at(p)[0, 1] for p in row] for row in pts])
    b = sigma12 * np.exp(-2 * phi_vals)
    # b is a trigonometric polynomial on the builtins, so its spectral gradient is exact
    b_field = np.fft.fft2(b)
    k1 = np.fft.fftfreq(grid.shape[0], 1.0 / grid.shape[0])[:, None]
    k2 = np.fft.fftfreq(grid.shape[1], 1.0 / grid.shape[1])[None, :]
    db = np.stack([np.fft.ifft2(1j * k1 * b_field).real, np.fft.ifft2(1j * k2 * b_field).real], axis=-1)
    hess = phi.hess(pts)
    return SurfaceGeometry(grid, system, phi_vals, phi.grad(pts), hess[..., 0, 0] + hess[..., 1, 1], b, db)


Surface = Union[MagneticSystem, SurfaceGeometry]


def _geometry(S: Surface, grid: SurfaceGrid) -> SurfaceGeometry:
    if isinstance(S, SurfaceGeometry):
        if S.grid != grid:
            raise ValueError("field and geometry live on different grids")
        return S
    return surface_geometry(S, grid)


def _trig(grid: SurfaceGrid):
    th = grid.mesh[2]
    return np.cos(th), np.sin(th)


def geodesic_derivative(u: FiberField, S: Surface) -> FiberField:
    """``X u``."""
    G = _geometry(S, u.grid)
    c, s = _trig(u.grid)
    p1, p2 = G.dphi[..., 0:1], G.dphi[..., 1:2]
    vals = (c * spectral_derivative(u, 0).values + s * spectral_derivative(u, 1).values
            + (-s * p1 + c * p2) * vertical_derivative(u).values)
    return u._wrap(np.exp(-G.phi)[..., None] * vals)


def horizontal_derivative(u: FiberField, S: Surface) -> FiberField:
    """``H u`` with ``H = [V, X]``."""
    G = _geometry(S, u.grid)
    c, s = _trig(u.grid)
    p1, p2 = G.dphi[..., 0:1], G.dphi[..., 1:2]
    vals = (-s * spectral_derivative(u, 0).values + c * spectral_derivative(u, 1).values
            - (c * p1 + s * p2) * vertical_derivative(u).values)
    return u._wrap(np.exp(-G.phi)[..., None] * vals)


def field_term(u: FiberField, S: Surface) -> FiberField:
    """``(Ω v)^∨ u = b ∂_θ u``."""
    G = _geometry(S, u.grid)
    return vertical_derivative(u) * G.b[..., None]


def x_sigma(u: FiberField, S: Surface) -> FiberField:
    """``X^σ u = X u + b ∂_θ u``."""
    G = _geometry(S, u.grid)
    return geodesic_derivative(u, G) + field_term(u, G)


def project_harmonic(u: FiberField, m: int) -> FiberField:
    """Keep the fiber Fourier modes ``±m``."""
    if m < 0:
        raise ValueError("degree must be non-negative")
    k = np.abs(u.grid.wavenumbers(2))
    coeffs = np.fft.fft(u.values, axis=2) * (k == m)
    return u._wrap(np.fft.ifft(coeffs, axis=2).real)


def fiber_degrees(u: FiberField, tol: float = 1e-10) -> list[int]:
    """Fiber degrees carrying a share of the L² mass above ``tol``."""
    energy = (np.abs(np.fft.fft(u.values, axis=2)) ** 2).sum(axis=(0, 1))
    total = energy.sum()
    if total == 0:
        return []
    k = np.abs(np.fft.fftfreq(u.grid.shape[2], 1.0 / u.grid.shape[2])).astype(int)
    per = np.bincount(k, weights=energy)
    return [int(m) for m in np.nonzero(per > tol * total)[0]]


def _require_degree(u: FiberField, m: int, tol: float = 1e-10) -> None:
    leak = u - project_harmonic(u, m)
    if leak.max_abs() > tol * max(1.0, u.max_abs()):
        raise ValueError(f"field is not a pure fiber harmonic of degree {m}")


def x_plus_minus(u: FiberField, S: Surface, m: int) -> tuple[FiberField, FiberField, FiberField]:
    """Split ``X^σ u`` for ``u ∈ H^m`` into ``(X₊u, X₋u, X₀u)`` of degrees m+1, m-1, m."""
    _require_degree(u, m)
    G = _geometry(S, u.grid)
    xu = x_sigma(u, G)
    minus = project_harmonic(xu, m - 1) if m >= 1 else u._wrap(np.zeros(u.grid.shape))
    return project_harmonic(xu, m + 1), minus, field_term(u, G)


def inner(u: FiberField, w: FiberField, S: Surface) -> float:
    """L² pairing against the Liouville measure."""
    G = _geometry(S, u.grid)
    return float(np.sum(u.values * w.values * G.weight) * u.grid.cell_volume)


def norm2(u: FiberField, S: Surface) -> float:
    return inner(u, u, S)


def _normal_block(omega: np.ndarray) -> np.ndarray:
    return omega_zero(omega)[1:, 1:]


def magnetic_horizontal_gradient(u: FiberField, S: Surface) -> FiberField:
    """``∇^σ_H u = ∇_H u - Ω⁰ ∇_V u``, as the component on ``iv``.

    In the frame ``(v, iv)`` the Lorentz endomorphism is ``b`` times the
    rotation by +90°; its Ω⁰ part is built with the general formula and its
    restriction to the one-dimensional normal space applied to ``∇_V u``.
    """
    G = _geometry(S, u.grid)
    rotation = np.array([[0.0, -1.0], [1.0, 0.0]])
    unit = _normal_block(rotation)[0, 0]
    return horizontal_derivative(u, G) - vertical_derivative(u) * (unit * G.b[..., None])


def tangential_curvature_closed(S: Surface, grid: Optional[SurfaceGrid] = None) -> np.ndarray:
    """``M^σ = K - db(iv) + b²`` on the full grid."""
    G = _geometry(S, grid or (S.grid if isinstance(S, SurfaceGeometry) else SurfaceGrid()))
    c, s = _trig(G.grid)
    db_iv = np.exp(-G.phi)[..., None] * (-s * G.db[..., 0:1] + c * G.db[..., 1:2])
    return (G.gauss_curvature + G.b ** 2)[..., None] - db_iv


def tangential_curvature_frame(S: Surface, grid: Optional[SurfaceGrid] = None) -> np.ndarray:
    """``M^σ`` from frame-bundle contractions, resampled on the grid.

    ``M^σ`` is a trigonometric polynomial of degree two in θ, so five equispaced
    fiber samples per base point determine it exactly.
    """
    G = _geometry(S, grid or (S.grid if isinstance(S, SurfaceGeometry) else SurfaceGrid()))
    from .framebundle import FramePoint

    samples = 5
    angles = TWO_PI * np.arange(samples) / samples
    N1, N2, Nt = G.grid.shape
    values = np.empty((N1, N2, samples))
    for i in range(N1):
        for j in range(N2):
            p = G.grid.base_points[i, j]
            scale = np.exp(-G.phi[i, j])
            for a, t in enumerate(angles):
                c, s = np.cos(t), np.sin(t)
                W = scale * np.array([[c, -s], [s, c]])
                values[i, j, a] = tangential_matrix(curvature_sample(G.system, FramePoint(p, W)))[0, 0]
    coeffs = np.fft.fft(values, axis=2) / samples
    th = G.grid.axes[2]
    out = np.real(coeffs[..., 0:1]) * np.ones(Nt)
    for k in (1, 2):
        out = out + 2 * np.real(coeffs[..., k:k + 1] * np.exp(1j * k * th))
    return out


@dataclass
class PestovReport:
    terms: dict
    residual: float
    residual_frame: Optional[float]
    scale: float
    grid: tuple

    @property
    def relative(self) -> float:
        return abs(self.residual) / max(self.scale, 1e-300)

    @property
    def relative_frame(self) -> Optional[float]:
        if self.residual_frame is None:
            return None
        return abs(self.residual_frame) / max(self.scale, 1e-300)

    def to_dict(self) -> dict:
        return {**self.terms, "residual": self.residual, "residual_frame": self.residual_frame,
                "relative": self.relative, "grid": list(self.grid)}


def pestov_residual(u: FiberField, S: Surface, frame_check: bool = True,
                    frame_curvature: Optional[np.ndarray] = None) -> PestovReport:
    """Terms of ``‖V X^σ u‖² = ‖X^σ V u‖² + ‖X^σ u‖² - <M^σ V u, V u>``.

    ``X^σ`` acting on the normal field ``∇_V u`` is the scalar derivative of its
    component on ``iv``, since the moving frame co-rotates with ``v`` in 2D.
    With ``frame_check`` the curvature term is also evaluated with ``M^σ`` from
    the frame-bundle contractions (or from ``frame_curvature`` if given).
    """
    check_band_limit(u)
    G = _geometry(S, u.grid)
    vu = vertical_derivative(u)
    xu = x_sigma(u, G)
    lhs = norm2(vertical_derivative(xu), G)
    flow_vertical = norm2(x_sigma(vu, G), G)
    flow = norm2(xu, G)
    curv = inner(vu * tangential_curvature_closed(G), vu, G)
    terms = {"vertical_of_flow": lhs, "flow_of_vertical": flow_vertical, "flow": flow,
             "curvature": curv}
    residual = lhs - (flow_vertical + flow - curv)
    residual_frame = None
    if frame_check or frame_curvature is not None:
        M = tangential_curvature_frame(G) if frame_curvature is None else frame_curvature
        curv_frame = inner(vu * M, vu, G)
        terms["curvature_frame"] = curv_frame
        residual_frame = lhs - (flow_vertical + flow - curv_frame)
    scale = max(abs(v) for v in terms.values())
    return PestovReport(terms, float(residual), residual_frame, scale, tuple(u.grid.shape))


def gradient_decomposition(u: FiberField, S: Surface, m: int) -> tuple[FiberField, ...]:
    """Four summands of ``∇^σ_H u`` for ``u ∈ H^m`` (n = 2, m ≥ 2).

    ``V X₊u/(m+1)``, ``-V X₋u/(m-1)``, the field term ``(n-2)/(2m(m+n-2)) V(b V u)``
    (identically zero here) and the remainder ``Z^σ_m u``.
    """
    if m < 2:
        raise ValueError("need m >= 2 on surfaces")
    n = 2
    G = _geometry(S, u.grid)
    plus, minus, zero_part = x_plus_minus(u, G, m)
    a = vertical_derivative(plus) / (m + 1)
    c = -vertical_derivative(minus) / (n + m - 3)
    d = vertical_derivative(zero_part) * ((n - 2) / (2 * m * (m + n - 2)))
    z = magnetic_horizontal_gradient(u, G) - a - c - d
    return a, c, d, z


@dataclass
class LocalizedReport:
    m: int
    terms: dict
    residual: float
    scale: float
    orthogonality: float
    divergence: float

    @property
    def relative(self) -> float:
        return abs(self.residual) / max(self.scale, 1e-300)

    def to_dict(self) -> dict:
        return {"m": self.m, **self.terms, "residual": self.residual, "relative": self.relative,
                "orthogonality": self.orthogonality, "divergence": self.divergence}


def localized_pestov_residual(u: FiberField, S: Surface, m: int) -> LocalizedReport:
    """Both sides of the localized identity for ``u ∈ H^m`` at n = 2.

    ``orthogonality`` is the largest pairwise inner product of the gradient
    summands relative to their norms, ``divergence`` the largest
    ``<∇_V w, Z^σ_m u>`` over unit ``w``.
    """
    if m < 2:
        raise ValueError("need m >= 2 on surfaces")
    check_band_limit(u)
    n = 2
    G = _geometry(S, u.grid)
    plus, minus, zero_part = x_plus_minus(u, G, m)
    parts = gradient_decomposition(u, G, m)
    z = parts[3]
    vu = vertical_derivative(u)
    terms = {
        "lowering": (n + m - 2) * (n + 2 * m - 4) / (n + m - 3) * norm2(minus, G),
        "raising": -m * (n + 2 * m) / (m + 1) * norm2(plus, G),
        "field": (1 + (n - 2) ** 2 / (4 * m * (n + m - 2))) * norm2(zero_part, G),
        "remainder": norm2(z, G),
        "curvature": inner(vu * tangential_curvature_closed(G), vu, G),
    }
    residual = terms["lowering"] + terms["raising"] + terms["field"] + terms["remainder"] - terms["curvature"]

    ortho = 0.0
    norms = [np.sqrt(norm2(p, G)) for p in parts]
    for i in range(4):
        for j in range(i + 1, 4):
            denom = max(norms[i] * norms[j], 1.0)
            ortho = max(ortho, abs(inner(parts[i], parts[j], G)) / denom)
    # <∇_V w, Z> = -<w, V Z> for every w, so the worst case is ‖V Z‖
    divergence = np.sqrt(norm2(vertical_derivative(z), G)) / max(1.0, np.sqrt(norm2(z, G)))
    scale = max(abs(v) for v in terms.values())
    return LocalizedReport(m, terms, float(residual), scale, ortho, float(divergence))


def random_field(rng: np.random.Generator, grid: Optional[SurfaceGrid] = None, degree: int = 10,
                 fiber_degree: int = 6, count: int = 12, harmonic: Optional[int] = None) -> FiberField:
    """Random real trigonometric polynomial on SM.

    ``harmonic`` fixes the fiber degree, producing an element of ``H^m``.
    """
    grid = grid or SurfaceGrid()
    x1, x2, th = grid.mesh
    vals = np.zeros(grid.shape)
    for _ in range(count):
        k1, k2 = rng.integers(-degree, degree + 1, size=2)
        m = harmonic if harmonic is not None else int(rng.integers(0, fiber_degree + 1))
        a, b = rng.standard_normal(2)
        phase = k1 * x1 + k2 * x2
        vals = vals + a * np.cos(phase + m * th) + b * np.sin(phase - m * th)
    return FiberField(vals, grid)


def field_from_function(fn, grid: Optional[SurfaceGrid] = None) -> FiberField:
    grid = grid or SurfaceGrid()
    x1, x2, th = grid.mesh
    return FiberField(np.broadcast_to(fn(x1, x2, th), grid.shape).copy(), grid)
