"""Charted Riemannian metrics carrying a magnetic 2-form.

A metric lives on a single coordinate patch. Derivatives of ``g`` are either
supplied analytically or taken by Richardson-extrapolated central differences.
The 2-form is stored through its component matrix ``sigma[i, j] = σ(∂_i, ∂_j)``
and the Lorentz endomorphism is fixed by ``g(Ω x, y) = σ(x, y)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

Array = np.ndarray
FieldFn = Callable[[Array], Array]


def richardson_jacobian(f: FieldFn, p: Array, h: float) -> Array:
    """Derivatives ``out[k] = ∂_k f(p)`` by central differences with one Richardson step."""
    p = np.asarray(p, dtype=float)
    out = []
    for k in range(p.size):
        e = np.zeros_like(p)
        e[k] = 1.0

        def central(step):
            return (np.asarray(f(p + step * e)) - np.asarray(f(p - step * e))) / (2 * step)

        out.append((4 * central(h / 2) - central(h)) / 3)
    return np.array(out)


class ChartedMetric:
    """Riemannian metric ``g(p)`` on a chart of R^n.

    Parameters
    ----------
    n : int
        Dimension.
    g : callable
        ``p -> (n, n)`` symmetric positive definite matrix.
    dg, d2g : callable, optional
        Analytic first and second derivatives, indexed ``[k, i, j]`` and
        ``[k, l, i, j]``. Missing ones are computed by finite differences.
    fd_step : float
        Base step of the difference stencils.
    period : sequence of float, optional
        Torus periods when the chart is periodic.
    """

    def __init__(self, n: int, g: FieldFn, dg: Optional[FieldFn] = None,
                 d2g: Optional[FieldFn] = None, fd_step: float = 1e-4,
                 period: Optional[Sequence[float]] = None, name: str = ""):
        self.n = n
        self._g = g
        self._dg = dg
        self._d2g = d2g
        self.fd_step = fd_step
        self.period = None if period is None else np.asarray(period, dtype=float)
        self.name = name

    @property
    def analytic(self) -> bool:
        return self._dg is not None and self._d2g is not None

    def g(self, p) -> Array:
        return np.asarray(self._g(np.asarray(p, dtype=float)), dtype=float)

    def dg(self, p) -> Array:
        if self._dg is not None:
            return np.asarray(self._dg(np.asarray(p, dtype=float)))
        return richardson_jacobian(self.g, p, self.fd_step)

    def d2g(self, p) -> Array:
        if self._d2g is not None:
            return np.asarray(self._d2g(np.asarray(p, dtype=float)))
        return richardson_jacobian(self.dg, p, self.fd_step)

    def without_analytic_derivatives(self) -> "ChartedMetric":
        """Same metric, derivatives by finite differences only."""
        return ChartedMetric(self.n, self._g, fd_step=self.fd_step, period=self.period,
                             name=self.name + " (fd)")

    def check_positive(self, p) -> None:
        gp = self.g(p)
        if np.linalg.eigvalsh(gp).min() <= 0:
            raise np.linalg.LinAlgError(f"metric is not positive definite at {p}")

    def inner(self, p, x, y) -> float:
        return float(x @ self.g(p) @ y)


def contract_first(M: Array, T: Array) -> Array:
    """``out[i, ...] = Σ_a M[i, a] T[a, ...]``, a matmul on the flattened tail."""
    return (M @ T.reshape(T.shape[0], -1)).reshape((M.shape[0],) + T.shape[1:])


def pull_back(T: Array, *mats: Array) -> Array:
    """Contract axis ``k`` of ``T`` with ``mats[k]``: ``out[i, j, ...] = Σ T[a, b, ...] M₀[a, i] M₁[b, j] ...``."""
    if len(mats) != T.ndim:
        raise ValueError("need one matrix per axis")
    for M in mats:
        T = (T.reshape(T.shape[0], -1).T @ M).reshape(T.shape[1:] + (M.shape[1],))
    return T


def _lowered(dg: Array) -> Array:
    # lowered[l, i, j] = 1/2 (∂_i g_jl + ∂_j g_il - ∂_l g_ij)
    return 0.5 * (dg.transpose(2, 0, 1) + dg.transpose(2, 1, 0) - dg)


def _christoffel(ginv: Array, dg: Array) -> Array:
    return contract_first(ginv, _lowered(dg))


def _christoffel_derivative(ginv: Array, dg: Array, d2g: Array) -> Array:
    dlowered = 0.5 * (d2g.transpose(0, 3, 1, 2) + d2g.transpose(0, 3, 2, 1) - d2g)
    dginv = -np.einsum("ka,mab,bl->mkl", ginv, dg, ginv)
    n = ginv.shape[0]
    first = (dginv.reshape(-1, n) @ _lowered(dg).reshape(n, -1)).reshape(dlowered.shape)
    return first + contract_first(ginv, dlowered.transpose(1, 0, 2, 3)).transpose(1, 0, 2, 3)


def _riemann(G: Array, dG: Array) -> Array:
    n = G.shape[0]
    GG = (G.reshape(-1, n) @ G.reshape(n, -1)).reshape(n, n, n, n)  # Γ^l_im Γ^m_jk
    return dG.transpose(1, 0, 2, 3) - dG.transpose(1, 2, 0, 3) + GG - GG.transpose(0, 2, 1, 3)


def christoffel(metric: ChartedMetric, p) -> Array:
    """Christoffel symbols ``G[k, i, j] = Γ^k_ij``."""
    return _christoffel(np.linalg.inv(metric.g(p)), metric.dg(p))


def christoffel_derivative(metric: ChartedMetric, p) -> Array:
    """``dG[m, k, i, j] = ∂_m Γ^k_ij`` from first and second metric derivatives."""
    return _christoffel_derivative(np.linalg.inv(metric.g(p)), metric.dg(p), metric.d2g(p))


def connection_matrix(gamma: Array, z) -> Array:
    """``Γ(z)`` with entries ``Γ^i_{kj} z^k``, so that ``∇_z Y = ∂_z Y + Γ(z) Y``."""
    return np.einsum("ikj,k->ij", gamma, z)


def riemann_tensor(metric: ChartedMetric, p) -> Array:
    """``Rm[l, i, j, k] = R^l_ijk`` with ``R(∂_i, ∂_j) ∂_k = R^l_ijk ∂_l``.

    Convention ``R(X, Y) = [∇_X, ∇_Y] - ∇_[X,Y]``.
    """
    ginv = np.linalg.inv(metric.g(p))
    dg = metric.dg(p)
    return _riemann(_christoffel(ginv, dg), _christoffel_derivative(ginv, dg, metric.d2g(p)))


def riemann(metric: ChartedMetric, p, x, y, z) -> Array:
    return np.einsum("lijk,i,j,k->l", riemann_tensor(metric, p), x, y, z)


def sectional_curvature(metric: ChartedMetric, p, x, y) -> float:
    g = metric.g(p)
    num = riemann(metric, p, x, y, y) @ g @ x
    den = (x @ g @ x) * (y @ g @ y) - (x @ g @ y) ** 2
    return float(num / den)


@dataclass
class MagneticSystem:
    """A charted metric together with a 2-form.

    ``sigma(p)`` returns the antisymmetric component matrix. ``dsigma(p)``
    returns ``[k, i, j] = ∂_k σ_ij``; when omitted it is differenced.
    """

    metric: ChartedMetric
    sigma: FieldFn
    dsigma: Optional[FieldFn] = None
    closed_hint: bool = True
    name: str = ""
    params: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.metric.n

    def sigma_at(self, p) -> Array:
        return np.asarray(self.sigma(np.asarray(p, dtype=float)), dtype=float)

    def dsigma_at(self, p) -> Array:
        if self.dsigma is not None:
            return np.asarray(self.dsigma(np.asarray(p, dtype=float)))
        return richardson_jacobian(self.sigma_at, p, self.metric.fd_step)

    def without_analytic_derivatives(self) -> "MagneticSystem":
        return MagneticSystem(self.metric.without_analytic_derivatives(), self.sigma, None,
                              self.closed_hint, self.name + " (fd)", dict(self.params))


def lorentz(system: MagneticSystem, p) -> Array:
    """Lorentz endomorphism Ω with ``g(Ω x, y) = σ(x, y)``, i.e. ``Ω = -g^{-1} σ``."""
    return -np.linalg.solve(system.metric.g(p), system.sigma_at(p))


def _lorentz_derivatives(ginv, dg, sig, dsig) -> Array:
    dginv = -np.einsum("ia,kab,bj->kij", ginv, dg, ginv)
    return -(dginv @ sig + ginv @ dsig)


def lorentz_derivatives(system: MagneticSystem, p) -> Array:
    """Coordinate derivatives ``[k, i, j] = ∂_k Ω^i_j``."""
    ginv = np.linalg.inv(system.metric.g(p))
    return _lorentz_derivatives(ginv, system.metric.dg(p), system.sigma_at(p), system.dsigma_at(p))


@dataclass
class LocalGeometry:
    """Everything needed at one chart point, each quantity evaluated once."""

    g: Array
    ginv: Array
    christoffel: Array
    riemann: Array
    omega: Array
    d_omega: Array
    dsigma: Array


def local_geometry(system: MagneticSystem, p) -> LocalGeometry:
    metric = system.metric
    g = metric.g(p)
    ginv = np.linalg.inv(g)
    dg = metric.dg(p)
    G = _christoffel(ginv, dg)
    Rm = _riemann(G, _christoffel_derivative(ginv, dg, metric.d2g(p)))
    sig = system.sigma_at(p)
    dsig = system.dsigma_at(p)
    return LocalGeometry(g, ginv, G, Rm, -ginv @ sig, _lorentz_derivatives(ginv, dg, sig, dsig), dsig)


def nabla_omega(system: MagneticSystem, p, z) -> Array:
    """Covariant derivative ``∇_z Ω = ∂_z Ω + [Γ(z), Ω]``."""
    omega = lorentz(system, p)
    gz = connection_matrix(christoffel(system.metric, p), z)
    d_omega = np.einsum("kij,k->ij", lorentz_derivatives(system, p), z)
    return d_omega + gz @ omega - omega @ gz


def d_sigma(system: MagneticSystem, p, x, y, z) -> float:
    """Exterior derivative ``dσ(x, y, z)`` from coordinate derivatives of σ."""
    ds = system.dsigma_at(p)
    return float(np.einsum("kij,k,i,j->", ds, x, y, z)
                 + np.einsum("kij,k,i,j->", ds, y, z, x)
                 + np.einsum("kij,k,i,j->", ds, z, x, y))
