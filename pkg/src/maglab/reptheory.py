"""Representation-theoretic constants of SO(n) and a Haar-quadrature Poincaré check.

Weights are written in the orthonormal basis ``e_i`` of the maximal torus for
``<·,·> = -½ tr``; the Killing form is ``B = (N - 2) <·,·>`` on so(N).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np
import sympy


class _Unknown:
    """Sentinel for values that are not known in closed form."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Unknown"

    def __bool__(self) -> bool:
        return False


UNKNOWN = _Unknown()


def _rank(n: int) -> int:
    if n < 3:
        raise ValueError("need n >= 3")
    return n // 2


def fundamental_weights(n: int) -> list[tuple[Fraction, ...]]:
    m = _rank(n)
    half = Fraction(1, 2)
    out = [tuple(Fraction(1) if j <= i else Fraction(0) for j in range(m)) for i in range(m)]
    if n % 2 == 0:
        if m < 2:
            raise ValueError("need n >= 4 for even n")
        out = out[:m - 2]
        out.append(tuple([half] * (m - 1) + [-half]))
        out.append(tuple([half] * m))
    else:
        out = out[:m - 1]
        out.append(tuple([half] * m))
    return out


def integral_lattice_basis(n: int) -> list[tuple[Fraction, ...]]:
    """Basis of the analytically integral weights of SO(n), built from the fundamental weights."""
    w = fundamental_weights(n)
    m = len(w)
    twice = lambda v: tuple(2 * x for x in v)
    if n % 2 == 0:
        return w[:m - 2] + [twice(w[m - 2]), tuple(a + b for a, b in zip(w[m - 2], w[m - 1])), twice(w[m - 1])]
    return w[:m - 1] + [twice(w[m - 1])]


def positive_roots(n: int) -> list[tuple[int, ...]]:
    """``e_i ± e_j`` (i < j), plus ``e_i`` for odd n."""
    m = _rank(n)
    roots = []
    for i, j in itertools.combinations(range(m), 2):
        for sign in (1, -1):
            r = [0] * m
            r[i], r[j] = 1, sign
            roots.append(tuple(r))
    if n % 2 == 1:
        for i in range(m):
            r = [0] * m
            r[i] = 1
            roots.append(tuple(r))
    return roots


def half_sum(n: int) -> tuple[Fraction, ...]:
    """Half the sum of the positive roots."""
    # e_i ± e_j (j > i) contribute 2 to coordinate i and cancel on j; odd n adds e_i itself
    m = _rank(n)
    return tuple(Fraction(2 * (m - 1 - i) + n % 2, 2) for i in range(m))


def is_dominant(weight: Sequence, n: int) -> bool:
    lam = [Fraction(x) for x in weight]
    m = _rank(n)
    if len(lam) != m:
        return False
    if any(lam[i] < lam[i + 1] for i in range(m - 2)):
        return False
    if n % 2 == 0:
        return m < 2 or lam[m - 2] >= abs(lam[m - 1])
    return (m < 2 or lam[m - 2] >= lam[m - 1]) and lam[m - 1] >= 0


def is_integral(weight: Sequence) -> bool:
    return all(Fraction(x).denominator == 1 for x in weight)


def _dot(a, b) -> Fraction:
    return sum((Fraction(x) * Fraction(y) for x, y in zip(a, b)), Fraction(0))


def casimir_scalar(weight: Sequence, n: int) -> Fraction:
    """``<λ, λ + 2δ>`` in the metric dual to the Killing form, exactly."""
    if not is_dominant(weight, n):
        raise ValueError(f"{tuple(weight)} is not dominant for so({n})")
    delta = half_sum(n)
    shifted = [Fraction(x) + 2 * d for x, d in zip(weight, delta)]
    return _dot(weight, shifted) / (n - 2)


def laplacian_eigenvalue(weight: Sequence, n: int) -> Fraction:
    """Eigenvalue of the Laplacian of SO(n) with metric ``-½ tr`` on the isotypic block of ``λ``."""
    return (n - 2) * casimir_scalar(weight, n)


def dominant_integral_weights(n: int, max_norm2: int) -> list[tuple[int, ...]]:
    """Dominant integral weights with ``|λ|² <= max_norm2``."""
    m = _rank(n)
    bound = int(np.floor(np.sqrt(max_norm2)))
    out = []
    for lam in itertools.product(range(-bound, bound + 1), repeat=m):
        if sum(x * x for x in lam) <= max_norm2 and is_dominant(lam, n):
            out.append(lam)
    return out


def radon_hurwitz(n: int) -> int:
    """``ρ(n) = 8a + 2^b`` for ``n = 2^{4a+b} · odd``, ``0 <= b <= 3``."""
    if n < 1:
        raise ValueError("need n >= 1")
    e = 0
    while n % 2 == 0:
        n //= 2
        e += 1
    a, b = divmod(e, 4)
    return 8 * a + 2 ** b


@dataclass(frozen=True)
class Subgroup:
    """A maximal proper holonomy candidate inside SO(n-1)."""

    kind: str
    n: int
    q: Optional[int] = None

    @property
    def label(self) -> str:
        if self.kind == "SOxSO":
            return f"SO({self.q})xSO({self.n - 1 - self.q})"
        return {"U3": "U(3)", "G2": "G2", "E7": "E7/Z2"}[self.kind]


def groups(n: int) -> list[Subgroup]:
    """The list of candidate subgroups of SO(n-1) for the frame-flow transitivity group."""
    if n < 3:
        raise ValueError("need n >= 3")
    if n % 2 == 1:
        return [Subgroup("U3", n)] if n == 7 else []
    if n == 8:
        return [Subgroup("G2", n)] + [Subgroup("SOxSO", n, q) for q in range(1, 4)]
    if n == 134:
        return [Subgroup("E7", n), Subgroup("SOxSO", n, 1)]
    top = min(radon_hurwitz(n) - 1, (n - 2) // 2)
    return [Subgroup("SOxSO", n, q) for q in range(1, top + 1)]


def nu(K: Subgroup, n: Optional[int] = None) -> Union[Fraction, _Unknown]:
    """Smallest nonzero Laplacian eigenvalue on SO(n-1)/K.

    For Grassmannian quotients the sphere value ``ν(K₁)`` is computed from the
    standard representation of SO(n-1); for q ≥ 2 that value is returned as
    the operative upper bound.
    """
    n = K.n if n is None else n
    if K not in groups(n):
        raise ValueError(f"{K.label} is not a candidate for n = {n}")
    if K.kind in ("U3", "G2"):
        return Fraction(16)
    if K.kind == "E7":
        return UNKNOWN
    standard = (1,) + (0,) * (_rank(n - 1) - 1)
    return laplacian_eigenvalue(standard, n - 1)


def nu_max(n: int) -> Union[Fraction, _Unknown]:
    values = [nu(K, n) for K in groups(n)]
    if not values:
        return Fraction(0)
    if any(v is UNKNOWN for v in values):
        return UNKNOWN
    return max(values)


def chi(t) -> sympy.Expr:
    """``2√t / (3 + 2√t)``, exact for rational ``t``."""
    t = sympy.nsimplify(t) if not isinstance(t, Fraction) else sympy.Rational(t.numerator, t.denominator)
    if t <= 0:
        raise ValueError("need t > 0")
    r = sympy.sqrt(t)
    return sympy.radsimp(2 * r / (3 + 2 * r))


def delta_star(n: int) -> Union[sympy.Expr, _Unknown]:
    """Pinching threshold: ``χ(ν_max)``, or 0 when there are no candidates."""
    v = nu_max(n)
    if v is UNKNOWN:
        return UNKNOWN
    if v == 0:
        return sympy.Integer(0)
    return chi(v)


def epsilon_margin(delta, n: int) -> Union[float, _Unknown]:
    """``3δ - 2(1-δ)√ν_max``; positive exactly when δ exceeds the threshold."""
    v = nu_max(n)
    if v is UNKNOWN:
        return UNKNOWN
    return float(3 * delta - 2 * (1 - delta) * np.sqrt(float(v)))


@dataclass
class PinchingRow:
    n: int
    members: list
    nu_max: object
    delta_star: object
    margin: object = None

    def to_dict(self) -> dict:
        fmt = lambda x: "Unknown" if x is UNKNOWN else str(x)
        return {"n": self.n, "groups": [K.label for K in self.members], "nu": fmt(self.nu_max),
                "delta_star": fmt(self.delta_star),
                "delta_star_float": None if self.delta_star is UNKNOWN else float(self.delta_star),
                "margin": fmt(self.margin) if self.margin is not None else None}


def pinching_row(n: int, delta: Optional[float] = None) -> PinchingRow:
    return PinchingRow(n, groups(n), nu_max(n), delta_star(n),
                       None if delta is None else epsilon_margin(delta, n))


# Haar quadrature


@dataclass
class HaarRule:
    """Points ``w`` of SO(n) with weights summing to one."""

    points: np.ndarray
    weights: np.ndarray

    def integrate(self, values: np.ndarray):
        out = np.tensordot(self.weights, values, axes=(0, 0))
        return float(out) if np.ndim(out) == 0 else out


def _rz(a):
    c, s = np.cos(a), np.sin(a)
    out = np.zeros(np.shape(a) + (3, 3))
    out[..., 0, 0], out[..., 0, 1], out[..., 1, 0], out[..., 1, 1], out[..., 2, 2] = c, -s, s, c, 1
    return out


def _ry(b):
    c, s = np.cos(b), np.sin(b)
    out = np.zeros(np.shape(b) + (3, 3))
    out[..., 0, 0], out[..., 0, 2], out[..., 2, 0], out[..., 2, 2], out[..., 1, 1] = c, s, -s, c, 1
    return out


def haar_so3(resolution: int = 48) -> HaarRule:
    """ZYZ Euler angles: uniform trapezoid in α, γ and Gauss-Legendre in cos β."""
    if resolution < 3:
        raise ValueError("resolution too coarse")
    ang = 2 * np.pi * np.arange(resolution) / resolution
    x, wx = np.polynomial.legendre.leggauss(resolution)
    beta = np.arccos(x)
    A, Bi, G = np.meshgrid(ang, np.arange(resolution), ang, indexing="ij")
    pts = _rz(A) @ _ry(beta[Bi]) @ _rz(G)
    weights = (wx[Bi] / 2) / resolution ** 2
    return HaarRule(pts.reshape(-1, 3, 3), weights.ravel())


def _quat_mult_matrices(q):
    """Left and right multiplication matrices of quaternions ``q = (a, b, c, d)``."""
    a, b, c, d = (q[..., i] for i in range(4))
    L = np.stack([np.stack([a, -b, -c, -d], -1), np.stack([b, a, -d, c], -1),
                  np.stack([c, d, a, -b], -1), np.stack([d, -c, b, a], -1)], -2)
    R = np.stack([np.stack([a, -b, -c, -d], -1), np.stack([b, a, d, -c], -1),
                  np.stack([c, -d, a, b], -1), np.stack([d, c, -b, a], -1)], -2)
    return L, R


def _s3_rule(resolution: int):
    """Uniform S³ via Hopf coordinates ``(√(1-s) e^{iξ₁}, √s e^{iξ₂})`` with s uniform."""
    ang = 2 * np.pi * np.arange(resolution) / resolution
    x, wx = np.polynomial.legendre.leggauss(resolution)
    s = (x + 1) / 2
    S, X1, X2 = np.meshgrid(np.arange(resolution), ang, ang, indexing="ij")
    r0, r1 = np.sqrt(1 - s[S]), np.sqrt(s[S])
    q = np.stack([r0 * np.cos(X1), r0 * np.sin(X1), r1 * np.cos(X2), r1 * np.sin(X2)], -1)
    w = (wx[S] / 2) / resolution ** 2
    return q.reshape(-1, 4), w.ravel()


def haar_so4(resolution: int = 10) -> HaarRule:
    """Double cover S³×S³ → SO(4), ``x ↦ p x q̄``, with the product of uniform S³ rules."""
    if resolution < 3:
        raise ValueError("resolution too coarse")
    q, w = _s3_rule(resolution)
    L, _ = _quat_mult_matrices(q)
    conj = q * np.array([1, -1, -1, -1])
    _, Rc = _quat_mult_matrices(conj)
    pts = np.einsum("aij,bjk->abik", L, Rc).reshape(-1, 4, 4)
    weights = np.outer(w, w).ravel()
    return HaarRule(pts, weights)


def haar_rule(n: int, resolution: Optional[int] = None) -> HaarRule:
    if n == 3:
        rule = haar_so3(48 if resolution is None else resolution)
    elif n == 4:
        rule = haar_so4(10 if resolution is None else resolution)
    else:
        raise ValueError("Haar quadrature is available for SO(3) and SO(4) only")
    _check_haar(rule, n)
    return rule


def _check_haar(rule: HaarRule, n: int, tol: float = 1e-10) -> None:
    total = rule.weights.sum()
    second = rule.integrate(rule.points ** 2)
    gram = rule.integrate(np.einsum("aij,aij->a", rule.points, rule.points))
    if abs(total - 1) > tol or np.abs(second - 1.0 / n).max() > tol or abs(gram - n) > tol:
        raise ValueError("Haar normalization check failed; increase the resolution")


@dataclass
class PoincareResult:
    variance: float
    gradient: float

    @property
    def ratio(self) -> float:
        if self.gradient == 0:
            return 0.0 if self.variance == 0 else float("inf")
        return self.variance / self.gradient


def flow_derivatives(f: Callable, points: np.ndarray, h: float = 1e-3) -> np.ndarray:
    """``d/dt f(w exp(t e₁∧e_j))`` at t = 0 for j = 2..n, fourth-order differences."""
    n = points.shape[-1]
    out = []
    for j in range(1, n):
        vals = [f(points @ _plane_rotation(n, j, k * h)) for k in (-2, -1, 1, 2)]
        out.append((vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h))
    return np.stack(out, axis=-1)


def _plane_rotation(n: int, j: int, t: float) -> np.ndarray:
    """``exp(t e₁∧e_j)``: rotates e₁ toward e_j."""
    R = np.eye(n)
    c, s = np.cos(t), np.sin(t)
    R[0, 0], R[j, j] = c, c
    R[j, 0], R[0, j] = s, -s
    return R


def poincare_check(f: Callable, n: int, resolution: Optional[int] = None,
                   rule: Optional[HaarRule] = None, chunk: int = 200_000) -> PoincareResult:
    """``(‖f - mean‖², ‖∇f · e₁‖²)`` under Haar quadrature on SO(n), n ∈ {3, 4}.

    ``f`` maps an array of matrices ``(..., n, n)`` to values ``(...)``.
    """
    rule = rule or haar_rule(n, resolution)
    mean = 0.0
    second = 0.0
    grad = 0.0
    for start in range(0, len(rule.weights), chunk):
        pts = rule.points[start:start + chunk]
        w = rule.weights[start:start + chunk]
        vals = f(pts)
        mean += float(w @ vals)
        second += float(w @ vals ** 2)
        grad += float(w @ (flow_derivatives(f, pts) ** 2).sum(axis=-1))
    return PoincareResult(second - mean ** 2, grad)


@dataclass
class MatrixPolynomial:
    """``c + Σ_a A_a·w + Σ_b (B_b·w)(C_b·w)`` with ``A·w = Σ A_ij w_ij``."""

    const: float
    linear: np.ndarray
    quad_left: np.ndarray
    quad_right: np.ndarray

    def __call__(self, w: np.ndarray) -> np.ndarray:
        lin = np.einsum("ij,...ij->...", self.linear, w)
        left = np.einsum("bij,...ij->...b", self.quad_left, w)
        right = np.einsum("bij,...ij->...b", self.quad_right, w)
        return self.const + lin + (left * right).sum(axis=-1)


def random_matrix_polynomial(rng: np.random.Generator, n: int, terms: int = 3) -> MatrixPolynomial:
    """Random polynomial of degree two in the entries of w (band-limited on SO(n))."""
    return MatrixPolynomial(float(rng.standard_normal()), rng.standard_normal((n, n)),
                            rng.standard_normal((terms, n, n)), rng.standard_normal((terms, n, n)))


def matrix_entry(i: int, j: int) -> Callable:
    """``w ↦ <w e_j, e_i>`` (zero-based indices)."""
    return lambda w: w[..., i, j]
