"""Linear algebra on so(n) ⋉ R^n.

Elements are pairs ``(skew, vec)``. The wedge convention is

    (x ∧ y) z = <x, z> y - <y, z> x,

which makes ``<xi x, y> = <xi, x ∧ y>`` hold for the inner product
``<xi, eta> = -1/2 tr(xi eta)``. Every other module builds on this sign.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def basis_vector(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def wedge(x, y) -> np.ndarray:
    """Matrix of ``x ∧ y`` acting by ``z -> <x,z> y - <y,z> x``; batches along leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 0 or y.ndim == 0 or x.shape[-1] != y.shape[-1]:
        raise ValueError(f"wedge needs two vectors of equal length, got {x.shape} and {y.shape}")
    return y[..., :, None] * x[..., None, :] - x[..., :, None] * y[..., None, :]


def skew_inner(xi, eta) -> float:
    """``-1/2 tr(xi eta)``; equals the Frobenius product halved for skew matrices."""
    return float(0.5 * np.sum(np.asarray(xi) * np.asarray(eta)))


def commutator(xi, eta) -> np.ndarray:
    return xi @ eta - eta @ xi


def skew_part(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return 0.5 * (a - a.T)


@dataclass(frozen=True)
class LieElement:
    """An element ``skew + vec`` of so(n) ⋉ R^n.

    The skew part is rebuilt from its strict upper triangle, so it is exactly
    antisymmetric whatever matrix is passed in.
    """

    skew: np.ndarray
    vec: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.skew, dtype=float)
        v = np.asarray(self.vec, dtype=float)
        if s.shape != (v.size, v.size):
            raise ValueError(f"skew part {s.shape} does not match vector length {v.size}")
        upper = np.triu(s, 1)
        object.__setattr__(self, "skew", upper - upper.T)
        object.__setattr__(self, "vec", v.copy())

    @property
    def n(self) -> int:
        return self.vec.size

    @classmethod
    def from_skew(cls, xi) -> "LieElement":
        xi = np.asarray(xi, dtype=float)
        return cls(xi, np.zeros(xi.shape[0]))

    @classmethod
    def from_vec(cls, x) -> "LieElement":
        x = np.asarray(x, dtype=float)
        return cls(np.zeros((x.size, x.size)), x)

    def __add__(self, other: "LieElement") -> "LieElement":
        _check_same_n(self, other)
        return LieElement(self.skew + other.skew, self.vec + other.vec)

    def __sub__(self, other: "LieElement") -> "LieElement":
        _check_same_n(self, other)
        return LieElement(self.skew - other.skew, self.vec - other.vec)

    def __mul__(self, c: float) -> "LieElement":
        return LieElement(c * self.skew, c * self.vec)

    __rmul__ = __mul__


def _check_same_n(a: LieElement, b: LieElement) -> None:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")


def bracket(a: LieElement, b: LieElement) -> LieElement:
    """``[xi + x, eta + y] = [xi, eta] + (xi y - eta x)``."""
    _check_same_n(a, b)
    return LieElement(commutator(a.skew, b.skew), a.skew @ b.vec - b.skew @ a.vec)


def inner(a: LieElement, b: LieElement) -> float:
    _check_same_n(a, b)
    return skew_inner(a.skew, b.skew) + float(a.vec @ b.vec)


def split_so(xi) -> tuple[np.ndarray, np.ndarray]:
    """Split ``xi`` into its so(n-1) part (fixing e1) and its e1 ∧ R^{n-1} part."""
    xi = np.asarray(xi, dtype=float)
    e1 = basis_vector(xi.shape[0], 0)
    transverse = wedge(e1, xi @ e1)
    return xi - transverse, transverse


def perp(x) -> np.ndarray:
    """Component of ``x`` orthogonal to e1."""
    x = np.array(x, dtype=float)
    x[..., 0] = 0.0
    return x


def skew_basis(n: int) -> list[np.ndarray]:
    """Orthonormal basis ``e_i ∧ e_j`` (i < j) of so(n)."""
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            out.append(wedge(basis_vector(n, i), basis_vector(n, j)))
    return out


def random_skew(rng: np.random.Generator, n: int) -> np.ndarray:
    return skew_part(rng.standard_normal((n, n)))
