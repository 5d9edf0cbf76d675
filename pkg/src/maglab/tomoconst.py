"""Exact rational algebra behind the tensor-tomography constant C(m, n).

Everything is :class:`fractions.Fraction`; no floating point enters.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction


def _check(m: int, n: int) -> None:
    if not (isinstance(m, int) and isinstance(n, int)):
        raise TypeError("m and n must be integers")
    if m < 1 or n < 2 or m + n < 4:
        raise ValueError(f"need m >= 1, n >= 2, m + n >= 4, got m={m}, n={n}")


def a_minus(k: int, n: int) -> Fraction:
    return Fraction(1, n + k - 3)


def a_zero(k: int, n: int, doubled: bool = False) -> Fraction:
    """Weight of the field term: ``(n-2)/(2k(k+n-2))``, or twice that when ``doubled``."""
    return Fraction(n - 2, (1 if doubled else 2) * k * (k + n - 2))


def a_plus(k: int, n: int) -> Fraction:
    return Fraction(1, k + 1)


@dataclass(frozen=True)
class TomoCoeffs:
    m: int
    n: int
    a_minus: Fraction
    a_zero: Fraction
    a_plus: Fraction
    alpha: Fraction
    beta: Fraction
    gamma: Fraction

    @property
    def C(self) -> Fraction:
        """``β²/(4α) - γ``."""
        return self.beta ** 2 / (4 * self.alpha) - self.gamma


def coeffs(m: int, n: int, doubled_field_term: bool = False) -> TomoCoeffs:
    """Coefficients of the quadratic form bounding the degree-m remainder.

    With ``A = m(m+n-2)`` and ``s = a₋^{m+1}``:
    ``α = A[(1+s)² - 1] + n - 1``, ``β = -2A(1+s)(s + a₀^m)``, ``γ = A(a₀^m + s)²``.
    The listed ``a``'s are the degree-m values. ``doubled_field_term`` uses
    twice the projection weight for ``a₀``, the only choice for which ``C``
    reduces to :func:`closed_form` when n ≥ 3.
    """
    _check(m, n)
    A = m * (m + n - 2)
    s = a_minus(m + 1, n)
    a0 = a_zero(m, n, doubled_field_term)
    alpha = A * ((1 + s) ** 2 - 1) + n - 1
    beta = -2 * A * (1 + s) * (s + a0)
    gamma = A * (a0 + s) ** 2
    return TomoCoeffs(m, n, a_minus(m, n), a0, a_plus(m, n), alpha, beta, gamma)


def closed_form(m: int, n: int) -> Fraction:
    """``m(m-1)/(2m+n-2) + (n-2)(m-1)/m``."""
    _check(m, n)
    return Fraction(m * (m - 1), 2 * m + n - 2) + Fraction((n - 2) * (m - 1), m)


def verify_C(m: int, n: int, doubled_field_term: bool = False) -> tuple[Fraction, Fraction, bool]:
    quad = coeffs(m, n, doubled_field_term).C
    closed = closed_form(m, n)
    return quad, closed, quad == closed


def intro_specialization(n: int) -> Fraction:
    """The m = 2 value ``n/2 - 1 + 2/(n+2)``."""
    if n < 2:
        raise ValueError("need n >= 2")
    return Fraction(n, 2) - 1 + Fraction(2, n + 2)


def proof_inequality(m: int, n: int) -> bool:
    """``(m-1)(m+n-3)(1+a₋^m)² + (n-1) >= (m-1)(m+n-3)``."""
    _check(m, n)
    base = (m - 1) * (m + n - 3)
    return base * (1 + a_minus(m, n)) ** 2 + (n - 1) >= base


@dataclass(frozen=True)
class SweepRow:
    m: int
    n: int
    quadratic: Fraction
    closed: Fraction

    @property
    def equal(self) -> bool:
        return self.quadratic == self.closed


def sweep(max_m: int = 40, max_n: int = 40, doubled_field_term: bool = False) -> list[SweepRow]:
    rows = []
    for m in range(1, max_m + 1):
        for n in range(2, max_n + 1):
            if m + n >= 4:
                quad, closed, _ = verify_C(m, n, doubled_field_term)
                rows.append(SweepRow(m, n, quad, closed))
    return rows


def write_table(path, max_m: int = 40, max_n: int = 40) -> None:
    """CSV of exact values as ``p/q`` strings."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "n", "alpha", "beta", "gamma", "C", "C_closed", "equal"])
        for m in range(1, max_m + 1):
            for n in range(2, max_n + 1):
                if m + n < 4:
                    continue
                c = coeffs(m, n)
                closed = closed_form(m, n)
                writer.writerow([m, n, str(c.alpha), str(c.beta), str(c.gamma), str(c.C),
                                 str(closed), int(c.C == closed)])
