"""Verification suites shared by the command line and the acceptance tests.

Each suite returns a :class:`SuiteResult`: a list of named checks, each with
its worst residual and the tolerance it is held to. Suites are deterministic
given the seed.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import circlebundle as cb
from . import dynamics as dy
from . import framebundle as fb
from . import liealg
from . import magtensor as mt
from . import reptheory as rt
from . import tomoconst as tc
from .manifold import MagneticSystem
from .systems import sample_point


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual < self.tolerance)


@dataclass
class SuiteResult:
    suite: str
    checks: list[Check]
    runtime: float = 0.0
    rows: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def max_residual(self) -> float:
        return max((c.residual for c in self.checks), default=0.0)

    def summary(self) -> dict:
        return {"suite": self.suite,
                "checks_passed": sum(c.passed for c in self.checks),
                "checks_total": len(self.checks),
                "max_residual": self.max_residual,
                "runtime": self.runtime,
                "checks": [{"name": c.name, "residual": c.residual, "tolerance": c.tolerance,
                            "passed": c.passed, **c.detail} for c in self.checks]}


def _timed(name: str, body) -> SuiteResult:
    start = time.perf_counter()
    checks, rows = body()
    return SuiteResult(name, checks, time.perf_counter() - start, rows)


def _gap(Z, E) -> float:
    return float(max(np.abs(Z[0] - E[0]).max(), np.abs(Z[1] - E[1]).max()))


def _size(E) -> float:
    return float(max(1.0, np.abs(E[0]).max(), np.abs(E[1]).max()))


# frame bundle brackets


def bracket_residuals(system: MagneticSystem, w: fb.FramePoint, rng: np.random.Generator,
                      h: float = 1e-5) -> dict[str, float]:
    """Relative residuals of the structure equations at one frame point.

    ``fundamental``: ``[Y_ξ, Y_η] = Y_{[ξ,η]}``; ``mixed``: ``[Y_ξ, B_x] = B_{ξx}``;
    ``horizontal``: ``[B_x, B_y] = -Y_{R(x,y)}``; ``magnetic``: ``-[B^σ_x, B^σ_y]``
    decomposed in the ``(X^σ, B^σ, Y)`` frame against ``(τ^σ(x,y), R^σ(x,y))``.
    """
    n = system.n
    xi, eta = liealg.random_skew(rng, n), liealg.random_skew(rng, n)
    x, y = rng.standard_normal(n), rng.standard_normal(n)
    C = mt.curvature_sample(system, w)
    out = {}

    Z = fb.fd_bracket(fb.fundamental_field(xi), fb.fundamental_field(eta), w, h)
    E = fb.fundamental_field(liealg.commutator(xi, eta))(w)
    out["fundamental"] = _gap(Z, E) / _size(E)

    Z = fb.fd_bracket(fb.fundamental_field(xi), fb.standard_field(system, x), w, h)
    E = fb.standard_field(system, xi @ x)(w)
    out["mixed"] = _gap(Z, E) / _size(E)

    Z = fb.fd_bracket(fb.standard_field(system, x), fb.standard_field(system, y), w, h)
    E = (np.zeros(n), -w.W @ C.riemann_op(x, y))
    out["horizontal"] = _gap(Z, E) / _size(E)

    Z = fb.fd_bracket(fb.magnetic_standard_field(system, x), fb.magnetic_standard_field(system, y), w, h)
    c, hh, vert = fb.decompose_fm_vector(system, w, (-Z[0], -Z[1]))
    tau, R = mt.torsion(C, x, y), mt.curvature(C, x, y)
    scale = max(1.0, np.abs(tau).max(), np.abs(R).max())
    out["magnetic"] = float(max(abs(c - tau[0]), np.abs(hh - tau[1:]).max(), np.abs(vert - R).max()) / scale)
    return out


def brackets(system: MagneticSystem, seed: int = 0, samples: int = 100, h: float = 1e-5,
             tol: float = 1e-4) -> SuiteResult:
    def body():
        rng = np.random.default_rng(seed)
        worst: dict[str, float] = {}
        for _ in range(samples):
            w = fb.random_frame(system, rng)
            for k, v in bracket_residuals(system, w, rng, h).items():
                worst[k] = max(worst.get(k, 0.0), v)
        return [Check(f"bracket/{k}", v, tol, {"samples": samples}) for k, v in worst.items()], []
    return _timed("brackets", body)


# closed-form tensors


def tensors(system: MagneticSystem, seed: int = 0, samples: int = 100, tol: float = 1e-8) -> SuiteResult:
    """Algebraic consistency of the closed forms at random frames.

    ``torsion``: τ(x,y) = T_x y - T_y x; ``bianchi``: cyclic sum of R^σ against
    its closed remainder (as returned by :func:`magtensor.bianchi_pair`);
    ``riemann-bianchi``: first Bianchi identity of the metric curvature.
    """
    def body():
        rng = np.random.default_rng(seed)
        n = system.n
        worst = {"torsion": 0.0, "bianchi": 0.0, "riemann-bianchi": 0.0}
        for _ in range(samples):
            C = mt.curvature_sample(system, fb.random_frame(system, rng))
            x, y, z = rng.standard_normal((3, n))
            tau = mt.torsion(C, x, y)
            anti = mt.contorsion(C, x) @ y - mt.contorsion(C, y) @ x
            worst["torsion"] = max(worst["torsion"], float(np.abs(tau - anti).max()))
            lhs, rhs = mt.bianchi_pair(C, x, y, z)
            worst["bianchi"] = max(worst["bianchi"], float(np.abs(lhs - rhs).max()))
            cyc = C.riemann_op(x, y) @ z + C.riemann_op(y, z) @ x + C.riemann_op(z, x) @ y
            worst["riemann-bianchi"] = max(worst["riemann-bianchi"], float(np.abs(cyc).max()))
        return [Check(f"tensors/{k}", v, tol, {"samples": samples}) for k, v in worst.items()], []
    return _timed("tensors", body)


# Jacobi fields


def jacobi(system: MagneticSystem, seed: int = 0, T: float = 5.0, dt: float = 5e-3,
           eps: float = 1e-5, tol: float = 1e-4, start=None) -> SuiteResult:
    def body():
        rng = np.random.default_rng(seed)
        p = _start_point(system, rng) if start is None else np.asarray(start, dtype=float)
        w = fb.frame_at(system, p, fb.random_rotation(rng, system.n))
        m = system.n - 1
        J = dy.JacobiState(float(rng.standard_normal()), rng.standard_normal(m), rng.standard_normal(m))
        a = dy.jacobi_propagate(system, w, J, T, dt=dt)
        b = dy.jacobi_fd_oracle(system, w, J, T, dt=dt, eps=eps)
        A, B = a.stacked(), b.stacked()
        rows = [{"t": float(t), **{f"ode_{i}": float(v) for i, v in enumerate(ra)},
                 **{f"oracle_{i}": float(v) for i, v in enumerate(rb)}}
                for t, ra, rb in zip(a.t, A, B)]
        return [Check("jacobi/oracle", float(np.abs(A - B).max()), tol, {"T": T, "dt": dt})], rows
    return _timed("jacobi", body)


def _start_point(system: MagneticSystem, rng: np.random.Generator) -> np.ndarray:
    """Chart origin for ball and plane charts, a random point on tori."""
    if system.params.get("domain") == "torus":
        return sample_point(system, rng)
    return np.zeros(system.n)


# Pestov identities on surfaces


def pestov(system: MagneticSystem, seed: int = 0, fields: int = 20, grid: int = 64,
           tol: float = 1e-8, frame_check: bool = True, degree: int = 10) -> SuiteResult:
    def body():
        rng = np.random.default_rng(seed)
        G = cb.surface_geometry(system, cb.SurfaceGrid((grid, grid, grid)))
        frame_M = cb.tangential_curvature_frame(G) if frame_check else None
        rows, worst, worst_frame = [], 0.0, 0.0
        for k in range(fields):
            r = cb.pestov_residual(cb.random_field(rng, G.grid, degree=degree), G, frame_check=frame_check,
                                   frame_curvature=frame_M)
            worst = max(worst, r.relative)
            if frame_check:
                worst_frame = max(worst_frame, r.relative_frame)
            rows.append({"field": k, **r.to_dict()})
        checks = [Check("pestov/closed-M", worst, tol, {"fields": fields, "grid": grid})]
        if frame_check:
            checks.append(Check("pestov/frame-M", worst_frame, tol, {"fields": fields, "grid": grid}))
        return checks, rows
    return _timed("pestov", body)


def localized(system: MagneticSystem, seed: int = 0, degrees=(2, 3, 4), fields: int = 3, grid: int = 64,
              tol: float = 1e-8, orthogonality_tol: float = 1e-10, degree: int = 10) -> SuiteResult:
    def body():
        rng = np.random.default_rng(seed)
        G = cb.surface_geometry(system, cb.SurfaceGrid((grid, grid, grid)))
        rows, worst, ortho = [], 0.0, 0.0
        for m in degrees:
            for k in range(fields):
                r = cb.localized_pestov_residual(cb.random_field(rng, G.grid, degree=degree, harmonic=m), G, m)
                worst = max(worst, r.relative)
                ortho = max(ortho, r.orthogonality)
                rows.append({"m": m, "field": k, "relative": r.relative, "orthogonality": r.orthogonality,
                             "divergence": r.divergence})
        return [Check("localized/identity", worst, tol, {"degrees": list(degrees)}),
                Check("localized/orthogonality", ortho, orthogonality_tol)], rows
    return _timed("localized", body)


# exact constants


def pinching(ns=(7,), delta: Optional[float] = None, tol: float = 1e-12) -> SuiteResult:
    """Threshold table; the check is that the margin vanishes at δ = δ*."""
    def body():
        rows, checks = [], []
        for n in ns:
            row = rt.pinching_row(n, delta)
            rows.append(row.to_dict())
            d = row.delta_star
            if d is rt.UNKNOWN or d == 0:
                continue
            checks.append(Check(f"pinching/margin-{n}", abs(rt.epsilon_margin(float(d), n)), tol,
                                {"delta_star": str(d)}))
        return checks, rows
    return _timed("pinching", body)


def tomo(max_m: int = 40, max_n: int = 40, doubled_field_term: bool = False) -> SuiteResult:
    """Exact sweep; the residual is the number of (m, n) where the two forms of C differ."""
    def body():
        table = tc.sweep(max_m, max_n, doubled_field_term)
        rows = [{"m": r.m, "n": r.n, "C": str(r.quadratic), "C_closed": str(r.closed), "equal": int(r.equal)}
                for r in table]
        mismatches = sum(not r.equal for r in table)
        intro = sum(tc.coeffs(2, n, doubled_field_term).C != tc.intro_specialization(n)
                    for n in range(2, max_n + 1))
        return [Check("tomo/closed-form", float(mismatches), 0.5, {"cases": len(table)}),
                Check("tomo/intro-form", float(intro), 0.5, {"cases": max_n - 1})], rows
    return _timed("tomo", body)


def poincare(n: int = 3, seed: int = 0, functions: int = 50, resolution: Optional[int] = None,
             tol: float = 1e-6) -> SuiteResult:
    """Extremizer ratio and the upper bound over random degree-two polynomials."""
    def body():
        rule = rt.haar_rule(n, resolution)
        rng = np.random.default_rng(seed)
        extremal = rt.poincare_check(rt.matrix_entry(2, 1), n, rule=rule).ratio
        rows = [{"function": "w21", "ratio": extremal}]
        worst = 0.0
        for k in range(functions):
            r = rt.poincare_check(rt.random_matrix_polynomial(rng, n), n, rule=rule).ratio
            worst = max(worst, r)
            rows.append({"function": f"random-{k}", "ratio": r})
        return [Check("poincare/extremizer", abs(extremal - 1.0), tol),
                Check("poincare/upper-bound", max(0.0, worst - 1.0), tol, {"max_ratio": worst})], rows
    return _timed("poincare", body)


SUITES = ("tensors", "brackets", "jacobi", "pestov", "localized", "pinching", "tomo", "poincare")
