"""Magnetic geodesics, the magnetic frame flow and magnetic Jacobi fields.

All integrators are fixed-step classical RK4 so trajectories are reproducible
bit for bit. Jacobi data ``(a, H, V)`` are components in the moving frame
carried by the magnetic frame flow; in that frame the covariant derivative
along the flow is the plain time derivative.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .framebundle import FramePoint, magnetic_generator, orthonormalize
from .liealg import basis_vector
from .magtensor import curvature, curvature_sample, frame_omega, tangential_matrix
from .manifold import MagneticSystem, christoffel, lorentz

DRIFT_TOL = 1e-9


class ChartExit(RuntimeError):
    """Raised when a trajectory leaves the domain of a non-periodic chart."""


def rk4_step(f: Callable, y, dt: float):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _step_count(T: float, dt: float) -> tuple[int, float]:
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps = int(round(abs(T) / dt))
    if steps == 0:
        return 0, 0.0
    return steps, np.sign(T) * abs(T) / steps


def _check_domain(system: MagneticSystem, p) -> None:
    limit = system.params.get("chart_radius", 1.0)
    if system.params.get("domain") == "ball" and np.dot(p, p) >= 0.999 * limit ** 2:
        raise ChartExit(f"trajectory left the chart at {p}")


@dataclass
class GeodesicTrajectory:
    t: np.ndarray
    p: np.ndarray
    v: np.ndarray


def magnetic_vector_field(system: MagneticSystem) -> Callable:
    """Right-hand side of ``p' = v, v' = -Γ(v, v) + Ω v`` on stacked states."""
    n = system.n

    def f(y):
        p, v = y[:n], y[n:]
        acc = -np.einsum("kij,i,j->k", christoffel(system.metric, p), v, v) + lorentz(system, p) @ v
        return np.concatenate([v, acc])

    return f


def integrate_geodesic(system: MagneticSystem, p, v, T: float, dt: float = 1e-3) -> GeodesicTrajectory:
    """Magnetic geodesic with initial data ``(p, v)``; ``T`` may be negative."""
    n = system.n
    f = magnetic_vector_field(system)
    steps, h = _step_count(T, dt)
    y = np.concatenate([np.asarray(p, float), np.asarray(v, float)])
    out = np.empty((steps + 1, 2 * n))
    out[0] = y
    for i in range(steps):
        y = rk4_step(f, y, h)
        _check_domain(system, y[:n])
        out[i + 1] = y
    return GeodesicTrajectory(h * np.arange(steps + 1), out[:, :n], out[:, n:])


def speed(system: MagneticSystem, p, v) -> float:
    return float(np.sqrt(v @ system.metric.g(p) @ v))


@dataclass
class FrameTrajectory:
    t: np.ndarray
    p: np.ndarray
    W: np.ndarray

    def frame(self, i: int) -> FramePoint:
        return FramePoint(self.p[i], self.W[i])

    def __len__(self) -> int:
        return self.t.size


def _pack(p, W):
    return np.concatenate([p, W.ravel()])


def _unpack(y, n):
    return y[:n], y[n:n + n * n].reshape(n, n)


def frame_flow_field(system: MagneticSystem) -> Callable:
    n = system.n
    X = magnetic_generator(system)

    def f(y):
        p, W = _unpack(y, n)
        dp, dW = X(FramePoint(p, W))
        return _pack(dp, dW)

    return f


def _reproject(system, y, n):
    p, W = _unpack(y, n)
    gram = W.T @ system.metric.g(p) @ W
    if np.abs(gram - np.eye(n)).max() > DRIFT_TOL:
        y = y.copy()
        y[n:n + n * n] = orthonormalize(system, p, W).ravel()
    return y


def integrate_frame_flow(system: MagneticSystem, w: FramePoint, T: float,
                         dt: float = 1e-3) -> FrameTrajectory:
    """Flow of ``X^σ``; the frame is polar-projected back whenever its drift exceeds 1e-9."""
    n = system.n
    f = frame_flow_field(system)
    steps, h = _step_count(T, dt)
    y = _pack(w.p, w.W)
    P = np.empty((steps + 1, n))
    Ws = np.empty((steps + 1, n, n))
    P[0], Ws[0] = w.p, w.W
    for i in range(steps):
        y = _reproject(system, rk4_step(f, y, h), n)
        _check_domain(system, y[:n])
        P[i + 1], Ws[i + 1] = _unpack(y, n)
    return FrameTrajectory(h * np.arange(steps + 1), P, Ws)


def time_derivative(samples, dt: float) -> np.ndarray:
    """Fourth-order finite-difference derivative along axis 0 of uniform samples."""
    f = np.asarray(samples, dtype=float)
    if f.shape[0] < 5:
        raise ValueError("need at least five samples")
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / 12
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / 12
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / 12
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / 12
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / 12
    return d / dt


def frame_components(system: MagneticSystem, traj: FrameTrajectory, s) -> np.ndarray:
    """Components ``W⁻¹ s = Wᵀ g s`` of chart vectors sampled along a trajectory."""
    return np.array([W.T @ system.metric.g(p) @ v for p, W, v in zip(traj.p, traj.W, s)])


def magnetic_covariant_derivative(system: MagneticSystem, traj: FrameTrajectory, s,
                                  tol: float = 1e-8) -> np.ndarray:
    """``∇ᵗσ s`` for normal fields sampled along a magnetic frame-flow trajectory."""
    comps = frame_components(system, traj, s)
    scale = max(1.0, float(np.abs(comps).max()))
    if np.abs(comps[:, 0]).max() > tol * scale:
        raise ValueError("field is not normal to the velocity")
    comps[:, 0] = 0.0
    dt = traj.t[1] - traj.t[0]
    dc = time_derivative(comps, dt)
    dc[:, 0] = 0.0
    return np.einsum("tij,tj->ti", traj.W, dc)


@dataclass
class JacobiState:
    a: float
    H: np.ndarray
    V: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.a], self.H, self.V])


@dataclass
class JacobiTrajectory:
    t: np.ndarray
    a: np.ndarray
    H: np.ndarray
    V: np.ndarray
    frames: Optional[FrameTrajectory] = None

    def state(self, i: int) -> JacobiState:
        return JacobiState(float(self.a[i]), self.H[i], self.V[i])

    def stacked(self) -> np.ndarray:
        return np.column_stack([self.a, self.H, self.V])


def _tangential_at(system, p, W) -> tuple[np.ndarray, np.ndarray]:
    C = curvature_sample(system, FramePoint(p, W))
    return tangential_matrix(C), C.omega[1:, 0]


def jacobi_propagate(system: MagneticSystem, w0: FramePoint, J0: JacobiState, T: float,
                     dt: float = 1e-3) -> JacobiTrajectory:
    """Solve ``a' = <H, Ω v>, H' = V, V' = -M^σ H`` alongside the frame flow."""
    n = system.n
    m = n - 1
    flow = frame_flow_field(system)
    base = n + n * n

    def f(y):
        p, W = _unpack(y, n)
        H, V = y[base + 1:base + 1 + m], y[base + 1 + m:]
        M, omega_v = _tangential_at(system, p, W)
        return np.concatenate([flow(y[:base]), [omega_v @ H], V, -M @ H])

    steps, h = _step_count(T, dt)
    y = np.concatenate([_pack(w0.p, w0.W), J0.as_array()])
    out = np.empty((steps + 1, y.size))
    out[0] = y
    for i in range(steps):
        y = rk4_step(f, y, h)
        y[:base] = _reproject(system, y[:base], n)
        _check_domain(system, y[:n])
        out[i + 1] = y
    t = h * np.arange(steps + 1)
    frames = FrameTrajectory(t, out[:, :n], out[:, n:base].reshape(-1, n, n))
    return JacobiTrajectory(t, out[:, base], out[:, base + 1:base + 1 + m],
                            out[:, base + 1 + m:], frames)


def jacobi_propagate_frame_form(system: MagneticSystem, w0: FramePoint, a0: float, H0, V0,
                                T: float, dt: float = 1e-3) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Frame-bundle form: ``a' = <H, Ω e₁>, H' = V e₁, V' = -R^σ(H, e₁)`` with V in so(n).

    Returns ``(t, a, H, V)`` with H as normal components and V as n×n matrices.
    """
    n = system.n
    m = n - 1
    flow = frame_flow_field(system)
    base = n + n * n
    e1 = basis_vector(n, 0)

    def f(y):
        p, W = _unpack(y, n)
        H = y[base + 1:base + 1 + m]
        V = y[base + 1 + m:].reshape(n, n)
        C = curvature_sample(system, FramePoint(p, W))
        Hn = np.concatenate([[0.0], H])
        dV = -curvature(C, Hn, e1)
        return np.concatenate([flow(y[:base]), [C.omega[:, 0] @ Hn], (V @ e1)[1:], dV.ravel()])

    steps, h = _step_count(T, dt)
    y = np.concatenate([_pack(w0.p, w0.W), [a0], np.asarray(H0, float), np.asarray(V0, float).ravel()])
    out = np.empty((steps + 1, y.size))
    out[0] = y
    for i in range(steps):
        y = rk4_step(f, y, h)
        y[:base] = _reproject(system, y[:base], n)
        out[i + 1] = y
    t = h * np.arange(steps + 1)
    return t, out[:, base], out[:, base + 1:base + 1 + m], out[:, base + 1 + m:].reshape(-1, n, n)


def jacobi_to_chart(system: MagneticSystem, w: FramePoint, J: JacobiState) -> tuple[np.ndarray, np.ndarray]:
    """Tangent vector ``a X^σ + H̃ + V^∨`` of TM in chart coordinates ``(δp, δv)``.

    ``H̃`` is the projection of ``B^σ_H``: horizontal lift of ``w H`` plus the
    vertical correction ``½ w[Ω H]^⊥``.
    """
    n = system.n
    p, W = w.p, w.W
    G = christoffel(system.metric, p)
    v = W[:, 0]
    Hn = np.concatenate([[0.0], J.H])
    Vn = np.concatenate([[0.0], J.V])
    om = frame_omega(system, w)
    corr = om @ Hn
    corr[0] = 0.0
    dp = W @ (J.a * basis_vector(n, 0) + Hn)
    connector = J.a * (lorentz(system, p) @ v) + W @ (0.5 * corr + Vn)
    dv = connector - np.einsum("kij,i,j->k", G, dp, v)
    return dp, dv


def chart_to_jacobi(system: MagneticSystem, w: FramePoint, dp, dv) -> JacobiState:
    """Inverse of :func:`jacobi_to_chart`."""
    p, W = w.p, w.W
    g = system.metric.g(p)
    G = christoffel(system.metric, p)
    v = W[:, 0]
    coords = W.T @ g @ dp
    a = coords[0]
    H = coords[1:]
    connector = dv + np.einsum("kij,i,j->k", G, dp, v)
    om = frame_omega(system, w)
    Hn = np.concatenate([[0.0], H])
    corr = om @ Hn
    corr[0] = 0.0
    Vn = W.T @ g @ (connector - a * (lorentz(system, p) @ v)) - 0.5 * corr
    return JacobiState(float(a), H, Vn[1:])


def jacobi_fd_oracle(system: MagneticSystem, w0: FramePoint, Z: JacobiState, T: float,
                     dt: float = 1e-3, eps: float = 1e-5) -> JacobiTrajectory:
    """Central-difference variation of the magnetic flow, read in the moving frame.

    Two geodesics start at ``(p, v) ± eps Z``; their phase-space difference
    divided by ``2 eps`` is decomposed along the unperturbed frame flow.
    """
    dp0, dv0 = jacobi_to_chart(system, w0, Z)
    p0, v0 = w0.p, w0.W[:, 0]
    plus = integrate_geodesic(system, p0 + eps * dp0, v0 + eps * dv0, T, dt)
    minus = integrate_geodesic(system, p0 - eps * dp0, v0 - eps * dv0, T, dt)
    frames = integrate_frame_flow(system, w0, T, dt)
    states = [chart_to_jacobi(system, frames.frame(i), (plus.p[i] - minus.p[i]) / (2 * eps),
                              (plus.v[i] - minus.v[i]) / (2 * eps))
              for i in range(len(frames))]
    return JacobiTrajectory(frames.t, np.array([s.a for s in states]),
                            np.array([s.H for s in states]), np.array([s.V for s in states]), frames)


def _hermite(h0, h1, d0, d1, s, step):
    """Cubic Hermite interpolation at fraction ``s`` of a step."""
    h00 = 2 * s ** 3 - 3 * s ** 2 + 1
    h10 = s ** 3 - 2 * s ** 2 + s
    h01 = -2 * s ** 3 + 3 * s ** 2
    h11 = s ** 3 - s ** 2
    return h00 * h0 + h10 * step * d0 + h01 * h1 + h11 * step * d1


def conjugate_points(system: MagneticSystem, w0: FramePoint, T: float, dt: float = 1e-3) -> list[float]:
    """Zeros of ``det H(t)`` for the vertical-start Jacobi basis (H₀ = 0, V₀ = e_j).

    Sign changes on the step grid are refined by bisection on a cubic Hermite
    interpolant (H' = V) down to ``dt / 100``. Multiplicity is not reported.
    """
    n = system.n
    m = n - 1
    flow = frame_flow_field(system)
    base = n + n * n

    def f(y):
        p, W = _unpack(y, n)
        H = y[base:base + m * m].reshape(m, m)
        V = y[base + m * m:].reshape(m, m)
        M, _ = _tangential_at(system, p, W)
        return np.concatenate([flow(y[:base]), V.ravel(), (-M @ H).ravel()])

    steps, h = _step_count(T, dt)
    y = np.concatenate([_pack(w0.p, w0.W), np.zeros(m * m), np.eye(m).ravel()])
    times = []
    prev_H, prev_V = np.zeros((m, m)), np.eye(m)
    prev_det = None
    for i in range(steps):
        y = rk4_step(f, y, h)
        y[:base] = _reproject(system, y[:base], n)
        _check_domain(system, y[:n])
        H = y[base:base + m * m].reshape(m, m)
        V = y[base + m * m:].reshape(m, m)
        det = np.linalg.det(H)
        if prev_det is not None and np.sign(det) != np.sign(prev_det) and det != 0:
            lo, hi = 0.0, 1.0
            d_lo = prev_det
            while (hi - lo) * h > dt / 100:
                mid = 0.5 * (lo + hi)
                d_mid = np.linalg.det(_hermite(prev_H, H, prev_V, V, mid, h))
                if np.sign(d_mid) == np.sign(d_lo):
                    lo, d_lo = mid, d_mid
                else:
                    hi = mid
            times.append(float((i + 0.5 * (lo + hi)) * h))
        if i > 0 or det != 0:
            prev_det = det
        prev_H, prev_V = H.copy(), V.copy()
    return times


def write_trajectory_csv(path, frames: FrameTrajectory, jacobi: Optional[JacobiTrajectory] = None) -> None:
    """CSV with columns t, p*, W[i][j]*, and a, H*, V* when Jacobi data is given."""
    n = frames.p.shape[1]
    header = ["t"] + [f"p{i}" for i in range(n)] + [f"W{i}{j}" for i in range(n) for j in range(n)]
    if jacobi is not None:
        header += ["a"] + [f"H{j}" for j in range(n - 1)] + [f"V{j}" for j in range(n - 1)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(frames)):
            row = [frames.t[i], *frames.p[i], *frames.W[i].ravel()]
            if jacobi is not None:
                row += [jacobi.a[i], *jacobi.H[i], *jacobi.V[i]]
            writer.writerow([repr(float(x)) for x in row])
