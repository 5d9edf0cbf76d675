"""Built-in magnetic systems used as test fixtures and CLI targets."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .manifold import ChartedMetric, MagneticSystem

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class TrigPoly:
    """Real trigonometric polynomial ``c + Σ a_t cos(k_t·x) + b_t sin(k_t·x)``.

    Evaluation accepts points of shape ``(..., n)``.
    """

    waves: np.ndarray
    cos: np.ndarray
    sin: np.ndarray
    const: float = 0.0

    @classmethod
    def from_terms(cls, n: int, terms, const: float = 0.0) -> "TrigPoly":
        """``terms`` is a list of ``(wavevector, cos_coeff, sin_coeff)``."""
        terms = list(terms)
        if not terms:
            return cls(np.zeros((0, n), dtype=int), np.zeros(0), np.zeros(0), float(const))
        waves = np.array([t[0] for t in terms], dtype=int).reshape(len(terms), n)
        return cls(waves, np.array([t[1] for t in terms], float),
                   np.array([t[2] for t in terms], float), float(const))

    @classmethod
    def constant(cls, n: int, c: float) -> "TrigPoly":
        return cls.from_terms(n, [], c)

    @classmethod
    def random(cls, rng: np.random.Generator, n: int, degree: int, count: int,
               scale: float = 1.0, const: float = 0.0) -> "TrigPoly":
        terms = []
        for _ in range(count):
            k = rng.integers(-degree, degree + 1, size=n)
            terms.append((k, scale * rng.standard_normal(), scale * rng.standard_normal()))
        return cls.from_terms(n, terms, const)

    @property
    def n(self) -> int:
        return self.waves.shape[1]

    @property
    def degree(self) -> int:
        return int(np.abs(self.waves).max()) if self.waves.size else 0

    def _phase(self, p):
        return np.asarray(p, dtype=float) @ self.waves.T

    def value(self, p):
        ph = self._phase(p)
        return self.const + np.cos(ph) @ self.cos + np.sin(ph) @ self.sin

    def grad(self, p):
        ph = self._phase(p)
        w = -np.sin(ph) * self.cos + np.cos(ph) * self.sin
        return w @ self.waves

    def hess(self, p):
        ph = self._phase(p)
        w = -(np.cos(ph) * self.cos + np.sin(ph) * self.sin)
        return np.einsum("...t,ti,tj->...ij", w, self.waves, self.waves)

    def to_config(self) -> dict:
        return {"const": self.const,
                "terms": [[list(map(int, k)), float(a), float(b)]
                          for k, a, b in zip(self.waves, self.cos, self.sin)]}


class LogConformal:
    """Conformal exponent ``log 2 - log(1 + s|x|^2)``: round sphere for s = 1, Poincaré ball for s = -1."""

    def __init__(self, n: int, curvature_sign: int):
        self.n = n
        self.s = float(curvature_sign)

    def value(self, p):
        p = np.asarray(p, dtype=float)
        return np.log(2.0) - np.log1p(self.s * np.sum(p * p, axis=-1))

    def grad(self, p):
        p = np.asarray(p, dtype=float)
        q = 1 + self.s * np.sum(p * p, axis=-1)
        return -2 * self.s * p / q[..., None]

    def hess(self, p):
        p = np.asarray(p, dtype=float)
        q = 1 + self.s * np.sum(p * p, axis=-1)
        eye = np.eye(self.n)
        return (-2 * self.s * eye / q[..., None, None]
                + 4 * self.s ** 2 * np.einsum("...i,...j->...ij", p, p) / (q ** 2)[..., None, None])


def conformal_metric(n: int, phi, period=None, name: str = "") -> ChartedMetric:
    """Metric ``e^{2φ} Id`` with analytic derivatives from φ's gradient and Hessian."""
    eye = np.eye(n)

    def g(p):
        return np.exp(2 * phi.value(p)) * eye

    def dg(p):
        return 2 * phi.grad(p)[:, None, None] * g(p)

    def d2g(p):
        grad = phi.grad(p)
        return (4 * np.outer(grad, grad) + 2 * phi.hess(p))[:, :, None, None] * g(p)

    return ChartedMetric(n, g, dg, d2g, period=period, name=name)


AREA_FORM_2D = np.array([[0.0, 1.0], [-1.0, 0.0]])


def surface_field(metric_phi, intensity) -> tuple[Callable, Callable]:
    """σ = b · (Riemannian area form) on a conformal surface, so that Ω = b · (rotation by +90°)."""

    def sigma(p):
        return intensity.value(p) * np.exp(2 * metric_phi.value(p)) * AREA_FORM_2D

    def dsigma(p):
        scale = np.exp(2 * metric_phi.value(p))
        d = (intensity.grad(p) + 2 * intensity.value(p) * metric_phi.grad(p)) * scale
        return d[:, None, None] * AREA_FORM_2D

    return sigma, dsigma


def component_form(n: int, components: dict) -> tuple[Callable, Callable]:
    """σ with ``σ_ij = components[(i, j)]`` (i < j), each a :class:`TrigPoly`."""

    def sigma(p):
        s = np.zeros((n, n))
        for (i, j), f in components.items():
            s[i, j] = f.value(p)
            s[j, i] = -s[i, j]
        return s

    def dsigma(p):
        d = np.zeros((n, n, n))
        for (i, j), f in components.items():
            gr = f.grad(p)
            d[:, i, j] = gr
            d[:, j, i] = -gr
        return d

    return sigma, dsigma


def complex_structure(n: int) -> np.ndarray:
    """Standard J on R^{2k}: ``J e_{2i} = e_{2i+1}``."""
    J = np.zeros((n, n))
    for i in range(0, n, 2):
        J[i + 1, i] = 1.0
        J[i, i + 1] = -1.0
    return J


def _torus(n):
    return {"domain": "torus", "period": [TWO_PI] * n}


def flat_torus(n: int, sigma_matrix: Optional[np.ndarray] = None) -> MagneticSystem:
    zero = TrigPoly.constant(n, 0.0)
    metric = conformal_metric(n, zero, period=[TWO_PI] * n, name=f"flat-t{n}")
    s = np.zeros((n, n)) if sigma_matrix is None else np.asarray(sigma_matrix, float)
    return MagneticSystem(metric, lambda p: s.copy(), lambda p: np.zeros((n, n, n)),
                          True, f"flat-t{n}", _torus(n))


def constant_field(b: float = 1.0) -> MagneticSystem:
    """Flat T² with σ = b dx₁∧dx₂ (Larmor circles of radius 1/b)."""
    zero = TrigPoly.constant(2, 0.0)
    sigma, dsigma = surface_field(zero, TrigPoly.constant(2, b))
    metric = conformal_metric(2, zero, period=[TWO_PI] * 2, name="constant-field")
    return MagneticSystem(metric, sigma, dsigma, True, "constant-field", {**_torus(2), "b": b})


DEFAULT_PHI = TrigPoly.from_terms(2, [((1, 0), 0.1, 0.0), ((1, 1), 0.0, 0.05)])
DEFAULT_B = TrigPoly.from_terms(2, [((0, 1), 0.0, 0.3), ((1, -1), 0.2, 0.0)], const=0.7)


def conformal_t2(phi: TrigPoly = DEFAULT_PHI, b: TrigPoly = DEFAULT_B) -> MagneticSystem:
    """T² with metric e^{2φ}|dx|² and field intensity b(x)."""
    metric = conformal_metric(2, phi, period=[TWO_PI] * 2, name="conformal-t2")
    sigma, dsigma = surface_field(phi, b)
    return MagneticSystem(metric, sigma, dsigma, True, "conformal-t2",
                          {**_torus(2), "phi": phi, "b": b})


def round_sphere(n: int = 2, b: float = 0.0) -> MagneticSystem:
    """Unit sphere in stereographic coordinates; for n = 2 an optional constant field b."""
    phi = LogConformal(n, 1)
    metric = conformal_metric(n, phi, name="sphere")
    if n == 2:
        sigma, dsigma = surface_field(phi, TrigPoly.constant(2, b))
    else:
        sigma, dsigma = (lambda p: np.zeros((n, n))), (lambda p: np.zeros((n, n, n)))
    return MagneticSystem(metric, sigma, dsigma, True, "sphere",
                          {"domain": "ball", "radius": 0.8, "chart_radius": 10.0, "phi": phi, "b": b})


def hyperbolic_disk(n: int = 2, b: float = 0.0) -> MagneticSystem:
    """Curvature -1 on the Poincaré ball; for n = 2 an optional constant field b."""
    phi = LogConformal(n, -1)
    metric = conformal_metric(n, phi, name="hyperbolic")
    if n == 2:
        sigma, dsigma = surface_field(phi, TrigPoly.constant(2, b))
    else:
        sigma, dsigma = (lambda p: np.zeros((n, n))), (lambda p: np.zeros((n, n, n)))
    return MagneticSystem(metric, sigma, dsigma, True, "hyperbolic",
                          {"domain": "ball", "radius": 0.5, "chart_radius": 1.0, "phi": phi, "b": b})


def kahler_t4(c: float = 1.0) -> MagneticSystem:
    """Flat T⁴ with Ω = c·J; σ is then parallel, hence closed."""
    omega = c * complex_structure(4)
    system = flat_torus(4, sigma_matrix=omega.T)
    system.name = "kahler-t4"
    system.params["c"] = c
    return system


NONCLOSED_T3_FORM = {
    (0, 1): TrigPoly.from_terms(3, [((0, 0, 1), 0.0, 0.4)], const=0.6),
    (1, 2): TrigPoly.from_terms(3, [((1, 0, 0), 0.3, 0.0)]),
    (0, 2): TrigPoly.from_terms(3, [((0, 1, 1), 0.0, 0.25)]),
}


def nonclosed_t3(components: Optional[dict] = None) -> MagneticSystem:
    """Flat T³ with a 2-form whose exterior derivative does not vanish."""
    comps = NONCLOSED_T3_FORM if components is None else components
    zero = TrigPoly.constant(3, 0.0)
    metric = conformal_metric(3, zero, period=[TWO_PI] * 3, name="nonclosed-t3")
    sigma, dsigma = component_form(3, comps)
    return MagneticSystem(metric, sigma, dsigma, False, "nonclosed-t3",
                          {**_torus(3), "form": comps})


DEFAULT_PHI3 = TrigPoly.from_terms(3, [((1, 0, 0), 0.1, 0.0), ((0, 1, -1), 0.0, 0.08)])


def conformal_t3(phi: TrigPoly = DEFAULT_PHI3, components: Optional[dict] = None) -> MagneticSystem:
    """Conformally flat T³ carrying the non-closed form of :func:`nonclosed_t3`."""
    comps = NONCLOSED_T3_FORM if components is None else components
    metric = conformal_metric(3, phi, period=[TWO_PI] * 3, name="conformal-t3")
    sigma, dsigma = component_form(3, comps)
    return MagneticSystem(metric, sigma, dsigma, False, "conformal-t3",
                          {**_torus(3), "phi": phi, "form": comps})


def linear_field_t3() -> MagneticSystem:
    """Flat chart of R³ with σ = x₃ dx₁∧dx₂, the simplest non-closed form."""
    zero = TrigPoly.constant(3, 0.0)
    metric = conformal_metric(3, zero, name="linear-field")
    def sigma(p):
        s = np.zeros((3, 3))
        s[0, 1], s[1, 0] = p[2], -p[2]
        return s
    def dsigma(p):
        d = np.zeros((3, 3, 3))
        d[2, 0, 1], d[2, 1, 0] = 1.0, -1.0
        return d
    return MagneticSystem(metric, sigma, dsigma, False, "linear-field",
                          {"domain": "ball", "radius": 1.0})


BUILTINS: dict[str, Callable[..., MagneticSystem]] = {
    "flat-t2": lambda **kw: flat_torus(2, **kw),
    "flat-t3": lambda **kw: flat_torus(3, **kw),
    "flat-t4": lambda **kw: flat_torus(4, **kw),
    "constant-field": constant_field,
    "conformal-t2": conformal_t2,
    "sphere": round_sphere,
    "hyperbolic": hyperbolic_disk,
    "kahler-t4": kahler_t4,
    "nonclosed-t3": nonclosed_t3,
    "conformal-t3": conformal_t3,
}


def builtin(name: str, **params) -> MagneticSystem:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown system {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(**params)


def sample_point(system: MagneticSystem, rng: np.random.Generator) -> np.ndarray:
    """Random chart point inside the system's sampling domain."""
    n = system.n
    if system.params.get("domain") == "torus":
        return rng.uniform(0, TWO_PI, size=n)
    radius = system.params.get("radius", 0.5)
    x = rng.standard_normal(n)
    return radius * rng.uniform() ** (1 / n) * x / np.linalg.norm(x)


def _poly_from_config(n: int, cfg) -> TrigPoly:
    if isinstance(cfg, (int, float)):
        return TrigPoly.constant(n, float(cfg))
    unknown = set(cfg) - {"const", "terms"}
    if unknown:
        raise ValueError(f"unknown trig polynomial keys: {sorted(unknown)}")
    return TrigPoly.from_terms(n, [(t[0], t[1], t[2]) for t in cfg.get("terms", [])],
                               cfg.get("const", 0.0))


def system_from_config(cfg: dict) -> MagneticSystem:
    """Build a system from a parsed ``[system]`` table.

    Accepted keys: ``name`` plus, depending on the builtin, ``b``, ``c``,
    ``phi`` (trig polynomial table), ``n`` and ``fd_step``.
    """
    cfg = dict(cfg)
    name = cfg.pop("name", None)
    if name is None:
        raise ValueError("system table needs a 'name'")
    fd_step = cfg.pop("fd_step", None)
    analytic = cfg.pop("analytic", True)
    params = {}
    if name == "conformal-t2":
        if "phi" in cfg:
            params["phi"] = _poly_from_config(2, cfg.pop("phi"))
        if "b" in cfg:
            params["b"] = _poly_from_config(2, cfg.pop("b"))
    elif name == "conformal-t3":
        if "phi" in cfg:
            params["phi"] = _poly_from_config(3, cfg.pop("phi"))
    elif name in ("constant-field", "sphere", "hyperbolic"):
        if "b" in cfg:
            params["b"] = float(cfg.pop("b"))
        if name != "constant-field" and "n" in cfg:
            params["n"] = int(cfg.pop("n"))
    elif name == "kahler-t4":
        if "c" in cfg:
            params["c"] = float(cfg.pop("c"))
    if cfg:
        raise ValueError(f"unknown keys for system {name!r}: {sorted(cfg)}")
    system = builtin(name, **params)
    if fd_step is not None:
        system.metric.fd_step = float(fd_step)
    if not analytic:
        system = system.without_analytic_derivatives()
    return system
