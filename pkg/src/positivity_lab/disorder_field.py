"""Mixed p-spin Gaussian perturbation ``g(z) = v sum_p 2^-p x_p g_p(z)``.

Three backends:

* ``covariance`` -- exact sampling of the field restricted to a finite
  support, through a Cholesky factor of ``xi(gram) + jitter * I``.
* ``tensor`` -- explicit i.i.d. coefficient tensors ``g_{i1...ip}``; usable
  off the support but only for tiny ``N ** p_max``.
* ``first_order`` -- only the linear term ``v sum_i g_i z_i`` with covariance
  ``v^2 z1 . z2``.

Fields are linear in ``v``: every sampler draws the ``v = 1`` field and
multiplies, so a disorder draw can be reused across a grid of ``v``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .sphere_measure import UnitVector

__all__ = [
    "BACKENDS",
    "FieldSpec",
    "DisorderRealization",
    "FieldSampler",
    "sample_x",
    "xi",
    "xi_matrix",
    "covariance_matrix",
    "psd_factor",
    "sample_field_covariance",
    "sample_field_tensor",
    "evaluate_g",
    "evaluate_component",
    "component_factors",
    "sample_components",
    "sup_abs_field",
]

BACKENDS = ("covariance", "tensor", "first_order")
P_MAX_LIMIT = 30
DEFAULT_TENSOR_BUDGET = 10**7
MAX_JITTER = 1e-6


@dataclass(frozen=True)
class FieldSpec:
    v: float
    p_max: int = 12
    backend: str = "covariance"
    jitter: float = 1e-10

    def __post_init__(self):
        if not np.isfinite(self.v) or self.v < 0:
            raise ValueError(f"v must be a finite nonnegative number, got {self.v!r}")
        if not 1 <= self.p_max <= P_MAX_LIMIT:
            raise ValueError(f"p_max must lie in [1, {P_MAX_LIMIT}], got {self.p_max!r}")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; choose from {BACKENDS}")
        if self.jitter < 0:
            raise ValueError("jitter must be nonnegative")

    def with_v(self, v: float) -> "FieldSpec":
        return FieldSpec(v, self.p_max, self.backend, self.jitter)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "FieldSpec":
        return cls(
            v=float(doc["v"]),
            p_max=int(doc.get("p_max", 12)),
            backend=str(doc.get("backend", "covariance")),
            jitter=float(doc.get("jitter", 1e-10)),
        )

    @classmethod
    def from_json(cls, text: str) -> "FieldSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class DisorderRealization:
    """One draw of the disorder.

    ``tensors[p-1]`` holds the order-``p`` coefficient array (tensor backend
    only). ``field_values`` are the field at the support atoms, if a support
    was given.
    """

    v: float
    x: np.ndarray
    field_values: np.ndarray | None = None
    tensors: tuple[np.ndarray, ...] | None = None
    jitter: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if np.any((x < 0) | (x > 1)):
            raise ValueError("x_p must lie in [0, 1]")
        object.__setattr__(self, "x", x)
        if self.field_values is not None:
            fv = np.asarray(self.field_values, dtype=float)
            if not np.all(np.isfinite(fv)):
                raise ValueError("non-finite field value")
            object.__setattr__(self, "field_values", fv)

    @property
    def p_max(self) -> int:
        return self.x.size

    def scaled(self, v: float) -> "DisorderRealization":
        """Same Gaussian coefficients and uniforms, strength ``v``."""
        if self.v == 0:
            raise ValueError("cannot rescale a v=0 realization")
        fv = None if self.field_values is None else self.field_values * (v / self.v)
        return DisorderRealization(v, self.x, fv, self.tensors, self.jitter)


def sample_x(p_max: int, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. Uniform[0, 1] weights of the p-spin components."""
    if p_max < 1:
        raise ValueError("p_max must be at least 1")
    return rng.uniform(0.0, 1.0, size=p_max)


def _xi_coefficients(x: np.ndarray, p_max: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size < p_max:
        raise ValueError(f"need {p_max} uniforms, got {x.size}")
    p = np.arange(1, p_max + 1)
    return 4.0 ** (-p) * x[:p_max] ** 2


def xi_matrix(s: np.ndarray, x: np.ndarray, p_max: int) -> np.ndarray:
    """Elementwise ``xi`` on an array of overlaps (no range check)."""
    c = _xi_coefficients(x, p_max)
    s = np.asarray(s, dtype=float)
    # Horner: sum_p c_p s^p = s (c_1 + s (c_2 + ...))
    acc = np.zeros_like(s)
    for cp in c[::-1]:
        acc = (acc + cp) * s
    return acc


def xi(s: float, x: np.ndarray, p_max: int) -> float:
    """Covariance function ``xi(s) = sum_{p <= p_max} 4^-p x_p^2 s^p``."""
    if abs(s) > 1.0 + 1e-12:
        raise ValueError(f"overlap {s!r} outside [-1, 1]")
    return float(xi_matrix(np.clip(s, -1.0, 1.0), x, p_max))


def _points(support) -> np.ndarray:
    if hasattr(support, "points"):
        return support.points
    pts = [p.coords if isinstance(p, UnitVector) else np.asarray(p, float) for p in support]
    if not pts:
        raise ValueError("empty support")
    return np.stack(pts)


def _unit_covariance(pts: np.ndarray, spec: FieldSpec, x) -> np.ndarray:
    gram = np.clip(pts @ pts.T, -1.0, 1.0)
    np.fill_diagonal(gram, 1.0)
    if spec.backend == "first_order":
        return gram
    if spec.backend == "tensor":
        raise ValueError("covariance route needs backend 'covariance' or 'first_order'")
    return xi_matrix(gram, x, spec.p_max)


def covariance_matrix(support, spec: FieldSpec, x: np.ndarray | None) -> np.ndarray:
    """``C_ab = v^2 xi(z_a . z_b)`` (or ``v^2 z_a . z_b`` for ``first_order``)."""
    return spec.v**2 * _unit_covariance(_points(support), spec, x)


def psd_factor(c: np.ndarray, jitter: float = 1e-10) -> tuple[np.ndarray, float]:
    """Lower factor ``L`` with ``L L^T = c + j I``, escalating ``j`` by 10x up to 1e-6.

    Returns the factor and the jitter actually used.
    """
    m = c.shape[0]
    j = jitter
    while True:
        try:
            return np.linalg.cholesky(c + j * np.eye(m)), j
        except np.linalg.LinAlgError:
            pass
        if j >= MAX_JITTER:
            raise np.linalg.LinAlgError(
                f"covariance not factorizable even with jitter {j:g}"
            )
        j = min(max(j * 10, 1e-16), MAX_JITTER)


@dataclass(frozen=True, eq=False)
class FieldSampler:
    """Factorized field law on a fixed support for a fixed ``x``.

    Immutable; share one instance between samplers on different streams.
    """

    spec: FieldSpec
    x: np.ndarray | None
    factor: np.ndarray
    jitter: float

    @classmethod
    def build(cls, support, spec: FieldSpec, x: np.ndarray | None) -> "FieldSampler":
        pts = _points(support)
        if spec.backend == "first_order":
            # C = P P^T exactly, no repair needed
            return cls(spec, x, pts.copy(), 0.0)
        # factor distinct points only; repeated atoms share a row and get identical values
        _, first, inverse = np.unique(np.round(pts, 12), axis=0, return_index=True, return_inverse=True)
        factor, used = psd_factor(_unit_covariance(pts[first], spec, x), spec.jitter)
        return cls(spec, x, factor[inverse.ravel()], used)

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Field values on the support, shape ``(M,)`` or ``(size, M)``."""
        k = self.factor.shape[1]
        shape = (k,) if size is None else (size, k)
        zeta = rng.standard_normal(shape)
        return self.spec.v * (zeta @ self.factor.T)


def sample_field_covariance(
    support, spec: FieldSpec, x: np.ndarray | None, rng: np.random.Generator, size: int | None = None
) -> np.ndarray:
    """Exact Gaussian field on ``support``; see :class:`FieldSampler`."""
    return FieldSampler.build(support, spec, x).sample(rng, size)


def sample_field_tensor(
    n_dim: int,
    spec: FieldSpec,
    x: np.ndarray,
    rng: np.random.Generator,
    support=None,
    budget: int = DEFAULT_TENSOR_BUDGET,
) -> DisorderRealization:
    """Draw every coefficient tensor explicitly; optionally evaluate on ``support``."""
    if n_dim**spec.p_max > budget:
        raise ValueError(
            f"N^p_max = {n_dim}^{spec.p_max} coefficients exceeds the tensor budget {budget}"
        )
    tensors = tuple(rng.standard_normal((n_dim,) * p) for p in range(1, spec.p_max + 1))
    real = DisorderRealization(spec.v, np.asarray(x, float)[: spec.p_max], None, tensors)
    if support is None:
        return real
    pts = _points(support)
    values = np.array([_evaluate(real, z) for z in pts])
    return DisorderRealization(spec.v, real.x, values, tensors)


def _contract(t: np.ndarray, z: np.ndarray) -> float:
    for _ in range(t.ndim):
        t = t @ z
    return float(t)


def evaluate_component(real: DisorderRealization, z, p: int) -> float:
    """``g_p(z) = sum g_{i1..ip} z_i1 ... z_ip`` for one order ``p``."""
    if real.tensors is None:
        raise ValueError("field known only on support: realization has no tensors")
    if not 1 <= p <= len(real.tensors):
        raise ValueError(f"order {p} outside 1..{len(real.tensors)}")
    zc = z.coords if isinstance(z, UnitVector) else np.asarray(z, float)
    return _contract(real.tensors[p - 1], zc)


def _evaluate(real: DisorderRealization, z: np.ndarray) -> float:
    total = 0.0
    for p, t in enumerate(real.tensors, start=1):
        total += 2.0**-p * real.x[p - 1] * _contract(t, z)
    return real.v * total


def evaluate_g(real: DisorderRealization, z) -> float:
    """Truncated field ``v sum_{p <= p_max} 2^-p x_p g_p(z)`` at any point."""
    if real.tensors is None:
        raise ValueError("field known only on support: realization has no tensors")
    zc = z.coords if isinstance(z, UnitVector) else np.asarray(z, float)
    return _evaluate(real, zc)


def component_factors(support, p_max: int, jitter: float = 1e-10) -> list[np.ndarray]:
    """Cholesky factors of ``gram^p`` (elementwise), one per order ``p``."""
    pts = _points(support)
    gram = np.clip(pts @ pts.T, -1.0, 1.0)
    np.fill_diagonal(gram, 1.0)
    return [psd_factor(gram**p, jitter)[0] for p in range(1, p_max + 1)]


def sample_components(
    factors: Sequence[np.ndarray], rng: np.random.Generator, size: int
) -> np.ndarray:
    """Independent unit-variance p-spin fields on a support, shape ``(size, p_max, M)``.

    Combined as ``v sum_p 2^-p x_p comp[:, p-1]`` they have exactly the law of
    the full field.
    """
    out = np.empty((size, len(factors), factors[0].shape[0]))
    for i, f in enumerate(factors):
        out[:, i] = rng.standard_normal((size, f.shape[1])) @ f.T
    return out


def sup_abs_field(real: DisorderRealization | np.ndarray) -> float:
    """Largest ``|g|`` over the support atoms; a lower proxy for the sphere supremum."""
    fv = real.field_values if isinstance(real, DisorderRealization) else np.asarray(real)
    if fv is None:
        raise ValueError("realization carries no field values")
    return float(np.max(np.abs(fv))) if fv.size else 0.0
