"""Finite-support probability measures on the unit sphere.

Measures are stored as an ``(M, N)`` array of atoms plus a weight vector.
Replica averages under product measures are computed either exactly, by
enumerating every index tuple, or by i.i.d. categorical sampling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "UnitVector",
    "DiscreteMeasure",
    "ReplicaPredicate",
    "make_unit_vector",
    "overlap",
    "make_measure",
    "tilt",
    "tilt_weights",
    "enumerate_tuples",
    "product_probability_exact",
    "sample_replicas",
    "mean_overlap",
    "pair_overlap_leq",
    "all_overlaps_leq",
    "constant_predicate",
    "overlap_predicate",
    "point_mass",
    "antipodal",
    "simplex",
    "random_measure",
    "DEFAULT_ENUMERATION_BUDGET",
]

DEFAULT_ENUMERATION_BUDGET = 10**7
_UNIT_TOL = 1e-12
_CHUNK = 1 << 16


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class UnitVector:
    coords: np.ndarray

    def __post_init__(self):
        c = _frozen(self.coords)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("unit vector needs a nonempty 1-d coordinate array")
        if abs(np.linalg.norm(c) - 1.0) > _UNIT_TOL:
            raise ValueError(f"coordinates have norm {np.linalg.norm(c)!r}, expected 1")
        object.__setattr__(self, "coords", c)

    @property
    def dim(self) -> int:
        return self.coords.size

    def __eq__(self, other):
        return isinstance(other, UnitVector) and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.coords.tobytes())


def make_unit_vector(coords: Sequence[float]) -> UnitVector:
    """Scale ``coords`` onto the unit sphere."""
    c = np.asarray(coords, dtype=float).ravel()
    if c.size == 0:
        raise ValueError("empty coordinate vector")
    if not np.all(np.isfinite(c)):
        raise ValueError("non-finite coordinate")
    norm = np.linalg.norm(c)
    if norm == 0.0:
        raise ValueError("degenerate direction: zero-norm input")
    c = c / norm
    # one more pass removes the last ulp of norm error for awkward inputs
    c = c / np.linalg.norm(c)
    return UnitVector(c)


def overlap(z1: UnitVector, z2: UnitVector) -> float:
    """Scalar product of two sphere points, clamped to [-1, 1] for roundoff only."""
    if z1.dim != z2.dim:
        raise ValueError(f"dimension mismatch: {z1.dim} vs {z2.dim}")
    s = float(np.dot(z1.coords, z2.coords))
    if abs(s) > 1.0:
        if abs(s) - 1.0 > _UNIT_TOL:
            raise ValueError(f"overlap {s!r} outside [-1, 1]")
        s = float(np.sign(s))
    return s


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure with atoms ``points[a]`` and masses ``weights[a]``.

    Duplicate atoms are kept as separate entries.
    """

    points: np.ndarray
    weights: np.ndarray
    _gram: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = _frozen(self.points)
        w = _frozen(self.weights)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("points must be a nonempty (M, N) array")
        if w.shape != (pts.shape[0],):
            raise ValueError("weights and points disagree in length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > _UNIT_TOL:
            raise ValueError("weights must be nonnegative and sum to 1")
        norms = np.linalg.norm(pts, axis=1)
        if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
            raise ValueError("every atom must lie on the unit sphere")
        gram = np.clip(pts @ pts.T, -1.0, 1.0)
        np.fill_diagonal(gram, 1.0)
        gram.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_gram", gram)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def support(self) -> list[UnitVector]:
        return [UnitVector(p) for p in self.points]

    @property
    def gram(self) -> np.ndarray:
        """Matrix of pairwise overlaps of the atoms."""
        return self._gram

    def with_weights(self, weights: np.ndarray) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points, weights)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "atoms": [
                {"coords": p.tolist(), "weight": float(w)}
                for p, w in zip(self.points, self.weights)
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> "DiscreteMeasure":
        atoms = doc.get("atoms")
        if not atoms:
            raise ValueError("measure document has no atoms")
        dim = int(doc["dim"])
        pts = [make_unit_vector(a["coords"]) for a in atoms]
        if any(p.dim != dim for p in pts):
            raise ValueError(f"atom dimension differs from dim={dim}")
        return make_measure(pts, [a["weight"] for a in atoms])

    @classmethod
    def from_json(cls, text: str) -> "DiscreteMeasure":
        return cls.from_dict(json.loads(text))


def make_measure(points: Sequence[UnitVector], weights: Sequence[float]) -> DiscreteMeasure:
    """Build a measure from atoms and (possibly unnormalized) weights."""
    if len(points) == 0 or len(points) != len(weights):
        raise ValueError("need equally many atoms and weights, at least one")
    dims = {p.dim for p in points}
    if len(dims) != 1:
        raise ValueError(f"atoms have mixed dimensions {sorted(dims)}")
    w = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValueError("non-finite weight")
    if np.any(w < 0):
        raise ValueError("negative weight")
    total = w.sum()
    if total <= 0:
        raise ValueError("all weights are zero")
    return DiscreteMeasure(np.stack([p.coords for p in points]), w / total)


def tilt_weights(weights: np.ndarray, fields: np.ndarray) -> np.ndarray:
    """Reweight by ``exp(field)`` and renormalize; broadcasts over leading axes.

    The exponent is shifted by the largest field value among atoms of
    positive mass, so the heaviest tilted atom never underflows.
    """
    weights = np.asarray(weights, dtype=float)
    fields = np.asarray(fields, dtype=float)
    if not np.all(np.isfinite(fields)):
        raise ValueError("non-finite field value")
    live = np.broadcast_to(weights > 0, fields.shape)
    shift = np.max(np.where(live, fields, -np.inf), axis=-1, keepdims=True)
    w = weights * np.exp(np.where(live, fields - shift, -np.inf))
    return w / w.sum(axis=-1, keepdims=True)


def tilt(nu: DiscreteMeasure, field: Sequence[float]) -> DiscreteMeasure:
    """Gibbs measure with density proportional to ``exp(field)`` relative to ``nu``."""
    f = np.asarray(field, dtype=float)
    if f.shape != (nu.size,):
        raise ValueError(f"field has shape {f.shape}, expected ({nu.size},)")
    return nu.with_weights(tilt_weights(nu.weights, f))


RuleFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ReplicaPredicate:
    """A bounded function of ``arity`` replicas.

    ``rule(idx, gram)`` receives a ``(K, arity)`` array of atom indices and
    the overlap matrix of the support, and returns ``K`` values in [-1, 1].
    """

    arity: int
    rule: RuleFn
    name: str = "custom"

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("arity must be positive")

    def __call__(self, idx: np.ndarray, gram: np.ndarray) -> np.ndarray:
        idx = np.atleast_2d(np.asarray(idx, dtype=np.intp))
        vals = np.asarray(self.rule(idx, gram), dtype=float)
        vals = np.broadcast_to(vals, (idx.shape[0],))
        if np.any(np.abs(vals) > 1.0):
            raise ValueError(f"predicate {self.name} left [-1, 1]")
        return vals


def pair_overlap_leq(eps: float) -> ReplicaPredicate:
    """Indicator of ``z1 . z2 <= -eps``."""
    return ReplicaPredicate(
        2, lambda idx, g: g[idx[:, 0], idx[:, 1]] <= -eps, f"overlap<=-{eps:g}"
    )


def all_overlaps_leq(eps: float, n: int) -> ReplicaPredicate:
    """Indicator that replica 1 has overlap <= -eps with each of replicas 2..n."""

    def rule(idx, g):
        out = np.ones(idx.shape[0], dtype=bool)
        for l in range(1, idx.shape[1]):
            out &= g[idx[:, 0], idx[:, l]] <= -eps
        return out

    return ReplicaPredicate(n, rule, f"f_{n}(eps={eps:g})")


def constant_predicate(n: int, value: float = 1.0) -> ReplicaPredicate:
    return ReplicaPredicate(n, lambda idx, g: np.full(idx.shape[0], value), f"const{value:g}")


def overlap_predicate(n: int, func: Callable[[np.ndarray], np.ndarray], name="custom") -> ReplicaPredicate:
    """Predicate given as a function of the ``(K, n, n)`` overlap matrices of each tuple."""
    return ReplicaPredicate(n, lambda idx, g: func(g[idx[:, :, None], idx[:, None, :]]), name)


def enumerate_tuples(m: int, n: int, chunk: int = _CHUNK):
    """Yield every n-tuple of indices in ``range(m)`` in lexicographic order, in chunks."""
    total = m**n
    shape = (m,) * n
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        yield np.stack(np.unravel_index(flat, shape), axis=1)


def _check_budget(m: int, n: int, budget: int):
    if m**n > budget:
        raise ValueError(
            f"{m}^{n} = {m**n} tuples exceeds the enumeration budget {budget}; "
            "use sample_replicas for a Monte-Carlo estimate instead"
        )


def product_probability_exact(
    G: DiscreteMeasure, pred: ReplicaPredicate, budget: int = DEFAULT_ENUMERATION_BUDGET
) -> float:
    """Average of ``pred`` under the product measure ``G^{(x) n}``, by full enumeration."""
    n = pred.arity
    _check_budget(G.size, n, budget)
    w, gram = G.weights, G.gram
    total = 0.0
    for idx in enumerate_tuples(G.size, n):
        total += float(np.prod(w[idx], axis=1) @ pred(idx, gram))
    return total


def sample_replicas(G: DiscreteMeasure, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. atom indices from ``G``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return rng.choice(G.size, size=n, p=G.weights)


def mean_overlap(G: DiscreteMeasure) -> float:
    """``<z1 . z2>`` under ``G x G``, computed as the squared norm of the barycenter."""
    bary = G.weights @ G.points
    return float(bary @ bary)


# Named measure families used throughout the sweeps and tests.

def _basis(n_dim: int, i: int) -> np.ndarray:
    e = np.zeros(n_dim)
    e[i] = 1.0
    return e


def point_mass(n_dim: int = 1) -> DiscreteMeasure:
    return DiscreteMeasure(_basis(n_dim, 0)[None, :], np.ones(1))


def antipodal(n_dim: int, axis: int = 0) -> DiscreteMeasure:
    """Equal mass on ``e_axis`` and ``-e_axis``; the worst case for positivity."""
    e = _basis(n_dim, axis)
    return DiscreteMeasure(np.stack([e, -e]), np.full(2, 0.5))


def simplex(n_dim: int) -> DiscreteMeasure:
    """Uniform measure on the ``n_dim + 1`` vertices of a centred regular simplex.

    All distinct pairs have overlap ``-1/n_dim``.
    """
    if n_dim < 1:
        raise ValueError("dimension must be positive")
    k = n_dim + 1
    # centred basis of R^k lives in the hyperplane sum = 0; rotate it into R^n_dim
    centred = np.eye(k) - 1.0 / k
    q, _ = np.linalg.qr(centred.T)
    pts = centred @ q[:, :n_dim]
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return DiscreteMeasure(pts, np.full(k, 1.0 / k))


def random_measure(n_dim: int, m: int, seed: int | np.random.Generator | None = None) -> DiscreteMeasure:
    """Isotropic random atoms with Dirichlet(1, ..., 1) weights."""
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((m, n_dim))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    w = rng.dirichlet(np.ones(m))
    return DiscreteMeasure(pts, w / w.sum())
