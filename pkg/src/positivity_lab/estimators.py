"""Nested Monte-Carlo estimators over the disorder.

Layers: outer i.i.d. draws of the uniforms ``x`` (``reps``), middle Gaussian
field draws at fixed ``x`` (``field_draws``), inner Gibbs averages computed
exactly from the tilted weights. Standard errors are the sample standard
deviation of the per-``x`` values over ``sqrt(reps)``, so they include the
middle-layer noise.

Every outer replication gets its own stream spawned from ``SeedSequence(seed)``,
so a fixed seed reproduces a report bit for bit, and the same seed at
different ``v`` reuses the same disorder (fields are linear in ``v``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .disorder_field import (
    FieldSampler,
    FieldSpec,
    DisorderRealization,
    component_factors,
    sample_components,
    sample_field_tensor,
    evaluate_component,
    sample_x,
    xi,
)
from .sphere_measure import (
    DEFAULT_ENUMERATION_BUDGET,
    DiscreteMeasure,
    ReplicaPredicate,
    enumerate_tuples,
    tilt_weights,
)

__all__ = [
    "CSV_FIELDS",
    "EstimateReport",
    "TestFunction",
    "NoWitnessFound",
    "Witness",
    "estimate_positivity",
    "estimate_gg_residual",
    "estimate_lemma1",
    "estimate_fn",
    "estimate_concentration",
    "estimate_sup_scaling",
    "estimate_step3",
    "find_good_perturbation",
    "replica_streams",
    "gibbs_replica_terms",
]

CSV_FIELDS = (
    "estimator", "v", "n", "epsilon", "p_max", "backend",
    "reps", "mean", "stderr", "inner_mode", "seed", "status",
)

DEFAULT_REPS = 64
DEFAULT_FIELD_DRAWS = 256


@dataclass(frozen=True, eq=False)
class EstimateReport:
    estimator: str
    mean: float
    stderr: float
    reps: int
    seed: int | None
    inner_mode: str = "exact"
    meta: dict = field(default_factory=dict)
    status: str = "ok"
    # per-replication values and other arrays; not serialized
    detail: dict = field(default_factory=dict, repr=False)

    def to_row(self) -> dict:
        m = self.meta
        return {
            "estimator": self.estimator,
            "v": m.get("v"),
            "n": m.get("n"),
            "epsilon": m.get("epsilon"),
            "p_max": m.get("p_max"),
            "backend": m.get("backend"),
            "reps": self.reps,
            "mean": self.mean,
            "stderr": self.stderr,
            "inner_mode": self.inner_mode,
            "seed": self.seed,
            "status": self.status,
        }

    def to_csv_cells(self) -> list[str]:
        return [_cell(self.to_row()[k]) for k in CSV_FIELDS]

    @classmethod
    def from_row(cls, row: dict) -> "EstimateReport":
        meta = {}
        for key, conv in (("v", float), ("n", int), ("epsilon", float), ("p_max", int), ("backend", str)):
            if row.get(key) not in (None, ""):
                meta[key] = conv(row[key])
        seed = row.get("seed")
        return cls(
            estimator=row["estimator"],
            mean=float(row["mean"]),
            stderr=float(row["stderr"]),
            reps=int(row["reps"]),
            seed=None if seed in (None, "") else int(seed),
            inner_mode=row.get("inner_mode") or "exact",
            meta=meta,
            status=row.get("status") or "ok",
        )

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "mean": self.mean,
            "stderr": self.stderr,
            "reps": self.reps,
            "seed": self.seed,
            "inner_mode": self.inner_mode,
            "meta": self.meta,
            "status": self.status,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def __eq__(self, other):
        # compare serialized cells so nan rows (status=error) equal themselves
        return isinstance(other, EstimateReport) and self.to_csv_cells() == other.to_csv_cells()


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class TestFunction:
    """Bounded test function on [-1, 1] applied to overlaps."""

    __test__ = False  # keep pytest from collecting it

    def __init__(self, kind: str, eps: float | None = None, width: float = 0.05,
                 power: int | None = None, table: Sequence[float] | None = None):
        if kind not in ("indicator_leq", "smoothed_indicator", "monomial", "table"):
            raise ValueError(f"unknown test function kind {kind!r}")
        if kind in ("indicator_leq", "smoothed_indicator") and eps is None:
            raise ValueError(f"{kind} needs eps")
        if kind == "smoothed_indicator" and width <= 0:
            raise ValueError("ramp width must be positive")
        if kind == "monomial" and (power is None or power < 0):
            raise ValueError("monomial needs a nonnegative power")
        if kind == "table":
            table = np.asarray(table, dtype=float)
            if table.ndim != 1 or table.size < 2 or np.any(np.abs(table) > 1):
                raise ValueError("table needs >= 2 values in [-1, 1]")
        self.kind, self.eps, self.width, self.power, self.table = kind, eps, width, power, table

    @classmethod
    def indicator_leq(cls, eps: float) -> "TestFunction":
        return cls("indicator_leq", eps=eps)

    @classmethod
    def smoothed_indicator(cls, eps: float, width: float = 0.05) -> "TestFunction":
        """1 on ``s <= -eps``, 0 on ``s >= -eps + width``, linear in between."""
        return cls("smoothed_indicator", eps=eps, width=width)

    @classmethod
    def monomial(cls, power: int) -> "TestFunction":
        return cls("monomial", power=power)

    @classmethod
    def from_table(cls, values: Sequence[float]) -> "TestFunction":
        """Piecewise-linear interpolation of values on an even grid of [-1, 1]."""
        return cls("table", table=values)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "indicator_leq":
            return (s <= -self.eps).astype(float)
        if self.kind == "smoothed_indicator":
            return np.clip((-self.eps + self.width - s) / self.width, 0.0, 1.0)
        if self.kind == "monomial":
            return s**self.power
        grid = np.linspace(-1.0, 1.0, self.table.size)
        return np.interp(s, grid, self.table)

    def __repr__(self):
        if self.kind == "monomial":
            return f"monomial({self.power})"
        if self.kind == "table":
            return f"table({self.table.size})"
        return f"{self.kind}({self.eps:g})"


def replica_streams(seed: int, reps: int) -> list[np.random.Generator]:
    """Independent generators, one per outer replication."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(reps)]


def _check_reps(reps: int):
    if reps < 2:
        raise ValueError("need at least 2 replications for a standard error")


def _summary(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if np.all(values == values[0]):
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def _meta(spec: FieldSpec, **extra) -> dict:
    meta = {"v": spec.v, "p_max": spec.p_max, "backend": spec.backend}
    meta.update(extra)
    return meta


def _draw_fields(nu: DiscreteMeasure, spec: FieldSpec, x, rng, size: int) -> tuple[np.ndarray, float]:
    """``size`` field draws on the support of ``nu`` and the jitter used."""
    if spec.backend == "tensor":
        rows = [sample_field_tensor(nu.dim, spec, x, rng, support=nu).field_values for _ in range(size)]
        return np.stack(rows), 0.0
    sampler = FieldSampler.build(nu, spec, x)
    return sampler.sample(rng, size), sampler.jitter


def _inner_positivity(weights: np.ndarray, gram: np.ndarray, eps: float) -> np.ndarray:
    below = (gram <= -eps).astype(float)
    return np.einsum("ba,ac,bc->b", weights, below, weights)


def _inner_fn(weights: np.ndarray, gram: np.ndarray, eps: float, n: int) -> np.ndarray:
    # <f_n> = sum_a w_a G{z2: z_a . z2 <= -eps}^(n-1)
    below = (gram <= -eps).astype(float)
    hit = weights @ below.T
    return np.sum(weights * hit ** (n - 1), axis=-1)


# ---------------------------------------------------------------------------
# positivity


def estimate_positivity(nu: DiscreteMeasure, spec: FieldSpec, eps: float,
                        reps: int = DEFAULT_REPS, field_draws: int = DEFAULT_FIELD_DRAWS,
                        seed: int = 0) -> EstimateReport:
    """``E nu_g x nu_g {z1 . z2 <= -eps}``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    _check_reps(reps)
    meta = _meta(spec, epsilon=eps, n=2, field_draws=field_draws)
    if spec.v == 0:
        exact = float(_inner_positivity(nu.weights[None, :], nu.gram, eps)[0])
        return EstimateReport("positivity", exact, 0.0, reps, seed, "exact", meta,
                              detail={"per_x": np.full(reps, exact)})
    per_x = np.empty(reps)
    jitter = 0.0
    for r, rng in enumerate(replica_streams(seed, reps)):
        x = sample_x(spec.p_max, rng)
        fields, j = _draw_fields(nu, spec, x, rng, field_draws)
        jitter = max(jitter, j)
        per_x[r] = _inner_positivity(tilt_weights(nu.weights, fields), nu.gram, eps).mean()
    mean, se = _summary(per_x)
    meta["jitter"] = jitter
    return EstimateReport("positivity", mean, se, reps, seed, "exact", meta, detail={"per_x": per_x})


# ---------------------------------------------------------------------------
# Ghirlanda-Guerra residual


def gibbs_replica_terms(weights: np.ndarray, gram: np.ndarray, f: ReplicaPredicate,
                        psi: TestFunction, budget: int = DEFAULT_ENUMERATION_BUDGET) -> dict:
    """Exact Gibbs averages entering the identities, one value per row of ``weights``.

    Returns ``f`` = <f>, ``f_new`` = <f psi(z1 . z^{n+1})>, ``f_old`` =
    [<f psi(z1 . z^l)> for l = 2..n] (shape ``(B, n-1)``) and ``psi`` =
    <psi(z1 . z2)>. The ``(n+1)``-th replica is summed out analytically,
    so only ``M^n`` tuples are enumerated.
    """
    weights = np.atleast_2d(weights)
    b, m = weights.shape
    n = f.arity
    if m**n > budget:
        raise ValueError(f"{m}^{n} tuples exceeds the enumeration budget {budget}")
    psi_mat = psi(gram)
    psi_w = weights @ psi_mat.T  # (B, M): E_{z'} psi(z_a . z')
    out_f = np.zeros(b)
    out_new = np.zeros(b)
    out_old = np.zeros((b, n - 1))
    for idx in enumerate_tuples(m, n):
        prod_w = np.prod(weights[:, idx], axis=2)  # (B, K)
        fv = f(idx, gram)
        out_f += prod_w @ fv
        out_new += (prod_w * psi_w[:, idx[:, 0]]) @ fv
        for l in range(1, n):
            out_old[:, l - 1] += prod_w @ (fv * psi_mat[idx[:, 0], idx[:, l]])
    out_psi = np.einsum("ba,bc,ac->b", weights, weights, psi_mat)
    return {"f": out_f, "f_new": out_new, "f_old": out_old, "psi": out_psi}


def _sampled_replica_terms(weights, gram, f, psi, rng, samples: int) -> dict:
    b, m = weights.shape
    n = f.arity
    terms = {"f": np.empty(b), "f_new": np.empty(b), "f_old": np.empty((b, n - 1)),
             "psi": np.empty(b), "inner_se": np.empty(b)}
    for i in range(b):
        idx = rng.choice(m, size=(samples, n + 1), p=weights[i])
        fv = f(idx[:, :n], gram)
        new = fv * psi(gram[idx[:, 0], idx[:, n]])
        terms["f"][i] = fv.mean()
        terms["f_new"][i] = new.mean()
        for l in range(1, n):
            terms["f_old"][i, l - 1] = np.mean(fv * psi(gram[idx[:, 0], idx[:, l]]))
        terms["psi"][i] = np.mean(psi(gram[idx[:, 0], idx[:, 1]]))
        terms["inner_se"][i] = new.std(ddof=1) / math.sqrt(samples)
    return terms


def estimate_gg_residual(nu: DiscreteMeasure, spec: FieldSpec, n: int, f: ReplicaPredicate,
                         psi: TestFunction, reps: int = DEFAULT_REPS,
                         field_draws: int = DEFAULT_FIELD_DRAWS, seed: int = 0,
                         budget: int = DEFAULT_ENUMERATION_BUDGET,
                         inner_samples: int = 4096) -> EstimateReport:
    """``E_x |E_g<f psi(z1.z^{n+1})> - E_g<f> E_g<psi(z1.z2)>/n - sum_l E_g<f psi(z1.z^l)>/n|``.

    Inner averages are exact while ``M^n`` fits in ``budget``; beyond that each
    Gibbs average is replaced by ``inner_samples`` replica draws and the mean
    inner standard error is recorded in ``meta['inner_stderr']``.
    """
    if n < 1 or f.arity != n:
        raise ValueError(f"predicate arity {f.arity} does not match n={n}")
    _check_reps(reps)
    exact = nu.size**n <= budget
    mode = "exact" if exact else "sampled"
    meta = _meta(spec, n=n, psi=repr(psi), f=f.name, field_draws=field_draws)
    if isinstance(psi, TestFunction) and psi.eps is not None:
        meta["epsilon"] = psi.eps

    def residual(terms):
        e = {k: np.mean(t, axis=0) for k, t in terms.items()}
        return abs(e["f_new"] - e["f"] * e["psi"] / n - np.sum(e["f_old"]) / n)

    streams = replica_streams(seed, reps)
    if spec.v == 0 and exact:
        t = gibbs_replica_terms(nu.weights[None, :], nu.gram, f, psi, budget)
        value = float(residual(t))
        return EstimateReport("gg_residual", value, 0.0, reps, seed, mode, meta,
                              detail={"per_x": np.full(reps, value)})
    per_x = np.empty(reps)
    inner_se = []
    for r, rng in enumerate(streams):
        x = sample_x(spec.p_max, rng)
        fields, _ = _draw_fields(nu, spec, x, rng, field_draws)
        w = tilt_weights(nu.weights, fields)
        if exact:
            terms = gibbs_replica_terms(w, nu.gram, f, psi, budget)
        else:
            terms = _sampled_replica_terms(w, nu.gram, f, psi, rng, inner_samples)
            inner_se.append(terms.pop("inner_se").mean())
        per_x[r] = residual(terms)
    mean, se = _summary(per_x)
    if inner_se:
        meta["inner_stderr"] = float(np.mean(inner_se))
    return EstimateReport("gg_residual", mean, se, reps, seed, mode, meta, detail={"per_x": per_x})


# ---------------------------------------------------------------------------
# fluctuations of a single p-spin component


def _draw_components(nu: DiscreteMeasure, spec: FieldSpec, x, rng, size: int, factors):
    """Unit p-spin components ``(size, p_max, M)`` and the full field ``(size, M)``."""
    if spec.backend == "tensor":
        comps = np.empty((size, spec.p_max, nu.size))
        for k in range(size):
            real = sample_field_tensor(nu.dim, spec.with_v(1.0), x, rng)
            for p in range(1, spec.p_max + 1):
                comps[k, p - 1] = [evaluate_component(real, z, p) for z in nu.points]
    else:
        comps = sample_components(factors, rng, size)
    if spec.backend == "first_order":
        return comps, spec.v * comps[:, 0, :]
    coef = 2.0 ** -np.arange(1, spec.p_max + 1) * x[: spec.p_max]
    return comps, spec.v * np.einsum("p,kpa->ka", coef, comps)


def estimate_lemma1(nu: DiscreteMeasure, spec: FieldSpec, p: int, reps: int = DEFAULT_REPS,
                    field_draws: int = DEFAULT_FIELD_DRAWS, seed: int = 0) -> EstimateReport:
    """``E <|g_p(z) - E_g<g_p(z)>|>`` with ``E_g<g_p>`` estimated per ``x``.

    The field is built from independent per-order components so that ``g_p``
    is available on its own; the sum has exactly the law of the full field.

    ``meta`` also carries the two pieces the statistic splits into: the
    Gibbs spread ``E<|g_p - <g_p>|>`` and the disorder spread
    ``E|<g_p> - E_g<g_p>|``. For a point mass the first is exactly 0 while
    the second is ``E|g_p(z)|``.
    """
    if p < 1 or p > spec.p_max:
        raise ValueError(f"p={p} outside 1..p_max={spec.p_max}")
    if spec.backend == "first_order" and p != 1:
        raise ValueError("first_order backend has only the p=1 component")
    _check_reps(reps)
    meta = _meta(spec, p=p, field_draws=field_draws)
    n_orders = 1 if spec.backend == "first_order" else spec.p_max
    factors = None if spec.backend == "tensor" else component_factors(nu, n_orders, spec.jitter)
    per_x = np.empty(reps)
    gibbs_part = np.empty(reps)
    disorder_part = np.empty(reps)
    for r, rng in enumerate(replica_streams(seed, reps)):
        x = sample_x(spec.p_max, rng)
        comps, fields = _draw_components(nu, spec, x, rng, field_draws, factors)
        w = tilt_weights(nu.weights, fields)
        gp = comps[:, p - 1, :]
        local = np.sum(w * gp, axis=1)  # <g_p> per field draw
        centre = local.mean()
        per_x[r] = np.mean(np.sum(w * np.abs(gp - centre), axis=1))
        gibbs_part[r] = np.mean(np.sum(w * np.abs(gp - local[:, None]), axis=1))
        disorder_part[r] = np.mean(np.abs(local - centre))
    mean, se = _summary(per_x)
    meta["gibbs_part"] = float(gibbs_part.mean())
    meta["disorder_part"] = float(disorder_part.mean())
    return EstimateReport("lemma1", mean, se, reps, seed, "exact", meta,
                          detail={"per_x": per_x, "gibbs_part": gibbs_part, "disorder_part": disorder_part})


# ---------------------------------------------------------------------------
# f_n, the all-negative event


def estimate_fn(nu: DiscreteMeasure, spec: FieldSpec, n: int, eps: float, reps: int = DEFAULT_REPS,
                field_draws: int = DEFAULT_FIELD_DRAWS, seed: int = 0) -> EstimateReport:
    """``E <f_n>`` where ``f_n`` is the event ``z1 . z^l <= -eps`` for all ``2 <= l <= n``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    _check_reps(reps)
    meta = _meta(spec, n=n, epsilon=eps, field_draws=field_draws)
    if spec.v == 0:
        exact = float(_inner_fn(nu.weights[None, :], nu.gram, eps, n)[0])
        return EstimateReport("fn", exact, 0.0, reps, seed, "exact", meta,
                              detail={"per_x": np.full(reps, exact)})
    per_x = np.empty(reps)
    for r, rng in enumerate(replica_streams(seed, reps)):
        x = sample_x(spec.p_max, rng)
        fields, _ = _draw_fields(nu, spec, x, rng, field_draws)
        per_x[r] = _inner_fn(tilt_weights(nu.weights, fields), nu.gram, eps, n).mean()
    mean, se = _summary(per_x)
    return EstimateReport("fn", mean, se, reps, seed, "exact", meta, detail={"per_x": per_x})


def estimate_step3(nu: DiscreteMeasure, spec: FieldSpec, n: int, eps: float, a0: float,
                   reps: int = DEFAULT_REPS, field_draws: int = DEFAULT_FIELD_DRAWS, seed: int = 0):
    """Measure ``a`` and ``E_g<f_n>`` per ``x`` on shared disorder and run the
    final averaging chain on them (see :func:`verification.check_step3_chain`)."""
    from .verification import check_step3_chain

    a = estimate_positivity(nu, spec, eps, reps, field_draws, seed)
    fn = estimate_fn(nu, spec, n, eps, reps, field_draws, seed)
    return check_step3_chain(a.detail["per_x"], fn.detail["per_x"], n, eps, a0)


# ---------------------------------------------------------------------------
# concentration of the log-partition function


def estimate_concentration(nu: DiscreteMeasure, spec: FieldSpec, reps: int = 4,
                           field_draws: int = 10_000, seed: int = 0) -> EstimateReport:
    """Sample variance of ``X = log sum_a w_a exp g(z_a)`` at fixed ``x``.

    ``mean`` is the average over ``reps`` draws of ``x`` of ``Var X``;
    ``detail`` holds per-``x`` variances and the matching ``a = v^2 xi(1)``.
    """
    if field_draws < 100:
        raise ValueError("need at least 100 field draws per x")
    _check_reps(reps)
    meta = _meta(spec, field_draws=field_draws)
    variances = np.empty(reps)
    a = np.empty(reps)
    log_w = np.log(nu.weights, where=nu.weights > 0, out=np.full(nu.size, -np.inf))
    for r, rng in enumerate(replica_streams(seed, reps)):
        x = sample_x(spec.p_max, rng)
        a[r] = spec.v**2 * (1.0 if spec.backend == "first_order" else xi(1.0, x, spec.p_max))
        if spec.v == 0:
            variances[r] = 0.0
            continue
        fields, _ = _draw_fields(nu, spec, x, rng, field_draws)
        variances[r] = np.var(logsumexp(fields + log_w, axis=1), ddof=1)
    mean, se = _summary(variances)
    meta["max_ratio_to_8a"] = float(np.max(variances / (8 * a))) if np.all(a > 0) else 0.0
    return EstimateReport("concentration", mean, se, reps, seed, "exact", meta,
                          detail={"variance": variances, "a": a, "bound": 8 * a})


# ---------------------------------------------------------------------------
# supremum of the field over the support


def estimate_sup_scaling(nu: DiscreteMeasure, v_grid: Sequence[float], spec_base: FieldSpec,
                         reps: int = DEFAULT_REPS, seed: int = 0) -> list[dict]:
    """Mean ``max_a |g(z_a)|`` at each ``v``, all ``v`` sharing one set of draws.

    Each row carries the empirical constant ``mean_sup / (v sqrt(N))`` and a
    flag confirming the per-draw sup is linear in ``v``.
    """
    _check_reps(reps)
    unit = np.empty(reps)
    for r, rng in enumerate(replica_streams(seed, reps)):
        x = sample_x(spec_base.p_max, rng)
        fields, _ = _draw_fields(nu, spec_base.with_v(1.0), x, rng, 1)
        unit[r] = np.max(np.abs(fields))
    rows = []
    for v in v_grid:
        sups = np.empty(reps)
        for r, rng in enumerate(replica_streams(seed, reps)):
            x = sample_x(spec_base.p_max, rng)
            fields, _ = _draw_fields(nu, spec_base.with_v(v), x, rng, 1)
            sups[r] = np.max(np.abs(fields))
        linear = bool(np.allclose(sups, v * unit, rtol=1e-12, atol=0.0))
        mean, se = _summary(sups)
        const = mean / (v * math.sqrt(nu.dim)) if v > 0 else 0.0
        rows.append({"v": float(v), "mean_sup": mean, "stderr": se, "constant": const, "linear": linear})
    return rows


# ---------------------------------------------------------------------------
# deterministic perturbation for a family of measures


@dataclass(frozen=True, eq=False)
class Witness:
    realization: DisorderRealization
    q_positivity: float
    sup_abs: float
    sup_limit: float
    attempt: int


class NoWitnessFound(RuntimeError):
    def __init__(self, attempts: int, best: Witness | None):
        super().__init__(f"no admissible perturbation in {attempts} attempts")
        self.attempts = attempts
        self.best = best


def find_good_perturbation(Q: Sequence[DiscreteMeasure], spec: FieldSpec, eps: float,
                           attempts: int = 200, seed: int = 0,
                           q_weights: Sequence[float] | None = None,
                           l_cut: float = 3.0) -> Witness:
    """Search for one field ``g`` with small Q-averaged negative-overlap mass and small sup.

    Accepts the first draw with ``int nu_g x nu_g{z1.z2 <= -eps} dQ <= 4 eps``
    and ``max |g| <= l_cut v sqrt(N)`` over the union of the supports.
    Raises :class:`NoWitnessFound` (carrying the best draw) otherwise.
    """
    if not Q:
        raise ValueError("Q is empty")
    dims = {nu.dim for nu in Q}
    if len(dims) != 1:
        raise ValueError("all measures in Q must share one dimension")
    n_dim = dims.pop()
    qw = np.full(len(Q), 1.0 / len(Q)) if q_weights is None else np.asarray(q_weights, float)
    qw = qw / qw.sum()
    union = DiscreteMeasure(np.vstack([nu.points for nu in Q]),
                            np.full(sum(nu.size for nu in Q), 1.0 / sum(nu.size for nu in Q)))
    bounds = np.cumsum([0] + [nu.size for nu in Q])
    sup_limit = l_cut * spec.v * math.sqrt(n_dim)

    best, best_score = None, math.inf
    for k, rng in enumerate(replica_streams(seed, attempts)):
        x = sample_x(spec.p_max, rng)
        fields, jitter = _draw_fields(union, spec, x, rng, 1)
        g = fields[0]
        pos = sum(
            qw[i] * _inner_positivity(tilt_weights(nu.weights, g[bounds[i]:bounds[i + 1]])[None, :],
                                      nu.gram, eps)[0]
            for i, nu in enumerate(Q)
        )
        sup = float(np.max(np.abs(g)))
        cand = Witness(DisorderRealization(spec.v, x, g, None, jitter), float(pos), sup, sup_limit, k)
        if pos <= 4 * eps and sup <= sup_limit:
            return cand
        score = max(pos / (4 * eps), sup / sup_limit if sup_limit > 0 else (math.inf if sup > 0 else 0))
        if score < best_score:
            best, best_score = cand, score
    raise NoWitnessFound(attempts, best)
