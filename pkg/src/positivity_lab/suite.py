"""Check collections run by ``--verify`` and by the acceptance tests.

Each check is ``(name, fn)`` with ``fn() -> (passed, detail)``.
All instances come from fixed seeds, so the output is reproducible.
"""

from __future__ import annotations

import numpy as np

from .disorder_field import FieldSpec
from .estimators import (
    TestFunction,
    estimate_concentration,
    estimate_fn,
    estimate_gg_residual,
    estimate_lemma1,
    estimate_positivity,
)
from .sphere_measure import (
    DiscreteMeasure,
    all_overlaps_leq,
    antipodal,
    constant_predicate,
    pair_overlap_leq,
    point_mass,
    product_probability_exact,
    random_measure,
    simplex,
)
from .verification import (
    check_convexity_lemma,
    check_gu_bound,
    check_induction_bound,
    check_mean_overlap_identity,
    check_pos1,
    check_step2_bound,
    convex_pair_corpus,
    induction_product,
    step2_objective,
)

EPS_GRID = (0.05, 0.1, 0.3, 0.5, 0.8)
GAMMA_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)


def random_instances(count: int, max_dim: int = 6, max_atoms: int = 8, seed: int = 7) -> list[DiscreteMeasure]:
    """Small random measures; a few adversarial families are mixed in."""
    rng = np.random.default_rng(seed)
    out = [antipodal(2), simplex(3), point_mass(2)]
    while len(out) < count:
        n_dim = int(rng.integers(1, max_dim + 1))
        m = int(rng.integers(1, max_atoms + 1))
        out.append(random_measure(n_dim, m, rng))
    return out[:count]


def _count(reports) -> tuple[bool, str]:
    reports = list(reports)
    bad = [r for r in reports if not r.passed]
    detail = f"{len(reports) - len(bad)}/{len(reports)} hold"
    if bad:
        detail += f"; first failure {bad[0].to_json()}"
    return not bad, detail


def convexity_corpus_check(pairs: int = 24, points: int = 50, y: float = 0.5):
    corpus = convex_pair_corpus(pairs)
    xs = np.linspace(-2.0, 2.0, points)
    return _count(check_convexity_lemma(p, float(x), y) for p in corpus for x in xs)


def gu_check(instances: int = 50):
    measures = random_instances(instances)
    return _count(
        check_gu_bound(G, n, eps, gamma)
        for G in measures for n in range(1, 5) for eps in EPS_GRID for gamma in GAMMA_GRID
    )


def induction_grid_check(a_points: int = 100, n_points: int = 100):
    reports = []
    for a in np.linspace(0.0, 1.0, a_points):
        prev = None
        for n in range(3, 3 + n_points):
            r = check_induction_bound(float(a), n)
            # recursion <f_{n+1}> = (n-1+a)/n <f_n> must reproduce the product
            if prev is not None and abs(prev * (n - 2 + a) / (n - 1) - r.extra["product"]) > 1e-14:
                return False, f"recursion mismatch at a={a}, n={n}"
            prev = r.extra["product"]
            reports.append(r)
    return _count(reports)


def mean_overlap_check(instances: int = 100):
    return _count(check_mean_overlap_identity(G) for G in random_instances(instances, seed=11))


def pos1_check(instances: int = 100):
    return _count(check_pos1(G, eps) for G in random_instances(instances, seed=13) for eps in EPS_GRID)


def step2_combined_check(instances: int = 30):
    measures = random_instances(instances, seed=17)
    reports = []
    for n in range(2, 6):
        for eps in EPS_GRID:
            r = check_step2_bound(n, eps, measures)
            scan = min(step2_objective(g, n, eps) for g in np.linspace(0.0, 1.0, 1001))
            if r.rhs > scan + 1e-9:
                return False, f"golden section missed the minimum at n={n}, eps={eps}"
            reports.append(r)
    return _count(reports)


def deterministic_checks():
    return [
        ("convexity_lemma", convexity_corpus_check),
        ("gu_bound", gu_check),
        ("induction_bound", induction_grid_check),
        ("mean_overlap_identity", mean_overlap_check),
        ("pos1", pos1_check),
        ("step2_bound", step2_combined_check),
    ]


def _close(value, target, tol=1e-12):
    return abs(value - target) <= tol


def zero_v_checks():
    spec = FieldSpec(0.0, 12)

    def positivity_antipodal():
        r = estimate_positivity(antipodal(8), spec, 0.5, reps=4, field_draws=8)
        return r.mean == 0.5 and r.stderr == 0.0, f"mean={r.mean!r} stderr={r.stderr!r}"

    def positivity_matches_enumeration():
        worst = 0.0
        for G in random_instances(20, seed=19):
            r = estimate_positivity(G, spec, 0.3, reps=2, field_draws=2)
            exact = product_probability_exact(G, pair_overlap_leq(0.3))
            worst = max(worst, abs(r.mean - exact))
            if r.stderr != 0.0:
                return False, "nonzero stderr at v=0"
        return worst <= 1e-12, f"max deviation {worst:.2e}"

    def fn_antipodal():
        r = estimate_fn(antipodal(8), spec, 3, 0.5, reps=4, field_draws=8)
        return _close(r.mean, 0.25) and r.stderr == 0.0, f"mean={r.mean!r}"

    def fn_matches_enumeration():
        worst = 0.0
        for G in random_instances(20, seed=23):
            for n in (2, 3, 4):
                r = estimate_fn(G, spec, n, 0.2, reps=2, field_draws=2)
                exact = product_probability_exact(G, all_overlaps_leq(0.2, n))
                worst = max(worst, abs(r.mean - exact))
        return worst <= 1e-12, f"max deviation {worst:.2e}"

    def gg_point_mass():
        r = estimate_gg_residual(point_mass(3), FieldSpec(5.0, 12), 2, pair_overlap_leq(0.5),
                                 TestFunction.monomial(2), reps=4, field_draws=16)
        return r.mean == 0.0, f"mean={r.mean!r}"

    def gg_trivial_n1():
        r = estimate_gg_residual(simplex(3), spec, 1, constant_predicate(1),
                                 TestFunction.indicator_leq(0.2), reps=4, field_draws=8)
        return _close(r.mean, 0.0) and r.stderr == 0.0, f"mean={r.mean!r}"

    def lemma1_point_mass():
        r = estimate_lemma1(point_mass(4), FieldSpec(3.0, 4), 1, reps=4, field_draws=32)
        return r.meta["gibbs_part"] == 0.0, f"gibbs part={r.meta['gibbs_part']!r}"

    def concentration_zero():
        r = estimate_concentration(random_measure(4, 5, 1), spec, reps=2, field_draws=100)
        return r.mean == 0.0 and r.stderr == 0.0, f"mean={r.mean!r}"

    return [
        ("v0_positivity_antipodal", positivity_antipodal),
        ("v0_positivity_enumeration", positivity_matches_enumeration),
        ("v0_fn_antipodal", fn_antipodal),
        ("v0_fn_enumeration", fn_matches_enumeration),
        ("gg_point_mass", gg_point_mass),
        ("v0_gg_n1", gg_trivial_n1),
        ("lemma1_point_mass", lemma1_point_mass),
        ("v0_concentration", concentration_zero),
    ]
