import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from positivity_lab.sphere_measure import (
    DiscreteMeasure,
    ReplicaPredicate,
    all_overlaps_leq,
    antipodal,
    make_measure,
    make_unit_vector,
    mean_overlap,
    overlap,
    pair_overlap_leq,
    point_mass,
    product_probability_exact,
    random_measure,
    sample_replicas,
    simplex,
    tilt,
)

E1 = make_unit_vector([1, 0, 0])
E2 = make_unit_vector([0, 1, 0])
E3 = make_unit_vector([0, 0, 1])
M_E1 = make_unit_vector([-1, 0, 0])


def test_make_unit_vector_normalizes():
    np.testing.assert_allclose(make_unit_vector([3, 4]).coords, [0.6, 0.8])
    np.testing.assert_array_equal(make_unit_vector([1, 0, 0]).coords, [1, 0, 0])


@pytest.mark.parametrize("bad", [[0, 0], []])
def test_make_unit_vector_rejects(bad):
    with pytest.raises(ValueError):
        make_unit_vector(bad)


def test_zero_norm_message():
    with pytest.raises(ValueError, match="degenerate direction"):
        make_unit_vector([0.0, 0.0, 0.0])


def test_overlap_examples():
    assert overlap(E1, E1) == 1.0
    assert overlap(E1, M_E1) == -1.0
    assert overlap(make_unit_vector([0.6, 0.8]), make_unit_vector([1, 0])) == pytest.approx(0.6, abs=1e-15)
    with pytest.raises(ValueError):
        overlap(E1, make_unit_vector([1, 0]))


def test_make_measure():
    nu = make_measure([E1, M_E1], [1, 1])
    np.testing.assert_array_equal(nu.weights, [0.5, 0.5])
    assert make_measure([E1], [7]).weights.tolist() == [1.0]
    with pytest.raises(ValueError, match="negative"):
        make_measure([E1, E2], [1, -1])
    with pytest.raises(ValueError, match="zero"):
        make_measure([E1, E2], [0, 0])


def test_duplicate_atoms_are_separate():
    nu = make_measure([E1, E1, E2], [1, 1, 2])
    assert nu.size == 3
    np.testing.assert_allclose(nu.weights, [0.25, 0.25, 0.5])


def test_measure_is_immutable():
    nu = antipodal(3)
    with pytest.raises(ValueError):
        nu.weights[0] = 1.0


def test_json_roundtrip_and_unnormalized_input():
    doc = {"dim": 2, "atoms": [{"coords": [3, 4], "weight": 2}, {"coords": [0, -1], "weight": 6}]}
    nu = DiscreteMeasure.from_json(json.dumps(doc))
    np.testing.assert_allclose(nu.weights, [0.25, 0.75])
    np.testing.assert_allclose(nu.points[0], [0.6, 0.8])
    back = DiscreteMeasure.from_json(nu.to_json())
    np.testing.assert_allclose(back.points, nu.points)
    np.testing.assert_allclose(back.weights, nu.weights)


def test_json_dimension_mismatch():
    doc = {"dim": 3, "atoms": [{"coords": [1, 0], "weight": 1}]}
    with pytest.raises(ValueError):
        DiscreteMeasure.from_dict(doc)


def test_tilt_examples():
    nu = antipodal(3)
    assert tilt(nu, [0, 0]).weights.tolist() == [0.5, 0.5]
    np.testing.assert_allclose(tilt(nu, [5.5, 5.5]).weights, [0.5, 0.5])
    np.testing.assert_allclose(tilt(nu, [np.log(3), 0]).weights, [0.75, 0.25], atol=1e-15)


def test_tilt_rejects_nonfinite_and_wrong_length():
    with pytest.raises(ValueError):
        tilt(antipodal(2), [np.inf, 0])
    with pytest.raises(ValueError):
        tilt(antipodal(2), [0.0])


def test_tilt_survives_huge_fields():
    nu = random_measure(4, 6, 0)
    w = tilt(nu, np.linspace(0, 5000, 6)).weights
    assert np.all(np.isfinite(w)) and w[-1] == pytest.approx(1.0)


def test_tilt_zero_weight_atom_with_largest_field():
    nu = DiscreteMeasure(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([0.0, 1.0]))
    np.testing.assert_array_equal(tilt(nu, [1000.0, 0.0]).weights, [0.0, 1.0])


fields = st.lists(st.floats(-30, 30), min_size=5, max_size=5)


@given(f=fields, g=fields, c=st.floats(-50, 50))
@settings(max_examples=200, deadline=None)
def test_tilt_is_projective_and_shift_invariant(f, g, c):
    nu = random_measure(3, 5, 4)
    twice = tilt(tilt(nu, f), g).weights
    once = tilt(nu, np.add(f, g)).weights
    np.testing.assert_allclose(twice, once, atol=1e-12, rtol=0)
    np.testing.assert_allclose(tilt(nu, np.add(f, c)).weights, tilt(nu, f).weights, atol=1e-12, rtol=0)


def test_tilt_matches_direct_formula():
    nu = random_measure(5, 7, 3)
    f = np.random.default_rng(0).normal(size=7)
    direct = nu.weights * np.exp(f) / np.sum(nu.weights * np.exp(f))
    np.testing.assert_allclose(tilt(nu, f).weights, direct, rtol=1e-13)


def test_product_probability_examples():
    assert product_probability_exact(antipodal(3), pair_overlap_leq(0.5)) == 0.5
    always_off = ReplicaPredicate(3, lambda idx, g: (idx[:, 0] != idx[:, 1]).astype(float))
    assert product_probability_exact(point_mass(4), always_off) == 0.0


def test_orthonormal_triple_has_no_negative_pairs():
    nu = make_measure([E1, E2, E3], [1, 1, 1])
    # oracle: the nine pairs by hand
    brute = sum(
        wa * wb * (overlap(a, b) <= -0.1)
        for (a, wa), (b, wb) in itertools.product(zip(nu.support, nu.weights), repeat=2)
    )
    assert brute == 0.0
    assert product_probability_exact(nu, pair_overlap_leq(0.1)) == 0.0


def test_product_probability_budget():
    with pytest.raises(ValueError, match="sample_replicas"):
        product_probability_exact(random_measure(2, 20, 0), all_overlaps_leq(0.1, 6), budget=10**6)


def test_pair_enumeration_matches_double_sum():
    for seed in range(20):
        nu = random_measure(3, 6, seed)
        direct = sum(
            nu.weights[a] * nu.weights[b] * (nu.points[a] @ nu.points[b] <= -0.3)
            for a in range(nu.size) for b in range(nu.size)
        )
        assert product_probability_exact(nu, pair_overlap_leq(0.3)) == pytest.approx(direct, abs=1e-12)


def test_fn_enumeration_matches_brute_force():
    nu = random_measure(2, 4, 1)
    eps, n = 0.2, 3
    brute = 0.0
    for t in itertools.product(range(nu.size), repeat=n):
        if all(nu.gram[t[0], t[l]] <= -eps for l in range(1, n)):
            brute += np.prod(nu.weights[list(t)])
    assert product_probability_exact(nu, all_overlaps_leq(eps, n)) == pytest.approx(brute, abs=1e-14)


def test_sample_replicas():
    assert sample_replicas(point_mass(2), 3, np.random.default_rng(0)).tolist() == [0, 0, 0]
    one_sided = DiscreteMeasure(np.eye(2), np.array([1.0, 0.0]))
    assert sample_replicas(one_sided, 1, np.random.default_rng(0)).tolist() == [0]
    draws = sample_replicas(antipodal(2), 100_000, np.random.default_rng(5))
    assert abs(np.mean(draws == 0) - 0.5) < 0.01
    with pytest.raises(ValueError):
        sample_replicas(antipodal(2), 0, np.random.default_rng(0))


def test_sample_replicas_reproducible():
    a = sample_replicas(random_measure(3, 5, 0), 50, np.random.default_rng(9))
    b = sample_replicas(random_measure(3, 5, 0), 50, np.random.default_rng(9))
    np.testing.assert_array_equal(a, b)


def test_mean_overlap_examples():
    assert mean_overlap(antipodal(4)) == 0.0
    assert mean_overlap(point_mass(4)) == 1.0
    nu = make_measure([E1, M_E1], [3, 1])
    assert mean_overlap(nu) == pytest.approx(0.25, abs=1e-15)


@given(st.integers(1, 6), st.integers(1, 8), st.integers(0, 10**6))
@settings(max_examples=100, deadline=None)
def test_mean_overlap_nonnegative_and_equals_double_sum(n_dim, m, seed):
    nu = random_measure(n_dim, m, seed)
    double = sum(
        nu.weights[a] * nu.weights[b] * float(nu.points[a] @ nu.points[b])
        for a in range(m) for b in range(m)
    )
    assert mean_overlap(nu) >= 0.0
    assert mean_overlap(nu) == pytest.approx(double, abs=1e-12)


@given(st.integers(1, 6), st.integers(1, 8), st.integers(0, 10**6), st.floats(0.01, 0.99))
@settings(max_examples=150, deadline=None)
def test_pos1_holds(n_dim, m, seed, eps):
    nu = random_measure(n_dim, m, seed)
    above = 1 - product_probability_exact(nu, pair_overlap_leq(eps))
    assert eps <= (1 + eps) * above + 1e-12


@given(st.integers(1, 5), st.integers(1, 6), st.integers(0, 10**6), st.floats(0.05, 0.9),
       st.floats(0.05, 0.95), st.integers(2, 5), st.lists(st.floats(-5, 5), min_size=6, max_size=6))
@settings(max_examples=150, deadline=None)
def test_gu_holds_tilted_or_not(n_dim, m, seed, eps, gamma, n, field):
    for G in (random_measure(n_dim, m, seed), tilt(random_measure(n_dim, m, seed), field[:m])):
        fn = product_probability_exact(G, all_overlaps_leq(eps, n))
        hit = (G.gram <= -eps).astype(float) @ G.weights
        g_u = G.weights[hit >= gamma].sum()
        assert fn <= g_u + gamma ** (n - 1) + 1e-12


def test_named_generators():
    s = simplex(4)
    assert s.size == 5 and s.dim == 4
    off = s.gram[~np.eye(5, dtype=bool)]
    np.testing.assert_allclose(off, -0.25, atol=1e-12)
    assert mean_overlap(s) == pytest.approx(0.0, abs=1e-15)
    a = antipodal(8, axis=3)
    assert a.points[0, 3] == 1.0 and a.points[1, 3] == -1.0
    r = random_measure(8, 16, 0)
    assert r.size == 16 and r.dim == 8
    np.testing.assert_array_equal(r.points, random_measure(8, 16, 0).points)
