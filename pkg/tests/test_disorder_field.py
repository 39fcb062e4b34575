import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from positivity_lab.disorder_field import (
    DisorderRealization,
    FieldSampler,
    FieldSpec,
    covariance_matrix,
    evaluate_component,
    evaluate_g,
    psd_factor,
    sample_field_covariance,
    sample_field_tensor,
    sample_x,
    sup_abs_field,
    xi,
)
from positivity_lab.sphere_measure import antipodal, make_measure, make_unit_vector, point_mass, random_measure

ONES = np.ones(30)


def test_fieldspec_validation_and_json():
    spec = FieldSpec(2.5, 7, "first_order", 1e-9)
    assert FieldSpec.from_json(spec.to_json()) == spec
    assert FieldSpec.from_dict({"v": 1}) == FieldSpec(1.0)
    for bad in (dict(v=-1), dict(v=1, p_max=0), dict(v=1, p_max=31), dict(v=1, backend="x"),
                dict(v=1, jitter=-1), dict(v=float("nan"))):
        with pytest.raises(ValueError):
            FieldSpec(**bad)


def test_sample_x():
    a = sample_x(3, np.random.default_rng(42))
    b = sample_x(3, np.random.default_rng(42))
    np.testing.assert_array_equal(a, b)
    assert a.shape == (3,) and np.all((a >= 0) & (a <= 1))
    assert 0 <= sample_x(1, np.random.default_rng(0))[0] <= 1
    many = sample_x(100_000, np.random.default_rng(1))
    assert abs(many.mean() - 0.5) < 0.005
    with pytest.raises(ValueError):
        sample_x(0, np.random.default_rng(0))


def test_xi_examples():
    assert xi(1.0, ONES, 30) == pytest.approx(1 / 3, abs=1e-9)
    assert xi(0.0, np.random.default_rng(0).uniform(size=5), 5) == 0.0
    assert xi(1.0, ONES, 2) == pytest.approx(5 / 16, abs=1e-15)
    with pytest.raises(ValueError):
        xi(1.1, ONES, 3)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=12))
@settings(max_examples=200, deadline=None)
def test_xi_monotone_convex_and_bounded(x):
    x = np.array(x)
    grid = np.linspace(0, 1, 101)
    vals = np.array([xi(s, x, x.size) for s in grid])
    assert np.all(np.diff(vals) >= -1e-15)
    assert np.all(vals[:-2] + vals[2:] - 2 * vals[1:-1] >= -1e-15)
    assert vals[-1] <= 1 / 3 + 1e-15


def test_covariance_examples():
    c = covariance_matrix(point_mass(3), FieldSpec(2.0, 30), ONES)
    assert c.shape == (1, 1) and c[0, 0] == pytest.approx(4 / 3, abs=1e-8)
    c = covariance_matrix(antipodal(2), FieldSpec(1.0, 1), np.ones(1))
    np.testing.assert_allclose(c, [[0.25, -0.25], [-0.25, 0.25]])
    assert not covariance_matrix(random_measure(3, 4, 0), FieldSpec(0.0), ONES).any()


def test_first_order_covariance_is_gram():
    nu = random_measure(4, 5, 1)
    np.testing.assert_allclose(covariance_matrix(nu, FieldSpec(3.0, backend="first_order"), None),
                               9 * nu.gram)


@given(st.integers(1, 6), st.integers(1, 12), st.integers(0, 10**6))
@settings(max_examples=100, deadline=None)
def test_covariance_is_psd(n_dim, m, seed):
    nu = random_measure(n_dim, m, seed)
    x = np.random.default_rng(seed).uniform(size=12)
    c = covariance_matrix(nu, FieldSpec(1.0), x)
    np.testing.assert_allclose(c, c.T)
    assert np.linalg.eigvalsh(c).min() >= -1e-10


def test_sampling_zero_v_is_zero():
    f = sample_field_covariance(random_measure(3, 4, 0), FieldSpec(0.0), ONES, np.random.default_rng(0), 5)
    assert not f.any()


def test_single_atom_variance():
    x = np.random.default_rng(3).uniform(size=12)
    f = sample_field_covariance(point_mass(2), FieldSpec(1.0), x, np.random.default_rng(4), 10_000)
    assert np.var(f[:, 0], ddof=1) == pytest.approx(xi(1.0, x, 12), rel=0.05)


def test_duplicated_atom_gets_equal_values():
    e = make_unit_vector([1, 2, 3])
    nu = make_measure([e, e, make_unit_vector([0, 1, 0])], [1, 1, 1])
    f = sample_field_covariance(nu, FieldSpec(1.0), ONES, np.random.default_rng(0), 200)
    assert np.max(np.abs(f[:, 0] - f[:, 1])) < 1e-5


def test_sampler_is_linear_in_v():
    nu = random_measure(4, 6, 2)
    x = sample_x(12, np.random.default_rng(0))
    a = FieldSampler.build(nu, FieldSpec(1.5), x).sample(np.random.default_rng(7), 3)
    b = FieldSampler.build(nu, FieldSpec(3.0), x).sample(np.random.default_rng(7), 3)
    np.testing.assert_array_equal(2 * a, b)


def test_empirical_variance_bound():
    x = np.ones(12)
    f = sample_field_covariance(random_measure(5, 4, 0), FieldSpec(2.0), x, np.random.default_rng(1), 20_000)
    assert np.all(np.var(f, axis=0) <= 4 / 3 * 1.05)


def test_psd_factor_escalates_then_gives_up():
    c = np.array([[1.0, 1.0], [1.0, 1.0]]) - 1e-9 * np.eye(2)
    factor, used = psd_factor(c, 1e-10)
    assert used > 1e-9
    np.testing.assert_allclose(factor @ factor.T, c + used * np.eye(2))
    with pytest.raises(np.linalg.LinAlgError):
        psd_factor(np.diag([1.0, -1e-3]), 1e-10)


def test_tensor_first_order_is_linear_form():
    spec = FieldSpec(3.0, 1, "tensor")
    x = np.array([0.7])
    real = sample_field_tensor(4, spec, x, np.random.default_rng(0))
    z = make_unit_vector([1, -2, 0.5, 3])
    expected = 3.0 * 0.7 * 0.5 * float(real.tensors[0] @ z.coords)
    assert evaluate_g(real, z) == pytest.approx(expected, rel=1e-14)


def test_tensor_basis_vector_picks_diagonal_coefficients():
    spec = FieldSpec(2.0, 4, "tensor")
    x = np.array([0.1, 0.5, 0.9, 0.3])
    real = sample_field_tensor(3, spec, x, np.random.default_rng(1))
    e1 = make_unit_vector([1, 0, 0])
    diag = [real.tensors[p - 1][(0,) * p] for p in range(1, 5)]
    expected = 2.0 * sum(2.0**-p * x[p - 1] * diag[p - 1] for p in range(1, 5))
    assert evaluate_g(real, e1) == pytest.approx(expected, rel=1e-14)
    assert evaluate_component(real, e1, 3) == diag[2]


def test_tensor_zero_cases_and_linearity():
    x = np.array([0.4, 0.8, 0.2])
    z = make_unit_vector([1, 1, -1])
    r1 = sample_field_tensor(3, FieldSpec(1.0, 3, "tensor"), x, np.random.default_rng(2))
    r0 = DisorderRealization(0.0, x, None, r1.tensors)
    assert evaluate_g(r0, z) == 0.0
    assert evaluate_g(DisorderRealization(1.0, np.zeros(3), None, r1.tensors), z) == 0.0
    r2 = DisorderRealization(2.0, x, None, r1.tensors)
    assert evaluate_g(r2, z) == 2 * evaluate_g(r1, z)


def test_tensor_budget_and_covariance_realization_errors():
    with pytest.raises(ValueError, match="budget"):
        sample_field_tensor(10, FieldSpec(1.0, 8, "tensor"), np.ones(8), np.random.default_rng(0))
    with pytest.raises(ValueError, match="only on support"):
        evaluate_g(DisorderRealization(1.0, ONES[:3], np.zeros(2)), make_unit_vector([1, 0]))


def test_tensor_covariance_matches_xi():
    # fixed x; e1 and a nearby point so the cross term is well resolved at 10^4 draws
    x = np.array([0.9, 0.6, 0.8])
    a = make_unit_vector([1, 0, 0])
    b = make_unit_vector([0.9, np.sqrt(1 - 0.81), 0])
    nu = make_measure([a, b], [1, 1])
    rng = np.random.default_rng(11)
    spec = FieldSpec(1.0, 3, "tensor")
    vals = np.array([sample_field_tensor(3, spec, x, rng, support=nu).field_values for _ in range(10_000)])
    emp = np.cov(vals.T)
    expected = covariance_matrix(nu, FieldSpec(1.0, 3), x)
    np.testing.assert_allclose(emp, expected, rtol=0.05)


def test_sup_abs_field():
    assert sup_abs_field(np.zeros(4)) == 0.0
    assert sup_abs_field(DisorderRealization(1.0, ONES[:2], np.array([1.0, -3.0, 2.0]))) == 3.0
    real = DisorderRealization(1.5, ONES[:2], np.array([0.3, -1.1, 0.7]))
    assert sup_abs_field(real.scaled(3.0)) == 2 * sup_abs_field(real)
