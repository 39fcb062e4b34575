"""
A purely linear perturbation
============================

The first_order backend keeps only g(z) = v <zeta, z>. Compare it with the
full mixed field on the same measure.
"""

from positivity_lab import FieldSpec, estimate_positivity, simplex

nu = simplex(3)
for backend in ["covariance", "first_order"]:
    row = []
    for v in [0, 2, 8]:
        r = estimate_positivity(nu, FieldSpec(v, backend=backend), 0.2, reps=32, field_draws=128, seed=6)
        row.append(f"{r.mean:.3f}")
    print(f"{backend:>12}: " + "  ".join(row))
