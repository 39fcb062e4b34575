"""
Concentration of the log-partition function
===========================================

X = log sum_a w_a exp g(z_a) has variance at most 8a, with a the field
variance on the support. A single atom gives Var X = a exactly.
"""

import numpy as np

from positivity_lab import FieldSpec, estimate_concentration, point_mass, random_measure

rng = np.random.default_rng(0)
for k in range(5):
    nu = random_measure(int(rng.integers(1, 9)), int(rng.integers(2, 17)), rng)
    r = estimate_concentration(nu, FieldSpec(5.0), reps=2, field_draws=10_000, seed=k)
    print(f"N={nu.dim} M={nu.size:>2}  Var/(8a) max {r.meta['max_ratio_to_8a']:.3f}")

r = estimate_concentration(point_mass(3), FieldSpec(2.0), reps=2, field_draws=10_000)
print("point mass Var/a:", np.round(r.detail["variance"] / r.detail["a"], 3))
