"""
Ghirlanda-Guerra residual against the field strength
====================================================

The residual compares a new replica's overlap with replica 1 against the
mixture of old overlaps and an independent copy.
"""

from positivity_lab import FieldSpec, TestFunction, antipodal, estimate_gg_residual
from positivity_lab.sphere_measure import constant_predicate, pair_overlap_leq

nu = antipodal(8)
psi = TestFunction.monomial(1)
f = pair_overlap_leq(0.5)

for v in [1, 5, 20]:
    r = estimate_gg_residual(nu, FieldSpec(v), 2, f, psi, reps=64, field_draws=256, seed=2)
    print(f"v={v:>3}  residual {r.mean:.4f} +- {r.stderr:.4f}  ({r.inner_mode})")

# with one replica and f = 1 the identity is an algebraic tautology
r = estimate_gg_residual(nu, FieldSpec(5), 1, constant_predicate(1), psi, reps=8, field_draws=64)
print("n=1 residual:", r.mean)
