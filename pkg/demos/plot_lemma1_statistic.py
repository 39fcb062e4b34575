"""
Fluctuations of one p-spin component
=====================================

The statistic E<|g_p - E<g_p>|> splits into a Gibbs spread and a disorder
spread. For a single atom the Gibbs spread vanishes.
"""

import math

from positivity_lab import FieldSpec, antipodal, estimate_lemma1, point_mass

for v in [1, 4, 16, 64]:
    r = estimate_lemma1(antipodal(8), FieldSpec(v), 1, reps=64, field_draws=256, seed=4)
    print(f"v={v:>3}  stat {r.mean:.3f}  stat/sqrt(v) {r.mean / math.sqrt(v):.3f}  "
          f"gibbs {r.meta['gibbs_part']:.3f}  disorder {r.meta['disorder_part']:.3f}")

r = estimate_lemma1(point_mass(4), FieldSpec(3.0, 4), 2, reps=32, field_draws=256)
print("point mass:", r.meta["gibbs_part"], round(r.mean, 3), "vs sqrt(2/pi) =", round(math.sqrt(2 / math.pi), 3))
