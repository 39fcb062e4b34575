"""Random p-spin perturbations of measures on the sphere and the positivity of overlaps."""

__version__ = "0.1.0"

from .sphere_measure import (
    DiscreteMeasure,
    ReplicaPredicate,
    UnitVector,
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
from .disorder_field import (
    DisorderRealization,
    FieldSampler,
    FieldSpec,
    covariance_matrix,
    evaluate_g,
    sample_field_covariance,
    sample_field_tensor,
    sample_x,
    sup_abs_field,
    xi,
)
from .estimators import (
    EstimateReport,
    TestFunction,
    estimate_concentration,
    estimate_fn,
    estimate_gg_residual,
    estimate_lemma1,
    estimate_positivity,
    estimate_sup_scaling,
    find_good_perturbation,
)
