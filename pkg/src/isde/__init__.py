"""Density estimation on the unit cube under a learned independence structure.

The pipeline fits boundary-corrected kernel density estimators for every
feature subset up to a size cap, scores them on a hold-out split, and selects
the exact best partition of the features; the fitted density is the product
of the selected block estimators.  Closed-form block-Gaussian results back
the test suite and the diagnostics.
"""

from ._backend import backend_name
from .bounds import (
    BoundParams,
    bc_envelope,
    estimate_bounding_constant,
    final_bound,
    kl_upper_from_uc,
    selection_bound,
    uc_threshold,
)
from .combinatorics import (
    FeaturePartition,
    FeatureSubset,
    canonicalize,
    count_partitions,
    count_subsets,
    enumerate_partitions,
    enumerate_subsets,
)
from .diagnostics import (
    MonteCarloKl,
    RiskDecompositionReport,
    monte_carlo_kl,
    risk_decomposition_report,
)
from .errors import DataError, IsdeError, ParameterError, StructureError
from .gaussian import (
    GaussianBlockSpec,
    GaussianCopulaDensity,
    Structure,
    bias_upper_bound,
    block_eigenvalues,
    covariance_matrix,
    det_block_perturbed,
    det_equicorrelated,
    equicorrelation,
    kl_almost_independent,
    kl_block_projection,
    kl_equicorrelated_structure,
    kl_js_bound_check,
    optimal_structure,
    sample_gaussian_copula_block,
    structure_partition,
)
from .kernels import BOX, EPANECHNIKOV, KERNELS, TRIANGULAR, Kernel, get_kernel, product_kernel
from .mirror_kde import (
    BandwidthRule,
    MirrorKdeModel,
    fit,
    model_from_dict,
    model_to_dict,
    select_bandwidth,
)
from .pipeline import (
    IsdeConfig,
    IsdeResult,
    evaluate_joint,
    log_evaluate_joint,
    rescale_to_unit_cube,
    result_from_dict,
    result_to_dict,
    run,
    split_data,
)
from .scoring import ScoreTable, build_score_table, partition_score, score_subset, table_to_dict
from .solver import dump_dp_table, solve_branch_and_bound, solve_dp

__version__ = "0.1.0"
