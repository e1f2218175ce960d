"""Generation matrices for hierarchical trees and optimally consistent
differentially private tree release."""

from genmat.errors import GenMatError
from genmat.tree import HierarchicalTree, MappingMatrix, apply_mapping, build_tree, k_order_subtree
from genmat.matrix import (
    GenerationMatrix,
    build,
    diagonal_decomposition,
    eigenvalues,
    eigenvector,
    is_similar,
    leading_submatrix,
    structure_matrix,
)
from genmat.propagate import (
    ancestor_indicator,
    child_counts,
    common_ancestor_counts,
    depths,
    sibling_indicator,
    solve_downward,
    solve_upward,
    subtree_sizes,
)
from genmat.release import (
    ConstraintMatrix,
    EquivalentGM,
    ReleaseReport,
    add_laplace_noise,
    build_tree_values,
    construct_equivalent_gm,
    dense_oracle_release,
    gmc_release,
    gmc_release_nosqrt,
    inverse_build,
    run_release,
    theoretical_mse,
)
from genmat.metrics import metric_bias, metric_rmse_nq, metric_rmse_rq

__version__ = "0.1.0"

__all__ = [
    "ConstraintMatrix",
    "EquivalentGM",
    "GenMatError",
    "GenerationMatrix",
    "HierarchicalTree",
    "MappingMatrix",
    "ReleaseReport",
    "add_laplace_noise",
    "ancestor_indicator",
    "apply_mapping",
    "build",
    "build_tree",
    "build_tree_values",
    "child_counts",
    "common_ancestor_counts",
    "construct_equivalent_gm",
    "dense_oracle_release",
    "depths",
    "diagonal_decomposition",
    "eigenvalues",
    "eigenvector",
    "gmc_release",
    "gmc_release_nosqrt",
    "inverse_build",
    "is_similar",
    "k_order_subtree",
    "leading_submatrix",
    "metric_bias",
    "metric_rmse_nq",
    "metric_rmse_rq",
    "run_release",
    "sibling_indicator",
    "solve_downward",
    "solve_upward",
    "structure_matrix",
    "subtree_sizes",
    "theoretical_mse",
]
