"""Differentially private hypothesis selection."""
from .covers import (
    ExplicitCover,
    LatticeCover,
    UnivariateGaussianCover,
    gaussian_cov_cover,
    gaussian_mean_cover,
    greedy_packing,
    is_cover,
    is_packing,
    mixture_cover,
    packing_lower_bound_n,
    product_cover,
)
from .distributions import (
    Categorical,
    Dataset,
    Domain,
    EstimatorConfig,
    Gaussian,
    Hypothesis,
    Mixture,
    ProductCategorical,
    SphericalGaussian,
    UnivariateGaussian,
    density,
    hypothesis_from_dict,
    sample,
    scheffe_mass,
    tv_distance,
)
from .errors import (
    CoverSizeError,
    DomainError,
    EmptyInputError,
    InvalidParameterError,
    PrivselError,
    UnsupportedExactError,
)
from .mechanisms import GapMaxParams, PrivacyBudget, exponential_mechanism, gap_max
from .scheffe import (
    ContestOutcome,
    ContestParams,
    PairTable,
    ScheffeStats,
    advanced_score,
    gamma,
    pairwise_contest,
    score,
)
from .selection import (
    SelectionParams,
    SelectionReport,
    naive_laplace_select,
    phs,
    required_n_phs,
    select_gapmax,
    semi_agnostic_select,
)

__version__ = "0.1.0"

__all__ = [
    "advanced_score",
    "Categorical",
    "ContestOutcome",
    "ContestParams",
    "CoverSizeError",
    "Dataset",
    "density",
    "Domain",
    "DomainError",
    "EmptyInputError",
    "EstimatorConfig",
    "ExplicitCover",
    "exponential_mechanism",
    "gamma",
    "gap_max",
    "GapMaxParams",
    "Gaussian",
    "gaussian_cov_cover",
    "gaussian_mean_cover",
    "greedy_packing",
    "Hypothesis",
    "hypothesis_from_dict",
    "InvalidParameterError",
    "is_cover",
    "is_packing",
    "LatticeCover",
    "Mixture",
    "mixture_cover",
    "naive_laplace_select",
    "packing_lower_bound_n",
    "PairTable",
    "pairwise_contest",
    "phs",
    "PrivacyBudget",
    "PrivselError",
    "product_cover",
    "ProductCategorical",
    "required_n_phs",
    "sample",
    "scheffe_mass",
    "ScheffeStats",
    "score",
    "select_gapmax",
    "SelectionParams",
    "SelectionReport",
    "semi_agnostic_select",
    "SphericalGaussian",
    "tv_distance",
    "UnivariateGaussian",
    "UnivariateGaussianCover",
    "UnsupportedExactError",
]
