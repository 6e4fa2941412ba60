"""SL(2) cocycles over the Bernoulli shift: exponents, Hölder perturbations, regions."""
from .cocycle import (
    ConstructionParams,
    HolderNorm,
    LocallyConstantCocycle,
    build_base,
    build_difference,
    build_perturbation,
    build_perturbed,
    closed_form_Bn,
    difference,
    fiber_bunching_test,
    holder_bound,
    holder_bound_decays,
    holder_norm,
    holder_seminorm_exact,
    identity_cocycle,
    iterate,
    sup_norm,
)
from .estimator import LyapunovEstimator, RegionLabeler
from .exceptions import (
    CapacityError,
    CocycleLabError,
    InsufficientContextError,
    InvalidInputError,
    InvalidParameterError,
    SingularMatrixError,
    UndefinedDistanceError,
)
from .lyapunov import (
    ExponentEstimate,
    ReturnExcursion,
    exact_exponent_base,
    induced_exponent_check,
    induced_matrix,
    kac_check,
    mc_exponent,
    sample_return_excursions,
    verify_swap,
)
from .mat2 import Mat2, inverse, spectral_norm
from .regions import Label, ParameterPoint, RegionReport, classify, sweep
from .shift import (
    BernoulliParams,
    CylinderSpec,
    Word,
    cylinder_measure,
    first_disagreement_radius,
    sample_window,
    shift_cylinder,
    word_distance,
)

__all__ = [
    "BernoulliParams",
    "build_base",
    "build_difference",
    "build_perturbation",
    "build_perturbed",
    "CapacityError",
    "classify",
    "closed_form_Bn",
    "CocycleLabError",
    "ConstructionParams",
    "cylinder_measure",
    "CylinderSpec",
    "difference",
    "exact_exponent_base",
    "ExponentEstimate",
    "fiber_bunching_test",
    "first_disagreement_radius",
    "holder_bound",
    "holder_bound_decays",
    "holder_norm",
    "holder_seminorm_exact",
    "HolderNorm",
    "identity_cocycle",
    "induced_exponent_check",
    "induced_matrix",
    "inverse",
    "InsufficientContextError",
    "InvalidInputError",
    "InvalidParameterError",
    "iterate",
    "kac_check",
    "Label",
    "Mat2",
    "LocallyConstantCocycle",
    "LyapunovEstimator",
    "mc_exponent",
    "ParameterPoint",
    "RegionLabeler",
    "RegionReport",
    "ReturnExcursion",
    "sample_return_excursions",
    "sample_window",
    "shift_cylinder",
    "spectral_norm",
    "SingularMatrixError",
    "sup_norm",
    "sweep",
    "UndefinedDistanceError",
    "verify_swap",
    "Word",
    "word_distance",
]

__version__ = "0.1.0"
