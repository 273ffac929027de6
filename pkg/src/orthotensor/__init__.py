"""Orthogonal atomic tensor decomposition and moment-based mixture estimation."""
from ._kernels import BACKEND
from .estimator import EstimationResult, identify, identify_from_samples
from .flatten import (
    FlatteningMap,
    Signature,
    flatten,
    is_compatible,
    is_strictly_compatible,
    signature_to_two_flattening,
    unflatten,
)
from .linalg import SvdResult, numerical_rank, pseudo_inverse, svd, whiten
from .moments import MixtureModel, empirical_moment, model_moment, sample_mixture
from .otd import Decomposition, StructureViolation, otd, otd1, otd2, reconstruct, verify
from .tensor import (
    Tensor,
    apply_linear,
    apply_linear_vec,
    frobenius_norm,
    outer_power,
    outer_product,
    scalar_product,
)

__version__ = "0.1.0"
