"""Two-step regression: PCA to a low-dimensional subspace, then kernel ridge regression."""

from ._backend import BACKEND
from .errors import ConfigError, NumericalError
from .kernel import GramMatrix, RadialKernel, gram, parse_kernel
from .krr import KrrFit, LabeledSample, cross_validate, fit, predict, predict_clipped
from .pca import Projection, fit_pca
from .spectral import DiscreteMeasure, integral_operator_eigs
from .transport import w1_discrete, w1_equal_weight
from .bounds import verify_stability

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigError",
    "DiscreteMeasure",
    "GramMatrix",
    "KrrFit",
    "LabeledSample",
    "NumericalError",
    "Projection",
    "RadialKernel",
    "cross_validate",
    "fit",
    "fit_pca",
    "gram",
    "integral_operator_eigs",
    "parse_kernel",
    "predict",
    "predict_clipped",
    "verify_stability",
    "w1_discrete",
    "w1_equal_weight",
]
