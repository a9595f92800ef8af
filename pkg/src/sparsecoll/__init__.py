"""Sparse-grid collocation and quadrature for elliptic PDEs with Gaussian or
uniform random coefficients, on a dyadic finite-element hierarchy."""

from .fem import Field, SpatialHierarchy
from .indexset import IndexPlan, MultiIndex, WeightSpec, build_G, build_Lambda, calibrate_xi
from .model import CoefficientModel, rho_defaults
from .nodes import GaussHermite, GaussJacobi, Szabados, family_from_name
from .sparse import (
    SparseEvaluator,
    fully_discrete_interpolate,
    fully_discrete_quadrature,
    functional_quadrature,
    sparse_interpolate,
    sparse_quadrature,
    truncated_expansion,
)
from .study import ExperimentConfig, load_config, run_study

__version__ = "0.1.0"
