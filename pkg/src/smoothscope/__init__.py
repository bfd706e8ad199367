"""Local Sobolev smoothness estimation for scattered data via nested kernel interpolation."""

from .geometry import BoundingBox, PointSet, bounding_box, fill_distance, knn_chebyshev, rescale_to_unit_cube, separation_radius
from .hierarchy import Hierarchy, fixed_stencils, uniform_subsample
from .interpolation import Interpolant, evaluate, interpolate, native_norm_sq_of_difference
from .kernels import KernelSpec, cross_matrix, gram_matrix, matern_phi
from .salsa import SalsaOptions, SlopeFit, SmoothnessReport, StencilPolicy, SubsamplePolicy, analyze_field, fit_loglog, run_salsa

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "Hierarchy",
    "Interpolant",
    "KernelSpec",
    "PointSet",
    "SalsaOptions",
    "SlopeFit",
    "SmoothnessReport",
    "StencilPolicy",
    "SubsamplePolicy",
    "analyze_field",
    "bounding_box",
    "cross_matrix",
    "evaluate",
    "fill_distance",
    "fit_loglog",
    "fixed_stencils",
    "gram_matrix",
    "interpolate",
    "knn_chebyshev",
    "matern_phi",
    "native_norm_sq_of_difference",
    "rescale_to_unit_cube",
    "run_salsa",
    "separation_radius",
    "uniform_subsample",
]
