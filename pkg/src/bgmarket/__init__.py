"""Beja-Goldman disequilibrium market model: exact solution, stability
classification, slow-manifold reductions and a reproducible experiment harness."""

__version__ = "0.1.0"

from .model import AffineSystem, InvalidParameterError, ModelParams, State, affine_form, equilibrium, excess_demands, vector_field
from .spectral import (
    DomainError,
    Region,
    SpectralData,
    StabilityReport,
    Tri,
    classify,
    eigen,
    exact_solution,
    stability_region_grid,
)
from .reduction import (
    DegenerateManifoldError,
    LimitKind,
    ManifoldKind,
    ReducedModel,
    ReductionProblem,
    SlowManifold,
    build_reduction,
    hilbert_check,
    manifold_residual,
    projector,
    reduce,
    reduced_closed_form,
)
from .integrator import IntegratorConfig, Method, Trajectory, integrate_full, integrate_reduced, stiffness_probe
