"""Certified Dirichlet eigenvalues of smooth star-shaped planar domains."""

from .basis import DiskMode, MFSBasis, build_mfs, disk_mode, disk_spectrum, eval_basis, mode_basis
from .bounds import (
    BoundConstants,
    CertifiedInterval,
    EigenfunctionErrorBound,
    certify,
    certify_ground_state,
    compute_constants,
    distance_prior,
    eigenfunction_error,
    lower_bound_distance,
)
from .discretization import AssembledSystem, RegularizedSubspace, assemble, regularize
from .geometry import (
    BoundaryQuadrature,
    GeomConstants,
    RadialDomain,
    boundary_point,
    build_domain,
    build_quadrature,
    geom_constants,
)
from .solver import MinimumRecord, SolverConfig, TensionResult, eval_mode, find_minima, refine_minimum, scan, tension_at
from .specfun import BesselZeroTable, bessel_j, bessel_y0, bessel_zeros

__version__ = "0.1.0"
