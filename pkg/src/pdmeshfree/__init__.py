"""Meshfree peridynamic correspondence operators with bond-associated stabilization."""

from .errors import (AssemblyError, DegenerateNeighborhoodError, PDError, PointCloudParseError,
                     SolverError, UnisolvencyError, ValidationError)
from .kernels import InfluenceFunction, cubic_bspline, inverse_square
from .material import Material, first_pk_stress, lame_from_engineering, small_strain
from .pointcloud import (BULK, DIRICHLET, FREE_SURFACE, FamilyGraph, PointCloud, build_families,
                         generate_polar_grid, generate_uniform_grid, load_pointcloud,
                         perturb_then_refine, save_pointcloud)
from .solver import assemble, build_weights, internal_force, solve, solve_problem
from .verification import (ConvergenceReport, ConvergenceRow, convergence_rate, manufactured_case,
                           patch_test_case, plate_hole_case, rms_error)

__version__ = "0.1.0"

__all__ = [
    "AssemblyError", "DegenerateNeighborhoodError", "PDError", "PointCloudParseError",
    "SolverError", "UnisolvencyError", "ValidationError",
    "InfluenceFunction", "cubic_bspline", "inverse_square",
    "Material", "first_pk_stress", "lame_from_engineering", "small_strain",
    "BULK", "DIRICHLET", "FREE_SURFACE", "FamilyGraph", "PointCloud", "build_families",
    "generate_polar_grid", "generate_uniform_grid", "load_pointcloud", "perturb_then_refine",
    "save_pointcloud",
    "assemble", "build_weights", "internal_force", "solve", "solve_problem",
    "ConvergenceReport", "ConvergenceRow", "convergence_rate", "manufactured_case",
    "patch_test_case", "plate_hole_case", "rms_error",
]
