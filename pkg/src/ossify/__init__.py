"""Finite-element simulator for scaffold-mediated bone regeneration."""

__version__ = "0.1.0"

from .coupling import (PicardReport, SimulationState, Trajectory,
                       contraction_factor, picard_iterate, run_simulation)
from .materials import (ElasticTensorSpec, ParameterSet, validate_parameters)
from .mesh import (BoundaryTag, FixateurSpec, Mesh, boundary_area,
                   build_cylinder_mesh, validate_mesh)
from .scenario import MeshSpec, Scenario, load_config, preset

__all__ = [
    "__version__",
    "BoundaryTag", "FixateurSpec", "Mesh", "MeshSpec", "Scenario",
    "ElasticTensorSpec", "ParameterSet", "PicardReport", "SimulationState",
    "Trajectory", "boundary_area", "build_cylinder_mesh", "contraction_factor",
    "load_config", "picard_iterate", "preset", "run_simulation",
    "validate_mesh", "validate_parameters",
]
