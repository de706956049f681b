"""Immersed virtual element method for 2D H1 and H(curl) interface problems on unfitted meshes."""

from ivem.errors import AssumptionViolation, ConfigError, GeometryError, IvemError, NumericalFailure
from ivem.ife_local import CoefficientPair, jump_matrix
from ivem.mesh_geometry import (
    BackgroundMesh,
    CircleInterface,
    CutTopology,
    FunctionInterface,
    InterfaceMesh,
    Label,
    LineInterface,
    build_uniform_mesh,
    classify_elements,
    compute_cut,
    cut_mesh,
)
from ivem.projection import build_curl_projection, build_h1_projection
from ivem.scheme_h1 import assemble_and_solve_h1, assemble_h1
from ivem.scheme_hcurl import assemble_and_solve_curl, assemble_curl
from ivem.virtual_dofs import build_dof_maps, interpolate_edge, interpolate_nodal

__all__ = [
    "AssumptionViolation",
    "BackgroundMesh",
    "CircleInterface",
    "CoefficientPair",
    "ConfigError",
    "CutTopology",
    "FunctionInterface",
    "GeometryError",
    "InterfaceMesh",
    "IvemError",
    "Label",
    "LineInterface",
    "NumericalFailure",
    "assemble_and_solve_curl",
    "assemble_and_solve_h1",
    "assemble_curl",
    "assemble_h1",
    "build_curl_projection",
    "build_dof_maps",
    "build_h1_projection",
    "build_uniform_mesh",
    "classify_elements",
    "compute_cut",
    "cut_mesh",
    "interpolate_edge",
    "interpolate_nodal",
    "jump_matrix",
]

__version__ = "0.1.0"
