"""Assembly and solution of the immersed virtual element scheme for the H(curl) problem.

Solves ``curl(alpha curl u) + beta u = f`` with prescribed tangential trace on
the outer boundary. Local DoFs are average tangential components on the
sub-edges, oriented counterclockwise around the element; the global
orientation runs from the lower to the higher nodal index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ivem.ife_local import CoefficientPair
from ivem.linear_solver import DEFAULT_TOL, CGReport, SparseSystem, solve
from ivem.mesh_geometry import CutTopology, InterfaceMesh
from ivem.projection import CurlProjectionOperator, build_curl_projection
from ivem.quadrature import polygon_quadrature
from ivem.scheme_h1 import _coo_sum, apply_dirichlet
from ivem.standard_elements import nd0_load, nd0_matrices
from ivem.virtual_dofs import DofMap, build_dof_maps, curl_rows, interpolate_edge

STABILIZATION_VARIANTS = ("O1", "sqrt_h")


@dataclass
class LocalSystemCurl:
    element: int
    matrix: np.ndarray
    load: np.ndarray
    dofs: np.ndarray
    signs: np.ndarray
    curlcurl: np.ndarray
    mass: np.ndarray
    stabilization: np.ndarray


def _stab_weight(cut: CutTopology, variant: str) -> float:
    if variant == "O1":
        return 1.0
    if variant == "sqrt_h":
        # |e| (h^{1/2})^2 scaling of the tangential jump
        return cut.diameter
    raise ValueError(f"unknown stabilization variant {variant!r}; expected one of {STABILIZATION_VARIANTS}")


def local_curl_matrix(cut: CutTopology, coef: CoefficientPair, op: CurlProjectionOperator | None = None,
                      variant: str = "O1"):
    """Curl-curl, projected mass and tangential stabilization on one interface element.

    Returns ``(A, curlcurl, mass, stabilization)`` in the element's ccw DoF orientation.
    """
    if op is None:
        op = build_curl_projection(cut, coef)
    cp, cm = curl_rows(cut, coef)
    curlcurl = coef.alpha_plus * cut.area_plus * np.outer(cp, cp) + coef.alpha_minus * cut.area_minus * np.outer(cm, cm)
    mass = op.matrix.T @ op.gram @ op.matrix
    W = np.eye(cut.n_nodes) - op.edge_tangential()
    weight = coef.beta(cut.edge_sign) * cut.edge_length * _stab_weight(cut, variant)
    stab = W.T @ (weight[:, None] * W)
    return curlcurl + mass + stab, curlcurl, mass, stab


def local_curl_load(cut: CutTopology, coef: CoefficientPair, f, op: CurlProjectionOperator | None = None,
                    degree: int = 4) -> np.ndarray:
    """``int_K f . (Pi phi_i)`` by quadrature on the two sub-polygons."""
    if op is None:
        op = build_curl_projection(cut, coef)
    F = {}
    for poly, sign in ((cut.sub_plus, 1), (cut.sub_minus, -1)):
        q = polygon_quadrature(poly, degree, h=cut.diameter)
        if len(q.weights) == 0:
            F[sign] = np.zeros(2)
            continue
        fv = np.asarray(f(q.points), dtype=float).reshape(-1, 2)
        F[sign] = q.weights @ fv
    return (F[1] @ op.M + F[-1]) @ op.matrix


def local_curl_system(imesh: InterfaceMesh, dofmap: DofMap, t: int, coef: CoefficientPair, f=None, degree: int = 4,
                      op: CurlProjectionOperator | None = None, variant: str = "O1") -> LocalSystemCurl:
    cut = imesh.cuts[t]
    if op is None:
        op = build_curl_projection(cut, coef)
    A, cc, mass, stab = local_curl_matrix(cut, coef, op, variant)
    load = np.zeros(cut.n_nodes) if f is None else local_curl_load(cut, coef, f, op, degree)
    dofs, signs = dofmap.local_edges(t)
    return LocalSystemCurl(t, A, load, dofs, signs, cc, mass, stab)


@dataclass
class AssembledCurl:
    dofmap: DofMap
    coef: CoefficientPair
    matrix: sp.csr_matrix
    rhs: np.ndarray
    curlcurl: sp.csr_matrix
    projections: dict[int, CurlProjectionOperator]
    variant: str


def assemble_curl(imesh: InterfaceMesh, coef: CoefficientPair, f=None, dofmap: DofMap | None = None, degree: int = 4,
                  variant: str = "O1", element_order=None) -> AssembledCurl:
    """Global matrix (and its curl-curl block) and load vector before boundary conditions."""
    if variant not in STABILIZATION_VARIANTS:
        raise ValueError(f"unknown stabilization variant {variant!r}; expected one of {STABILIZATION_VARIANTS}")
    if dofmap is None:
        dofmap = build_dof_maps(imesh)
    mesh = imesh.mesh
    n = dofmap.n_edge
    order = np.arange(len(mesh.triangles)) if element_order is None else np.asarray(element_order)
    regular = order[imesh.labels[order] != 0]
    p = mesh.vertices[mesh.triangles[regular]]
    plus = imesh.labels[regular] > 0
    alpha = np.where(plus, coef.alpha_plus, coef.alpha_minus)
    beta = np.where(plus, coef.beta_plus, coef.beta_minus)
    cc, mass = nd0_matrices(p, alpha, beta)
    dofs = dofmap.tri_edge_dofs[regular]
    s = dofmap.tri_edge_signs[regular].astype(float)
    ss = s[:, :, None] * s[:, None, :]
    r = np.repeat(dofs, 3, axis=1).ravel()
    c = np.tile(dofs, (1, 3)).ravel()
    rows, cols, vals = [r], [c], [((cc + mass) * ss).ravel()]
    crows, ccols, cvals = [r], [c], [(cc * ss).ravel()]
    rhs = np.zeros(n)
    if f is not None:
        np.add.at(rhs, dofs.ravel(), (nd0_load(p, f, degree) * s).ravel())
    projections = {}
    for t in (int(k) for k in order if int(k) in imesh.cuts):
        projections[t] = build_curl_projection(imesh.cuts[t], coef)
        loc = local_curl_system(imesh, dofmap, t, coef, f, degree, projections[t], variant)
        d, sg = loc.dofs, loc.signs.astype(float)
        S = np.outer(sg, sg)
        rr, cc_ = np.repeat(d, len(d)), np.tile(d, len(d))
        rows.append(rr)
        cols.append(cc_)
        vals.append((loc.matrix * S).ravel())
        crows.append(rr)
        ccols.append(cc_)
        cvals.append((loc.curlcurl * S).ravel())
        np.add.at(rhs, d, loc.load * sg)
    A = _coo_sum(rows, cols, vals, n)
    C = _coo_sum(crows, ccols, cvals, n)
    return AssembledCurl(dofmap, coef, A, rhs, C, projections, variant)


@dataclass
class CurlSolution:
    assembled: AssembledCurl
    values: np.ndarray
    report: CGReport
    free: np.ndarray
    reduced: SparseSystem

    @property
    def dofmap(self) -> DofMap:
        return self.assembled.dofmap


def assemble_and_solve_curl(imesh: InterfaceMesh, coef: CoefficientPair, f=None, tangential=None, *,
                            solver: str = "cg", tol: float = DEFAULT_TOL, degree: int = 4, variant: str = "O1",
                            boundary_degree: int = 5) -> CurlSolution:
    """Solve with edge averages of the vector field ``tangential`` imposed on boundary edges."""
    asm = assemble_curl(imesh, coef, f, degree=degree, variant=variant)
    dm = asm.dofmap
    bvals = np.zeros(dm.n_edge)
    if tangential is not None:
        bvals[dm.edge_boundary] = interpolate_edge(dm, tangential, boundary_degree)[dm.edge_boundary]
    system, free, g = apply_dirichlet(asm.matrix, asm.rhs, dm.edge_boundary, bvals)
    x, report = solve(system, solver, tol)
    u = g.copy()
    u[free] = x
    return CurlSolution(asm, u, report, free, system)
