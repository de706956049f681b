"""Assembly and solution of the immersed virtual element scheme for the H1 problem."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ivem.ife_local import CoefficientPair
from ivem.linear_solver import DEFAULT_TOL, CGReport, SparseSystem, solve
from ivem.mesh_geometry import CutTopology, InterfaceMesh
from ivem.projection import H1ProjectionOperator, build_h1_projection
from ivem.quadrature import polygon_quadrature
from ivem.standard_elements import p1_load, p1_stiffness
from ivem.virtual_dofs import DofMap, build_dof_maps


@dataclass
class LocalSystemH1:
    element: int
    matrix: np.ndarray
    load: np.ndarray
    dofs: np.ndarray
    consistency: np.ndarray
    stabilization: np.ndarray


def stabilization_differences(op: H1ProjectionOperator) -> np.ndarray:
    """(N, N): endpoint difference of ``phi_j - Pi phi_j`` along each sub-edge."""
    cut = op.cut
    n = cut.n_nodes
    nxt = (np.arange(n) + 1) % n
    D = np.zeros((n, n))
    D[np.arange(n), nxt] += 1.0
    D[np.arange(n), np.arange(n)] -= 1.0
    Ge = np.where(cut.edge_sign[:, None, None] > 0, op.M[None], np.eye(2)[None])
    dx = cut.nodes[nxt] - cut.nodes
    return D - np.einsum("ei,eij,jk->ek", dx, Ge, op.grad_matrix)


def local_h1_matrix(cut: CutTopology, coef: CoefficientPair, op: H1ProjectionOperator | None = None):
    """Consistency plus DoF-difference stabilization on one interface element.

    Returns ``(A, consistency, stabilization)``.
    """
    if op is None:
        op = build_h1_projection(cut, coef)
    C = op.grad_matrix
    consistency = C.T @ op.gram @ C
    W = stabilization_differences(op)
    beta_e = coef.beta(cut.edge_sign)
    stab = W.T @ (beta_e[:, None] * W)
    return consistency + stab, consistency, stab


def projected_basis_values(op: H1ProjectionOperator, pts: np.ndarray, sign) -> np.ndarray:
    """(q, N): projected nodal basis functions at points on one side."""
    G = op.M if sign > 0 else np.eye(2)
    return (pts - op.cut.x_m) @ G @ op.grad_matrix + op.matrix[0][None, :]


def local_h1_load(cut: CutTopology, coef: CoefficientPair, f, op: H1ProjectionOperator | None = None, degree: int = 4):
    if op is None:
        op = build_h1_projection(cut, coef)
    load = np.zeros(cut.n_nodes)
    for poly, sign in ((cut.sub_plus, 1), (cut.sub_minus, -1)):
        q = polygon_quadrature(poly, degree, h=cut.diameter)
        if len(q.weights) == 0:
            continue
        fv = np.asarray(f(q.points), dtype=float)
        load += (q.weights * fv) @ projected_basis_values(op, q.points, sign)
    return load


def local_h1_system(imesh: InterfaceMesh, dofmap: DofMap, t: int, coef: CoefficientPair, f=None, degree: int = 4,
                    op: H1ProjectionOperator | None = None):
    cut = imesh.cuts[t]
    if op is None:
        op = build_h1_projection(cut, coef)
    A, cons, stab = local_h1_matrix(cut, coef, op)
    load = np.zeros(cut.n_nodes) if f is None else local_h1_load(cut, coef, f, op, degree)
    return LocalSystemH1(t, A, load, dofmap.local_nodes(t), cons, stab)


@dataclass
class AssembledH1:
    dofmap: DofMap
    coef: CoefficientPair
    matrix: sp.csr_matrix
    rhs: np.ndarray
    projections: dict[int, H1ProjectionOperator]
    stabilization: sp.csr_matrix


def assemble_h1(imesh: InterfaceMesh, coef: CoefficientPair, f=None, dofmap: DofMap | None = None, degree: int = 4,
                element_order=None) -> AssembledH1:
    """Global stiffness matrix and load vector before boundary conditions."""
    if dofmap is None:
        dofmap = build_dof_maps(imesh)
    mesh = imesh.mesh
    n = dofmap.n_nodal
    regular = np.nonzero(imesh.labels != 0)[0]
    if element_order is not None:
        order = np.asarray(element_order)
        regular = order[imesh.labels[order] != 0]
    tri = mesh.triangles[regular]
    p = mesh.vertices[tri]
    beta = np.where(imesh.labels[regular] > 0, coef.beta_plus, coef.beta_minus)
    K = p1_stiffness(p, beta)
    rows = [np.repeat(tri, 3, axis=1).ravel()]
    cols = [np.tile(tri, (1, 3)).ravel()]
    vals = [K.ravel()]
    rhs = np.zeros(n)
    if f is not None:
        np.add.at(rhs, tri.ravel(), p1_load(p, f, degree).ravel())
    srows, scols, svals = [], [], []
    projections = {}
    cut_elems = sorted(imesh.cuts) if element_order is None else [t for t in element_order if t in imesh.cuts]
    for t in cut_elems:
        projections[t] = build_h1_projection(imesh.cuts[t], coef)
        loc = local_h1_system(imesh, dofmap, t, coef, f, degree, projections[t])
        d = loc.dofs
        rows.append(np.repeat(d, len(d)))
        cols.append(np.tile(d, len(d)))
        vals.append(loc.matrix.ravel())
        srows.append(np.repeat(d, len(d)))
        scols.append(np.tile(d, len(d)))
        svals.append(loc.stabilization.ravel())
        np.add.at(rhs, d, loc.load)
    A = _coo_sum(rows, cols, vals, n)
    S = _coo_sum(srows, scols, svals, n)
    return AssembledH1(dofmap, coef, A, rhs, projections, S)


def _coo_sum(rows, cols, vals, n) -> sp.csr_matrix:
    if not rows:
        return sp.csr_matrix((n, n))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.concatenate(vals)
    # sort entries so duplicate summation order does not depend on element order
    order = np.lexsort((v, c, r))
    A = sp.csr_matrix((v[order], (r[order], c[order])), shape=(n, n))
    A.sum_duplicates()
    A.sort_indices()
    return A


@dataclass
class H1Solution:
    assembled: AssembledH1
    values: np.ndarray
    report: CGReport
    free: np.ndarray
    reduced: SparseSystem

    @property
    def dofmap(self) -> DofMap:
        return self.assembled.dofmap


def apply_dirichlet(A: sp.csr_matrix, b: np.ndarray, boundary: np.ndarray, values: np.ndarray):
    """Symmetric elimination; returns the reduced system and the free mask."""
    free = ~boundary
    g = np.where(boundary, values, 0.0)
    rhs = b - A @ g
    A_ff = A[free][:, free]
    return SparseSystem(A_ff, rhs[free]), free, g


def assemble_and_solve_h1(imesh: InterfaceMesh, coef: CoefficientPair, f=None, dirichlet=None, *,
                          solver: str = "cg", tol: float = DEFAULT_TOL, degree: int = 4) -> H1Solution:
    """Solve ``-div(beta grad u) = f`` with ``u = dirichlet`` on the outer boundary."""
    asm = assemble_h1(imesh, coef, f, degree=degree)
    dm = asm.dofmap
    bvals = np.zeros(dm.n_nodal)
    if dirichlet is not None:
        bvals[dm.nodal_boundary] = np.asarray(dirichlet(dm.node_coords[dm.nodal_boundary]), dtype=float)
    system, free, g = apply_dirichlet(asm.matrix, asm.rhs, dm.nodal_boundary, bvals)
    x, report = solve(system, solver, tol)
    u = g.copy()
    u[free] = x
    return H1Solution(asm, u, report, free, system)
