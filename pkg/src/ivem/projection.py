"""Projections from local virtual functions onto the IFE spaces, computed from DoFs.

All integrals are closed form: the integrands are products of piecewise
constants and piecewise linears on the sub-polygons and sub-edges.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ivem.ife_local import CoefficientPair, IfeH1Function, jump_matrix, rot_h1_potential
from ivem.mesh_geometry import CutTopology
from ivem.quadrature import polygon_centroid
from ivem.virtual_dofs import ElementCurlData, curl_rows, element_curl_data

GRAM_COND_LIMIT = 1e12


class IllConditionedProjection(UserWarning):
    pass


def weighted_gradient_gram(cut: CutTopology, coef: CoefficientPair, M: np.ndarray | None = None) -> np.ndarray:
    """``(beta_h grad chi_i, grad chi_j)_K`` for the two linear H1 IFE basis functions."""
    if M is None:
        M = jump_matrix(cut.n_bar, coef.rho)
    return coef.beta_plus * cut.area_plus * (M.T @ M) + coef.beta_minus * cut.area_minus * np.eye(2)


def interface_frame(cut: CutTopology) -> np.ndarray:
    """(2, 2) with columns ``n_bar`` and ``t_bar``."""
    return np.column_stack([cut.n_bar, cut.t_bar])


def solve_gram(cut: CutTopology, coef: CoefficientPair, rhs_frame: np.ndarray) -> np.ndarray:
    """Solve ``G c = r`` given ``r`` in (n_bar, t_bar) components; returns Cartesian ``c``.

    ``M^T M`` has eigenvectors ``n_bar`` (eigenvalue rho^2) and ``t_bar`` (1), so
    ``G`` is diagonal in that frame. Assembling the right-hand side in the same
    frame avoids the cancellation a Cartesian solve suffers at high contrast.
    """
    bp, bm = coef.beta_plus * cut.area_plus, coef.beta_minus * cut.area_minus
    diag = np.array([bp * coef.rho**2 + bm, bp + bm])
    return interface_frame(cut) @ (rhs_frame / diag[:, None])


def _edge_grad_maps(cut: CutTopology, M: np.ndarray) -> np.ndarray:
    """(N, 2, 2): per sub-edge, the map from ``c`` to the gradient on that edge's side."""
    return np.where(cut.edge_sign[:, None, None] > 0, M[None], np.eye(2)[None])


def _check_condition(G: np.ndarray, element: int) -> float:
    cond = float(np.linalg.cond(G))
    if cond > GRAM_COND_LIMIT:
        warnings.warn(f"element {element}: projection Gram condition number {cond:.3e}", IllConditionedProjection)
    return cond


@dataclass(frozen=True)
class H1ProjectionOperator:
    element: int
    cut: CutTopology
    coef: CoefficientPair
    M: np.ndarray
    gram: np.ndarray
    matrix: np.ndarray  # (3, N): rows c0, c_x, c_y
    condition: float

    @property
    def grad_matrix(self) -> np.ndarray:
        return self.matrix[1:]

    def node_values(self) -> np.ndarray:
        """(N, N): value of the projected basis function j at local node i."""
        cut = self.cut
        sign = np.where(cut.node_sign == 0, 1, cut.node_sign)
        G = np.where(sign[:, None, None] > 0, self.M[None], np.eye(2)[None])
        grads = np.einsum("nij,jk->nik", G, self.grad_matrix)
        return np.einsum("nik,ni->nk", grads, cut.nodes - cut.x_m) + self.matrix[0][None, :]


def build_h1_projection(cut: CutTopology, coef: CoefficientPair) -> H1ProjectionOperator:
    """Energy projection onto the H1 IFE space with boundary-mean normalisation."""
    M = jump_matrix(cut.n_bar, coef.rho)
    n = cut.n_nodes
    G = weighted_gradient_gram(cut, coef, M)
    Ge = _edge_grad_maps(cut, M)
    # flux of grad chi through each sub-edge, beta_e (G_e d) . n_e |e|, for d = n_bar, t_bar;
    # G_e n_bar = rho n_bar on the plus side and beta+ rho = beta-, so the n_bar flux weight is beta- throughout
    flux = np.column_stack([
        coef.beta_minus * (cut.edge_normal @ cut.n_bar),
        coef.beta(cut.edge_sign) * (cut.edge_normal @ cut.t_bar),
    ]) * cut.edge_length[:, None]
    R = np.zeros((2, n))
    nxt = (np.arange(n) + 1) % n
    np.add.at(R.T, np.arange(n), 0.5 * flux)
    np.add.at(R.T, nxt, 0.5 * flux)
    C = solve_gram(cut, coef, R)
    # boundary mean of the trace of each nodal basis function
    w = 0.5 * (cut.edge_length + np.roll(cut.edge_length, 1))
    moment = np.einsum("e,ej,eji->i", cut.edge_length, cut.edge_mid - cut.x_m, Ge)
    c0 = (w - moment @ C) / cut.edge_length.sum()
    return H1ProjectionOperator(
        element=cut.element,
        cut=cut,
        coef=coef,
        M=M,
        gram=G,
        matrix=np.vstack([c0, C]),
        condition=_check_condition(G, cut.element),
    )


def apply_h1_projection(op: H1ProjectionOperator, local_dofs) -> IfeH1Function:
    coeffs = op.matrix @ np.asarray(local_dofs, dtype=float)
    return IfeH1Function(float(coeffs[0]), coeffs[1:], op.cut.x_m, op.M)


@dataclass(frozen=True)
class CurlProjectionOperator:
    element: int
    cut: CutTopology
    coef: CoefficientPair
    M: np.ndarray
    gram: np.ndarray
    matrix: np.ndarray  # (2, N): minus-side vector of the projected field
    curl_data: ElementCurlData
    condition: float

    def edge_tangential(self) -> np.ndarray:
        """(N, N): tangential component of projected basis field j on sub-edge i."""
        Ge = _edge_grad_maps(self.cut, self.M)
        return np.einsum("ei,eij,jk->ek", self.cut.edge_tangent, Ge, self.matrix)


def build_curl_projection(cut: CutTopology, coef: CoefficientPair) -> CurlProjectionOperator:
    """Weighted L2 projection onto the gradients of the H1 IFE space."""
    M = jump_matrix(cut.n_bar, coef.rho)
    n = cut.n_nodes
    G = weighted_gradient_gram(cut, coef, M)
    curl_p, curl_m = curl_rows(cut, coef)
    cen_p = polygon_centroid(cut.sub_plus)
    cen_m = polygon_centroid(cut.sub_minus)
    R = np.zeros((2, n))
    for i, d in enumerate((cut.n_bar, cut.t_bar)):
        phi = rot_h1_potential(d, cut, coef)
        int_p = cut.area_plus * float(phi.value(cen_p, 1))
        int_m = cut.area_minus * float(phi.value(cen_m, -1))
        on_edges = phi.value(cut.edge_mid, cut.edge_sign)
        R[i] = curl_p * int_p + curl_m * int_m - cut.edge_length * on_edges
    P = solve_gram(cut, coef, R)
    return CurlProjectionOperator(
        element=cut.element,
        cut=cut,
        coef=coef,
        M=M,
        gram=G,
        matrix=P,
        curl_data=element_curl_data(cut, coef),
        condition=_check_condition(G, cut.element),
    )


def apply_curl_projection(op: CurlProjectionOperator, local_dofs) -> tuple[np.ndarray, np.ndarray]:
    """(plus value, minus value) of the projected piecewise constant field."""
    c = op.matrix @ np.asarray(local_dofs, dtype=float)
    return op.M @ c, c


IDENTITY = "identity"


def noninterface_projection(element: int) -> str:
    """Projections are the identity on uncut elements; assembly uses P1 / ND0 directly."""
    return IDENTITY
