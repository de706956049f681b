"""Global degrees of freedom for the conforming immersed virtual element spaces.

Nodal DoFs live at mesh vertices and at cut points. Edge DoFs are average
tangential components on sub-edges: an uncut background edge carries one, a cut
edge two (low vertex -> cut point, cut point -> high vertex). Global edge
orientation runs from the lower to the higher vertex index of the host edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ivem.errors import GeometryError
from ivem.ife_local import CoefficientPair
from ivem.mesh_geometry import CutTopology, InterfaceMesh, Label
from ivem.quadrature import batch_edge_quadrature


@dataclass
class DofMap:
    imesh: InterfaceMesh
    n_nodal: int
    n_edge: int
    node_coords: np.ndarray  # (n_nodal, 2)
    nodal_boundary: np.ndarray  # bool (n_nodal,)
    edge_nodes: np.ndarray  # (n_edge, 2) global nodal ids, start -> end in global orientation
    edge_boundary: np.ndarray  # bool (n_edge,)
    edge_dof_start: np.ndarray  # (n_bg_edges,) first edge DoF of each background edge
    cut_node: dict[int, int]  # background edge -> nodal id of its cut point
    tri_edge_dofs: np.ndarray  # (nt, 3) valid on non-interface triangles
    tri_edge_signs: np.ndarray  # (nt, 3)
    elem_nodes: dict[int, np.ndarray]  # interface elements: nodal ids in boundary order
    elem_edge_dofs: dict[int, np.ndarray]
    elem_edge_signs: dict[int, np.ndarray]

    @property
    def mesh(self):
        return self.imesh.mesh

    def local_nodes(self, t: int) -> np.ndarray:
        if t in self.elem_nodes:
            return self.elem_nodes[t]
        return self.mesh.triangles[t]

    def local_edges(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        if t in self.elem_edge_dofs:
            return self.elem_edge_dofs[t], self.elem_edge_signs[t]
        return self.tri_edge_dofs[t], self.tri_edge_signs[t]

    def local_edge_values(self, vec: np.ndarray, t: int) -> np.ndarray:
        """Edge DoFs of element ``t`` in its counterclockwise orientation."""
        dofs, signs = self.local_edges(t)
        return signs * vec[dofs]

    @property
    def edge_vectors(self) -> np.ndarray:
        return self.node_coords[self.edge_nodes[:, 1]] - self.node_coords[self.edge_nodes[:, 0]]

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.edge_vectors, axis=1)

    def discrete_gradient(self, p: np.ndarray) -> np.ndarray:
        """Edge DoFs of the gradient of the nodal function with DoFs ``p``."""
        return (p[self.edge_nodes[:, 1]] - p[self.edge_nodes[:, 0]]) / self.edge_lengths


def build_dof_maps(imesh: InterfaceMesh) -> DofMap:
    mesh = imesh.mesh
    nv = mesh.n_vertices
    cut_edges = sorted(imesh.cut_cache)
    cut_node = {e: nv + k for k, e in enumerate(cut_edges)}
    coords = np.vstack([mesh.vertices] + [imesh.cut_cache[e][None] for e in cut_edges])

    ndof_per_edge = np.ones(mesh.n_edges, dtype=np.int64)
    ndof_per_edge[cut_edges] = 2
    start = np.concatenate([[0], np.cumsum(ndof_per_edge)[:-1]])
    n_edge = int(ndof_per_edge.sum())
    edge_nodes = np.empty((n_edge, 2), dtype=np.int64)
    edge_host = np.empty(n_edge, dtype=np.int64)
    uncut = ndof_per_edge == 1
    edge_nodes[start[uncut]] = mesh.edges[uncut]
    edge_host[start[uncut]] = np.nonzero(uncut)[0]
    for e in cut_edges:
        lo, hi = mesh.edges[e]
        edge_nodes[start[e]] = (lo, cut_node[e])
        edge_nodes[start[e] + 1] = (cut_node[e], hi)
        edge_host[start[e]] = edge_host[start[e] + 1] = e

    nodal_boundary = mesh.on_boundary(coords)
    edge_boundary = mesh.boundary_edges[edge_host]

    tri = mesh.triangles
    tri_edge_dofs = start[mesh.tri_edges]
    tri_edge_signs = np.where(tri < np.roll(tri, -1, axis=1), 1.0, -1.0)

    elem_nodes, elem_dofs, elem_signs = {}, {}, {}
    for t, cut in imesh.cuts.items():
        keys = cut.node_keys
        ids = np.array([k if k >= 0 else cut_node[-k - 1] for k in keys], dtype=np.int64)
        n = len(ids)
        dofs = np.empty(n, dtype=np.int64)
        signs = np.empty(n)
        for k in range(n):
            e = int(cut.edge_host[k])
            a, b = ids[k], ids[(k + 1) % n]
            if ndof_per_edge[e] == 1:
                dofs[k] = start[e]
            else:
                c = cut_node[e]
                if c not in (a, b):
                    raise GeometryError(f"element {t}: sub-edge {k} of cut edge {e} misses its cut point")
                v = b if a == c else a
                dofs[k] = start[e] + (0 if v == mesh.edges[e, 0] else 1)
            ga, gb = edge_nodes[dofs[k]]
            if (ga, gb) == (a, b):
                signs[k] = 1.0
            elif (ga, gb) == (b, a):
                signs[k] = -1.0
            else:
                raise GeometryError(f"element {t}: sub-edge {k} does not match global edge {dofs[k]}")
        elem_nodes[t], elem_dofs[t], elem_signs[t] = ids, dofs, signs

    return DofMap(
        imesh=imesh,
        n_nodal=len(coords),
        n_edge=n_edge,
        node_coords=coords,
        nodal_boundary=nodal_boundary,
        edge_nodes=edge_nodes,
        edge_boundary=edge_boundary,
        edge_dof_start=start,
        cut_node=cut_node,
        tri_edge_dofs=tri_edge_dofs,
        tri_edge_signs=tri_edge_signs,
        elem_nodes=elem_nodes,
        elem_edge_dofs=elem_dofs,
        elem_edge_signs=elem_signs,
    )


def interpolate_nodal(dofmap: DofMap, u) -> np.ndarray:
    """Values of ``u`` at every vertex and cut point."""
    return np.asarray(u(dofmap.node_coords), dtype=float)


def interpolate_edge(dofmap: DofMap, u, degree: int = 5) -> np.ndarray:
    """Average tangential component of ``u`` on every (sub-)edge."""
    a = dofmap.node_coords[dofmap.edge_nodes[:, 0]]
    b = dofmap.node_coords[dofmap.edge_nodes[:, 1]]
    pts, w = batch_edge_quadrature(a, b, degree)
    vals = np.asarray(u(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape)
    length = np.linalg.norm(b - a, axis=1)
    tangent = (b - a) / length[:, None]
    return np.einsum("eq,eqd,ed->e", w, vals, tangent) / length


# ---------------------------------------------------------------------------
# curl from DoFs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ElementCurlData:
    alpha_K: float
    factor_plus: float  # curl+ = factor_plus * circulation
    factor_minus: float


def element_curl_data(cut: CutTopology, coef: CoefficientPair) -> ElementCurlData:
    alpha_K = (cut.area_plus * coef.alpha_minus + cut.area_minus * coef.alpha_plus) / cut.area
    denom = cut.area * alpha_K
    return ElementCurlData(alpha_K, coef.alpha_minus / denom, coef.alpha_plus / denom)


def curl_from_dofs(cut: CutTopology, coef: CoefficientPair, local_dofs) -> tuple[float, float]:
    """Piecewise constant curl (plus, minus) of the virtual field with these edge DoFs."""
    circulation = float(np.dot(cut.edge_length, np.asarray(local_dofs, dtype=float)))
    data = element_curl_data(cut, coef)
    return data.factor_plus * circulation, data.factor_minus * circulation


def curl_rows(cut: CutTopology, coef: CoefficientPair) -> tuple[np.ndarray, np.ndarray]:
    """Linear maps from local edge DoFs to curl+ and curl-."""
    data = element_curl_data(cut, coef)
    return data.factor_plus * cut.edge_length, data.factor_minus * cut.edge_length


def element_label(imesh: InterfaceMesh, t: int) -> Label:
    return Label(int(imesh.labels[t]))
