"""Background triangulation, level-set interfaces and cut-element topology."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ivem.errors import AssumptionViolation, GeometryError
from ivem.quadrature import polygon_area, polygon_centroid

SNAP_TOL = 1e-10
ROOT_TOL = 1e-13


class Label(enum.IntEnum):
    MINUS = -1
    INTERFACE = 0
    PLUS = 1


# ---------------------------------------------------------------------------
# interfaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CircleInterface:
    """``phi(x) = |x - center| - radius``; the disc interior is the minus side."""

    center: tuple[float, float]
    radius: float

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return np.hypot(x[..., 0] - self.center[0], x[..., 1] - self.center[1]) - self.radius

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        d = x - np.asarray(self.center)
        r = np.linalg.norm(d, axis=-1, keepdims=True)
        return d / np.where(r == 0.0, 1.0, r)


@dataclass(frozen=True)
class LineInterface:
    """``phi(x) = (x - point) . normal``; ``normal`` points into the plus side."""

    point: tuple[float, float]
    normal: tuple[float, float]

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return (x[..., 0] - self.point[0]) * self.normal[0] + (x[..., 1] - self.point[1]) * self.normal[1]

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.normal, dtype=float), x.shape).copy()


@dataclass(frozen=True)
class FunctionInterface:
    """User supplied level set; ``func`` must accept arrays of shape (..., 2)."""

    func: Callable
    grad: Callable | None = None

    def evaluate(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def gradient(self, x):
        if self.grad is None:
            raise NotImplementedError("no gradient supplied for this level set")
        return np.asarray(self.grad(np.asarray(x, dtype=float)), dtype=float)


# ---------------------------------------------------------------------------
# background mesh
# ---------------------------------------------------------------------------


@dataclass
class BackgroundMesh:
    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3), counterclockwise
    edges: np.ndarray  # (ne, 2), sorted so edges[:, 0] < edges[:, 1]
    tri_edges: np.ndarray  # (nt, 3); local edge k joins triangles[:, k] and triangles[:, k+1]
    edge_tris: np.ndarray  # (ne, 2); -1 marks a missing neighbour
    domain: tuple[float, float, float, float]
    h: float

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def boundary_edges(self) -> np.ndarray:
        return self.edge_tris[:, 1] < 0

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def on_boundary(self, pts: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        x0, x1, y0, y1 = self.domain
        scale = tol * max(x1 - x0, y1 - y0)
        pts = np.asarray(pts)
        return (
            (np.abs(pts[..., 0] - x0) < scale)
            | (np.abs(pts[..., 0] - x1) < scale)
            | (np.abs(pts[..., 1] - y0) < scale)
            | (np.abs(pts[..., 1] - y1) < scale)
        )


def _connectivity(triangles: np.ndarray, nv: int):
    nt = len(triangles)
    local = np.stack([triangles, np.roll(triangles, -1, axis=1)], axis=-1).reshape(-1, 2)
    keys = np.sort(local, axis=1)
    edges, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    tri_edges = inverse.reshape(nt, 3)
    edge_tris = -np.ones((len(edges), 2), dtype=np.int64)
    owner = np.repeat(np.arange(nt), 3)
    for k, (e, t) in enumerate(zip(inverse, owner)):
        slot = 0 if edge_tris[e, 0] < 0 else 1
        if slot == 1 and edge_tris[e, 1] >= 0:
            raise GeometryError(f"edge {e} is shared by more than two triangles")
        edge_tris[e, slot] = t
    return edges.astype(np.int64), tri_edges.astype(np.int64), edge_tris


def build_uniform_mesh(domain=(0.0, 1.0, 0.0, 1.0), n: int = 8) -> BackgroundMesh:
    """Split an ``n x n`` grid on a rectangle into ``2 n**2`` right triangles."""
    if int(n) != n or n < 2:
        raise ValueError(f"need at least 2 subdivisions per side, got {n}")
    n = int(n)
    x0, x1, y0, y1 = map(float, domain)
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate domain {domain}")
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v00 = (j * (n + 1) + i).ravel()
    v10, v01, v11 = v00 + 1, v00 + n + 1, v00 + n + 2
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)

    edges, tri_edges, edge_tris = _connectivity(triangles, len(vertices))
    h = float(np.hypot((x1 - x0) / n, (y1 - y0) / n))
    return BackgroundMesh(vertices, triangles, edges, tri_edges, edge_tris, (x0, x1, y0, y1), h)


# ---------------------------------------------------------------------------
# vertex signs, snapping and cut points
# ---------------------------------------------------------------------------


def _bisect(ls, a: np.ndarray, b: np.ndarray, tol: float = ROOT_TOL) -> np.ndarray:
    """Parameter s in (0, 1) of a sign change of ``ls`` on each segment a -> b."""
    fa = ls.evaluate(a)
    lo = np.zeros(len(a))
    hi = np.ones(len(a))
    sa = np.sign(fa)
    iters = int(np.ceil(np.log2(1.0 / tol))) + 2
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = ls.evaluate(a + mid[:, None] * (b - a))
        same = np.sign(fm) == sa
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    # secant step inside the final bracket; exact for affine level sets
    flo = ls.evaluate(a + lo[:, None] * (b - a))
    fhi = ls.evaluate(a + hi[:, None] * (b - a))
    denom = flo - fhi
    safe = np.where(denom != 0.0, denom, 1.0)
    s = np.where(denom != 0.0, lo + (hi - lo) * flo / safe, 0.5 * (lo + hi))
    s = np.clip(s, lo, hi)
    bad = ~np.isfinite(s) | (hi - lo > 2 * tol)
    if np.any(bad):
        raise GeometryError(f"root finder failed on {int(bad.sum())} edge(s)")
    return s


def vertex_signs(mesh: BackgroundMesh, ls, snap_tol: float = SNAP_TOL):
    """Signs of the level set at the vertices after snapping, plus the raw cut parameters.

    A vertex closer than ``snap_tol * |e|`` to a cut point on an incident edge gets
    sign 0 (it is treated as lying on the interface).
    Returns ``(signs, cut_params)`` where ``cut_params`` maps edge index to the
    parameter of the cut point along ``edges[e, 0] -> edges[e, 1]``.
    """
    phi = ls.evaluate(mesh.vertices)
    sign = np.where(phi > 0, 1, np.where(phi < 0, -1, 0)).astype(np.int64)
    e = mesh.edges
    changing = np.nonzero(sign[e[:, 0]] * sign[e[:, 1]] < 0)[0]
    params: dict[int, float] = {}
    if len(changing):
        a = mesh.vertices[e[changing, 0]]
        b = mesh.vertices[e[changing, 1]]
        s = _bisect(ls, a, b)
        near_a = s < snap_tol
        near_b = 1.0 - s < snap_tol
        sign[e[changing[near_a], 0]] = 0
        sign[e[changing[near_b], 1]] = 0
        params = {int(k): float(v) for k, v in zip(changing, s)}
    still = {k: v for k, v in params.items() if sign[e[k, 0]] * sign[e[k, 1]] < 0}
    return sign, still


def _labels_from_signs(mesh: BackgroundMesh, sign: np.ndarray) -> np.ndarray:
    s = sign[mesh.triangles]
    has_p = (s > 0).any(axis=1)
    has_m = (s < 0).any(axis=1)
    labels = np.where(has_p & has_m, Label.INTERFACE, np.where(has_m, Label.MINUS, Label.PLUS))
    ec = sign[mesh.edges[:, 0]] * sign[mesh.edges[:, 1]] < 0
    n_changing = ec[mesh.tri_edges].sum(axis=1)
    bad = np.nonzero(n_changing > 2)[0]
    if len(bad):
        raise AssumptionViolation(f"triangle {int(bad[0])} has three sign-changing edges")
    return labels.astype(np.int64)


def classify_elements(mesh: BackgroundMesh, ls, snap_tol: float = SNAP_TOL) -> np.ndarray:
    """Label every triangle PLUS, MINUS or INTERFACE (values of :class:`Label`)."""
    sign, _ = vertex_signs(mesh, ls, snap_tol)
    return _labels_from_signs(mesh, sign)


# ---------------------------------------------------------------------------
# cut topology
# ---------------------------------------------------------------------------


@dataclass
class CutTopology:
    """Geometry of one interface element, treated as a polygon with cut points as nodes.

    ``nodes`` walk the boundary counterclockwise. ``node_keys`` identify nodes
    globally: a vertex index ``>= 0`` or ``-(edge + 1)`` for the cut point on a
    background edge. Sub-edge ``k`` joins nodes ``k`` and ``k + 1``.
    """

    element: int
    nodes: np.ndarray
    node_sign: np.ndarray
    node_keys: np.ndarray
    edge_sign: np.ndarray
    edge_host: np.ndarray
    cut_points: np.ndarray  # (2, 2), b1 then b2 in boundary order
    cut_hosts: np.ndarray  # host background edge of each cut point, -1 for a snapped vertex
    x_m: np.ndarray
    n_bar: np.ndarray
    t_bar: np.ndarray
    sub_plus: np.ndarray
    sub_minus: np.ndarray
    area_plus: float
    area_minus: float
    area: float
    diameter: float
    edge_tangent: np.ndarray = field(init=False)
    edge_length: np.ndarray = field(init=False)
    edge_mid: np.ndarray = field(init=False)
    edge_normal: np.ndarray = field(init=False)

    def __post_init__(self):
        d = np.roll(self.nodes, -1, axis=0) - self.nodes
        self.edge_length = np.linalg.norm(d, axis=1)
        self.edge_tangent = d / self.edge_length[:, None]
        self.edge_mid = self.nodes + 0.5 * d
        self.edge_normal = np.column_stack([self.edge_tangent[:, 1], -self.edge_tangent[:, 0]])

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def gamma_seg(self) -> np.ndarray:
        return self.cut_points

    def edge_endpoints(self, k: int) -> tuple[int, int]:
        return k, (k + 1) % len(self.nodes)

    def region_of(self, pts: np.ndarray) -> np.ndarray:
        """+1 / -1 for points on the plus / minus side of the segment line."""
        s = (np.asarray(pts) - self.x_m) @ self.n_bar
        return np.where(s >= 0.0, 1, -1)


def _cut_point(mesh: BackgroundMesh, ls, e: int, cache: dict | None, params: dict | None):
    if cache is not None and e in cache:
        return cache[e]
    a = mesh.vertices[mesh.edges[e, 0]]
    b = mesh.vertices[mesh.edges[e, 1]]
    if params is not None and e in params:
        s = params[e]
    else:
        s = float(_bisect(ls, a[None], b[None])[0])
    p = a + s * (b - a)
    if cache is not None:
        cache[e] = p
    return p


def compute_cut(
    mesh: BackgroundMesh,
    t: int,
    ls,
    *,
    sign: np.ndarray | None = None,
    cache: dict | None = None,
    params: dict | None = None,
) -> CutTopology:
    """Cut topology of interface triangle ``t``.

    ``cache`` (edge index -> point) makes cut points canonical across elements;
    ``sign`` is the snapped vertex sign array from :func:`vertex_signs`.
    """
    if sign is None:
        sign, params = vertex_signs(mesh, ls)
    tv = mesh.triangles[t]
    s = sign[tv]
    if not ((s > 0).any() and (s < 0).any()):
        raise GeometryError(f"triangle {t} is not an interface element")
    nodes, nsign, keys = [], [], []
    for k in range(3):
        v, w = tv[k], tv[(k + 1) % 3]
        nodes.append(mesh.vertices[v])
        nsign.append(int(sign[v]))
        keys.append(int(v))
        if sign[v] * sign[w] < 0:
            e = int(mesh.tri_edges[t, k])
            nodes.append(_cut_point(mesh, ls, e, cache, params))
            nsign.append(0)
            keys.append(-(e + 1))
    nodes = np.array(nodes)
    nsign = np.array(nsign, dtype=np.int64)
    keys = np.array(keys, dtype=np.int64)
    zero = np.nonzero(nsign == 0)[0]
    if len(zero) != 2:
        raise AssumptionViolation(
            f"triangle {t}: interface meets the boundary in {len(zero)} points, need exactly 2"
        )
    n = len(nodes)
    edge_sign = np.empty(n, dtype=np.int64)
    edge_host = np.empty(n, dtype=np.int64)
    for k in range(n):
        a, b = nsign[k], nsign[(k + 1) % n]
        edge_sign[k] = a if a != 0 else b
        if edge_sign[k] == 0:
            raise AssumptionViolation(f"triangle {t}: a sub-edge lies on the interface")
    # host background edge of each sub-edge
    local_vertex = {int(v): k for k, v in enumerate(tv)}
    for k in range(n):
        ka, kb = keys[k], keys[(k + 1) % n]
        if ka < 0:
            edge_host[k] = -ka - 1
        elif kb < 0:
            edge_host[k] = -kb - 1
        else:
            la, lb = local_vertex[int(ka)], local_vertex[int(kb)]
            kk = la if (la + 1) % 3 == lb else lb
            edge_host[k] = mesh.tri_edges[t, kk]
    cut_points = nodes[zero]
    cut_hosts = np.array([-keys[z] - 1 if keys[z] < 0 else -1 for z in zero], dtype=np.int64)
    plus = nodes[nsign >= 0]
    minus = nodes[nsign <= 0]
    area_plus = polygon_area(plus)
    area_minus = polygon_area(minus)
    area = polygon_area(mesh.vertices[tv])
    if area_plus <= 0.0 or area_minus <= 0.0:
        raise GeometryError(f"triangle {t}: degenerate sub-polygon")
    x_m = 0.5 * (cut_points[0] + cut_points[1])
    d = cut_points[1] - cut_points[0]
    length = float(np.hypot(*d))
    if length == 0.0:
        raise GeometryError(f"triangle {t}: coincident cut points")
    n_bar = np.array([d[1], -d[0]]) / length
    if np.dot(polygon_centroid(plus) - x_m, n_bar) < 0.0:
        n_bar = -n_bar
    t_bar = np.array([-n_bar[1], n_bar[0]])
    p = mesh.vertices[tv]
    diameter = float(max(np.hypot(*(p[i] - p[j])) for i in range(3) for j in range(i)))
    return CutTopology(
        element=int(t),
        nodes=nodes,
        node_sign=nsign,
        node_keys=keys,
        edge_sign=edge_sign,
        edge_host=edge_host,
        cut_points=cut_points,
        cut_hosts=cut_hosts,
        x_m=x_m,
        n_bar=n_bar,
        t_bar=t_bar,
        sub_plus=plus,
        sub_minus=minus,
        area_plus=area_plus,
        area_minus=area_minus,
        area=area,
        diameter=diameter,
    )


@dataclass
class InterfaceMesh:
    """A background mesh together with its classification and cut cache."""

    mesh: BackgroundMesh
    interface: object
    vertex_sign: np.ndarray
    labels: np.ndarray
    cut_cache: dict[int, np.ndarray]
    cuts: dict[int, CutTopology]

    @property
    def interface_elements(self) -> np.ndarray:
        return np.nonzero(self.labels == Label.INTERFACE)[0]

    @property
    def h(self) -> float:
        return self.mesh.h

    def triangle_sign(self) -> np.ndarray:
        """+1/-1 for non-interface triangles, 0 for interface ones."""
        return self.labels.copy()


def cut_mesh(mesh: BackgroundMesh, ls, snap_tol: float = SNAP_TOL) -> InterfaceMesh:
    """Classify all triangles and build canonical cut topologies in one pass."""
    sign, params = vertex_signs(mesh, ls, snap_tol)
    labels = _labels_from_signs(mesh, sign)
    cache: dict[int, np.ndarray] = {}
    for e in sorted(params):
        _cut_point(mesh, ls, e, cache, params)
    cuts = {
        int(t): compute_cut(mesh, int(t), ls, sign=sign, cache=cache, params=params)
        for t in np.nonzero(labels == Label.INTERFACE)[0]
    }
    return InterfaceMesh(mesh, ls, sign, labels, cache, cuts)


def hausdorff_to_circle(cut: CutTopology, center, radius: float, samples: int = 64) -> float:
    """Max distance from points of the cut segment to the circle."""
    s = np.linspace(0.0, 1.0, samples)
    pts = cut.cut_points[0] + s[:, None] * (cut.cut_points[1] - cut.cut_points[0])
    return float(np.max(np.abs(np.hypot(*(pts - np.asarray(center)).T) - radius)))


def dump_mesh(imesh: InterfaceMesh) -> str:
    """Plain-text mesh dump: ``v x y``, ``t i j k`` and ``cut t bx1 by1 bx2 by2`` records."""
    lines = [f"v {x:.12e} {y:.12e}" for x, y in imesh.mesh.vertices]
    lines += [f"t {i} {j} {k}" for i, j, k in imesh.mesh.triangles]
    for t in sorted(imesh.cuts):
        (bx1, by1), (bx2, by2) = imesh.cuts[t].cut_points
        lines.append(f"cut {t} {bx1:.12e} {by1:.12e} {bx2:.12e} {by2:.12e}")
    return "\n".join(lines) + "\n"
