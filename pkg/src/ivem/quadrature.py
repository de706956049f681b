"""Gauss rules on triangles, convex polygons and segments.

Triangle rules are the symmetric (Dunavant) rules with positive weights,
stored in barycentric form with weights normalised to sum to one.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (q, 2)
    weights: np.ndarray  # (q,)

    def integrate(self, f) -> float:
        if len(self.weights) == 0:
            return 0.0
        vals = np.asarray(f(self.points), dtype=float)
        return float(np.tensordot(self.weights, vals, axes=(0, 0)))

    @property
    def measure(self) -> float:
        return float(self.weights.sum())


def _orbit_s3(a: float) -> list[tuple[float, float, float]]:
    b = 1.0 - 2.0 * a
    return [(a, a, b), (a, b, a), (b, a, a)]


def _orbit_s6(a: float, b: float) -> list[tuple[float, float, float]]:
    c = 1.0 - a - b
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


def _build(groups) -> tuple[np.ndarray, np.ndarray]:
    bary, w = [], []
    for weight, pts in groups:
        bary.extend(pts)
        w.extend([weight] * len(pts))
    return np.array(bary), np.array(w)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric points (q, 3) and weights (q,) summing to one."""
    if degree <= 1:
        return np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])
    if degree == 2:
        return _build([(1 / 3, _orbit_s3(1 / 6))])
    if degree <= 4:
        return _build([
            (0.223381589678011, _orbit_s3(0.445948490915965)),
            (0.109951743655322, _orbit_s3(0.091576213509771)),
        ])
    if degree == 5:
        return _build([
            (0.225, [(1 / 3, 1 / 3, 1 / 3)]),
            (0.132394152788506, _orbit_s3(0.470142064105115)),
            (0.125939180544827, _orbit_s3(0.101286507323456)),
        ])
    if degree == 6:
        return _build([
            (0.116786275726379, _orbit_s3(0.249286745170910)),
            (0.050844906370207, _orbit_s3(0.063089014491502)),
            (0.082851075618374, _orbit_s6(0.053145049844817, 0.310352451033784)),
        ])
    raise ValueError(f"triangle rules are available up to degree 6, got {degree}")


def triangle_quadrature(tri: np.ndarray, degree: int) -> QuadratureRule:
    tri = np.asarray(tri, dtype=float)
    bary, w = triangle_rule(degree)
    area = 0.5 * abs(_cross(tri[1] - tri[0], tri[2] - tri[0]))
    return QuadratureRule(bary @ tri, w * area)


def batch_triangle_quadrature(tris: np.ndarray, degree: int):
    """Points (nt, q, 2) and weights (nt, q) for a stack of triangles."""
    bary, w = triangle_rule(degree)
    tris = np.asarray(tris, dtype=float)
    d1 = tris[:, 1] - tris[:, 0]
    d2 = tris[:, 2] - tris[:, 0]
    area = 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    pts = np.einsum("qk,tkd->tqd", bary, tris)
    return pts, area[:, None] * w[None, :]


def polygon_area(poly: np.ndarray) -> float:
    """Signed area (positive for counterclockwise vertex order)."""
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(poly: np.ndarray) -> np.ndarray:
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    a = 0.5 * cr.sum()
    return np.array([((x + xn) * cr).sum(), ((y + yn) * cr).sum()]) / (6.0 * a)


def polygon_quadrature(poly, degree: int, h: float | None = None) -> QuadratureRule:
    """Fan-triangulate a convex polygon from vertex 0 and apply the triangle rule.

    Polygons with area below ``1e-14 * h**2`` give an empty rule.
    """
    poly = np.asarray(poly, dtype=float)
    if h is None:
        h = float(np.max(np.linalg.norm(poly[:, None] - poly[None], axis=-1))) if len(poly) else 0.0
    if len(poly) < 3 or abs(polygon_area(poly)) < 1e-14 * h * h:
        return QuadratureRule(np.zeros((0, 2)), np.zeros(0))
    tris = np.stack([np.stack([poly[0], poly[k], poly[k + 1]]) for k in range(1, len(poly) - 1)])
    pts, w = batch_triangle_quadrature(tris, degree)
    return QuadratureRule(pts.reshape(-1, 2), w.reshape(-1))


@lru_cache(maxsize=None)
def _gauss_legendre(npts: int):
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


def edge_quadrature(a, b, degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on the segment ``a -> b``, exact to ``degree``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    length = float(np.hypot(*(b - a)))
    if length == 0.0:
        return QuadratureRule(np.zeros((0, 2)), np.zeros(0))
    s, w = _gauss_legendre(max(1, (degree + 2) // 2))
    return QuadratureRule(a + s[:, None] * (b - a), w * length)


def batch_edge_quadrature(a: np.ndarray, b: np.ndarray, degree: int):
    """Points (ne, q, 2) and weights (ne, q) for a stack of segments."""
    s, w = _gauss_legendre(max(1, (degree + 2) // 2))
    length = np.linalg.norm(b - a, axis=-1)
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    return pts, length[:, None] * w[None, :]


def _cross(u, v):
    return u[0] * v[1] - u[1] * v[0]
