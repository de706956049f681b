"""Vectorised P1 and lowest-order Nedelec matrices on uncut triangles.

Nedelec DoFs are average tangential components on the three edges, each edge
oriented counterclockwise around its triangle.
"""

from __future__ import annotations

import numpy as np

from ivem.quadrature import batch_triangle_quadrature, triangle_rule


def _areas(p: np.ndarray) -> np.ndarray:
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def p1_gradients(p: np.ndarray) -> np.ndarray:
    """(nt, 3, 2) gradients of the barycentric coordinates."""
    area = _areas(p)
    # grad lambda_k = rot(-(edge opposite k)) / (2 area)
    opp = np.roll(p, -2, axis=1) - np.roll(p, -1, axis=1)  # p[k+2] - p[k+1]
    return np.stack([-opp[..., 1], opp[..., 0]], axis=-1) / (2.0 * area[:, None, None])


def p1_stiffness(p: np.ndarray, beta) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    g = p1_gradients(p)
    return (np.asarray(beta) * _areas(p))[:, None, None] * np.einsum("tid,tjd->tij", g, g)


def p1_load(p: np.ndarray, f, degree: int = 4) -> np.ndarray:
    pts, w = batch_triangle_quadrature(p, degree)
    bary, _ = triangle_rule(degree)
    fv = np.asarray(f(pts.reshape(-1, 2)), dtype=float).reshape(w.shape)
    return np.einsum("tq,tq,qk->tk", w, fv, bary)


def nd0_coefficients(p: np.ndarray) -> np.ndarray:
    """(nt, 3, 3): columns are ``(a_x, a_y, b)`` of each basis field ``a + b rot(x - x_c)``."""
    p = np.asarray(p, dtype=float)
    xc = p.mean(axis=1)
    d = np.roll(p, -1, axis=1) - p
    t = d / np.linalg.norm(d, axis=-1, keepdims=True)
    mid = p + 0.5 * d - xc[:, None]
    rot_mid = np.stack([-mid[..., 1], mid[..., 0]], axis=-1)
    B = np.concatenate([t, np.einsum("tkd,tkd->tk", rot_mid, t)[..., None]], axis=-1)
    return np.linalg.inv(B)


def nd0_matrices(p: np.ndarray, alpha, beta):
    """Per-triangle curl-curl and beta-mass matrices, (nt, 3, 3) each."""
    p = np.asarray(p, dtype=float)
    area = _areas(p)
    C = nd0_coefficients(p)
    a, b = C[:, :2, :], C[:, 2, :]
    xc = p.mean(axis=1, keepdims=True)
    second_moment = area / 12.0 * np.sum((p - xc) ** 2, axis=(1, 2))
    mass = area[:, None, None] * np.einsum("tdi,tdj->tij", a, a) + second_moment[:, None, None] * np.einsum(
        "ti,tj->tij", b, b
    )
    curl = 2.0 * b
    curlcurl = (np.asarray(alpha) * area)[:, None, None] * np.einsum("ti,tj->tij", curl, curl)
    return curlcurl, np.asarray(beta)[..., None, None] * mass


def nd0_values(p: np.ndarray, x: np.ndarray) -> np.ndarray:
    """(nt, q, 3, 2): basis fields of each triangle at points ``x`` (nt, q, 2)."""
    C = nd0_coefficients(p)
    xc = np.asarray(p).mean(axis=1)
    r = x - xc[:, None, :]
    rot = np.stack([-r[..., 1], r[..., 0]], axis=-1)
    return C[:, None, :2, :].transpose(0, 1, 3, 2) + C[:, None, 2, :, None] * rot[:, :, None, :]


def nd0_load(p: np.ndarray, f, degree: int = 4) -> np.ndarray:
    pts, w = batch_triangle_quadrature(p, degree)
    fv = np.asarray(f(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape)
    vals = nd0_values(p, pts)
    return np.einsum("tq,tqd,tqkd->tk", w, fv, vals)
