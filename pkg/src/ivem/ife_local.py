"""Explicit local immersed finite element spaces on an interface element.

Every function here is parameterised by ``(c0, c)``: ``c`` is the minus-side
vector and the plus side uses ``M c`` with the jump matrix ``M``. Region
membership is always supplied by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ivem.mesh_geometry import CutTopology


@dataclass(frozen=True)
class CoefficientPair:
    beta_plus: float = 1.0
    beta_minus: float = 1.0
    alpha_plus: float = 1.0
    alpha_minus: float = 1.0

    def __post_init__(self):
        for name in ("beta_plus", "beta_minus", "alpha_plus", "alpha_minus"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive number, got {v!r}")

    @property
    def rho(self) -> float:
        return self.beta_minus / self.beta_plus

    def beta(self, sign) -> np.ndarray | float:
        return np.where(np.asarray(sign) > 0, self.beta_plus, self.beta_minus)

    def alpha(self, sign) -> np.ndarray | float:
        return np.where(np.asarray(sign) > 0, self.alpha_plus, self.alpha_minus)


def jump_matrix(n_bar, rho: float) -> np.ndarray:
    """Matrix ``M`` with ``grad v+ = M grad v-`` for continuous, flux-continuous ``v``."""
    n1, n2 = np.asarray(n_bar, dtype=float)
    if abs(np.hypot(n1, n2) - 1.0) > 1e-12:
        raise ValueError(f"normal must have unit length, got |n| = {np.hypot(n1, n2)!r}")
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho!r}")
    off = (rho - 1.0) * n1 * n2
    return np.array([[n2 * n2 + rho * n1 * n1, off], [off, n1 * n1 + rho * n2 * n2]])


def rot90(w) -> np.ndarray:
    """Counterclockwise quarter turn, ``(w1, w2) -> (-w2, w1)``."""
    w = np.asarray(w, dtype=float)
    return np.stack([-w[..., 1], w[..., 0]], axis=-1)


def _side_vector(sign, plus, minus):
    return np.where(np.asarray(sign)[..., None] > 0, plus, minus)


# ---------------------------------------------------------------------------
# H1 IFE space
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IfeH1Function:
    c0: float
    c: np.ndarray
    x_m: np.ndarray
    M: np.ndarray

    def grad(self, sign) -> np.ndarray:
        return _side_vector(sign, self.M @ self.c, self.c)

    def value(self, x, sign) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = self.grad(np.broadcast_to(sign, x.shape[:-1]))
        return np.einsum("...i,...i->...", g, x - self.x_m) + self.c0


def eval_h1(f: IfeH1Function, x, sign):
    return f.value(x, sign)


def grad_h1(f: IfeH1Function, x, sign):
    x = np.asarray(x, dtype=float)
    return f.grad(np.broadcast_to(sign, x.shape[:-1]))


def h1_ife_basis(cut: CutTopology, coef: CoefficientPair) -> list[IfeH1Function]:
    M = jump_matrix(cut.n_bar, coef.rho)
    return [
        IfeH1Function(1.0, np.zeros(2), cut.x_m, M),
        IfeH1Function(0.0, np.array([1.0, 0.0]), cut.x_m, M),
        IfeH1Function(0.0, np.array([0.0, 1.0]), cut.x_m, M),
    ]


# ---------------------------------------------------------------------------
# H(curl) IFE space
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IfeCurlFunction:
    c: np.ndarray
    c0: float
    x_m: np.ndarray
    M: np.ndarray
    alpha_plus: float
    alpha_minus: float

    def value(self, x, sign) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        sign = np.broadcast_to(sign, x.shape[:-1])
        alpha = np.where(sign > 0, self.alpha_plus, self.alpha_minus)
        const = _side_vector(sign, self.M @ self.c, self.c)
        return const + (self.c0 / alpha)[..., None] * rot90(x - self.x_m)

    def curl(self) -> tuple[float, float]:
        return 2.0 * self.c0 / self.alpha_plus, 2.0 * self.c0 / self.alpha_minus


def eval_curlife(f: IfeCurlFunction, x, sign):
    return f.value(x, sign)


def curl_of(f: IfeCurlFunction) -> tuple[float, float]:
    """(curl on the plus side, curl on the minus side)."""
    return f.curl()


def curl_ife_basis(cut: CutTopology, coef: CoefficientPair) -> list[IfeCurlFunction]:
    M = jump_matrix(cut.n_bar, coef.rho)
    a = (coef.alpha_plus, coef.alpha_minus)
    return [
        IfeCurlFunction(np.array([1.0, 0.0]), 0.0, cut.x_m, M, *a),
        IfeCurlFunction(np.array([0.0, 1.0]), 0.0, cut.x_m, M, *a),
        IfeCurlFunction(np.zeros(2), 1.0, cut.x_m, M, *a),
    ]


# ---------------------------------------------------------------------------
# rotated H1 IFE space (potentials of beta-weighted IFE gradients)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IfeRotH1Function:
    grad_plus: np.ndarray
    grad_minus: np.ndarray
    c0: float
    x_m: np.ndarray

    def grad(self, sign) -> np.ndarray:
        return _side_vector(sign, self.grad_plus, self.grad_minus)

    def value(self, x, sign) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = self.grad(np.broadcast_to(sign, x.shape[:-1]))
        return np.einsum("...i,...i->...", g, x - self.x_m) + self.c0

    def vector_curl(self, sign) -> np.ndarray:
        """``(d/dy, -d/dx)`` of the potential on the given side."""
        g = self.grad(sign)
        return np.stack([g[..., 1], -g[..., 0]], axis=-1)


def rot_h1_potential(v_minus, cut: CutTopology, coef: CoefficientPair, v_plus=None) -> IfeRotH1Function:
    """Potential ``phi`` with vector curl equal to ``beta_h v`` on each side.

    ``v`` is the piecewise constant field with minus value ``v_minus``; the plus
    value defaults to ``M v_minus`` and is checked against it when given. The
    constant is fixed by a zero mean over the element boundary.
    """
    M = jump_matrix(cut.n_bar, coef.rho)
    v_minus = np.asarray(v_minus, dtype=float)
    expected = M @ v_minus
    if v_plus is None:
        v_plus = expected
    else:
        v_plus = np.asarray(v_plus, dtype=float)
        scale = max(1.0, float(np.abs(expected).max()))
        if np.abs(v_plus - expected).max() > 1e-10 * scale:
            raise ValueError("v is not the gradient of an H1 IFE function (v+ != M v-)")
    gp = rot90(coef.beta_plus * v_plus)
    gm = rot90(coef.beta_minus * v_minus)
    g_edge = np.where(cut.edge_sign[:, None] > 0, gp, gm)
    mean = np.sum(cut.edge_length * np.einsum("ei,ei->e", g_edge, cut.edge_mid - cut.x_m))
    c0 = -mean / cut.edge_length.sum()
    return IfeRotH1Function(gp, gm, float(c0), cut.x_m)


# ---------------------------------------------------------------------------
# local exact sequence check
# ---------------------------------------------------------------------------


def verify_exact_sequence(cut: CutTopology, coef: CoefficientPair) -> dict[str, float]:
    """Max violations of the local IFE de Rham structure on one element.

    ``gradient``: gradients of the H1 basis lie in the curl IFE space with zero curl.
    ``curl``: curls of the curl basis satisfy ``alpha+ curl+ = alpha- curl-`` and span it.
    ``hodge``: ``beta_h grad S`` equals the vector curl of the rotated potentials.
    """
    n, t = cut.n_bar, cut.t_bar
    M = jump_matrix(n, coef.rho)
    scale_b = max(coef.beta_plus, coef.beta_minus)
    grad_viol = 0.0
    for f in h1_ife_basis(cut, coef):
        gp, gm = f.grad(1), f.grad(-1)
        as_curl = IfeCurlFunction(f.c, 0.0, cut.x_m, M, coef.alpha_plus, coef.alpha_minus)
        grad_viol = max(
            grad_viol,
            float(np.abs(as_curl.value(cut.x_m, 1) - gp).max()),
            float(np.abs(as_curl.value(cut.x_m, -1) - gm).max()),
            abs(float((gp - gm) @ t)),
            abs(float(coef.beta_plus * gp @ n - coef.beta_minus * gm @ n)) / scale_b,
            *map(abs, as_curl.curl()),
        )
    curl_viol = 0.0
    spans = False
    for f in curl_ife_basis(cut, coef):
        cp, cm = f.curl()
        curl_viol = max(curl_viol, abs(coef.alpha_plus * cp - coef.alpha_minus * cm))
        spans = spans or abs(coef.alpha_plus * cp) > 0.5
    if not spans:
        curl_viol = float("inf")
    hodge_viol = 0.0
    for f in h1_ife_basis(cut, coef)[1:]:
        phi = rot_h1_potential(f.c, cut, coef)
        hodge_viol = max(
            hodge_viol,
            float(np.abs(phi.vector_curl(1) - coef.beta_plus * f.grad(1)).max()) / scale_b,
            float(np.abs(phi.vector_curl(-1) - coef.beta_minus * f.grad(-1)).max()) / scale_b,
            # continuity of phi across the segment
            float(np.abs(phi.value(cut.cut_points, 1) - phi.value(cut.cut_points, -1)).max()) / (scale_b * cut.diameter),
            # rotated flux condition: beta^{-1} curl(phi) . t continuous
            abs(float(phi.vector_curl(1) @ t / coef.beta_plus - phi.vector_curl(-1) @ t / coef.beta_minus)),
        )
    return {"gradient": grad_viol, "curl": curl_viol, "hodge": hodge_viol}
