"""Manufactured exact solutions for the circle-interface benchmarks.

Each solution exposes explicit per-side branches (``sign = -1`` inside the
circle, ``+1`` outside); the plain callables pick the branch with the exact
level set, never with the discrete interface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ivem.ife_local import CoefficientPair


def _polar(x, center):
    x = np.asarray(x, dtype=float)
    d = x - np.asarray(center, dtype=float)
    return d, np.hypot(d[..., 0], d[..., 1])


class _CircleBranches:
    center: tuple[float, float]
    radius: float
    coef: CoefficientPair

    def side(self, x) -> np.ndarray:
        return np.where(_polar(x, self.center)[1] < self.radius, -1, 1)

    def beta(self, x):
        return np.where(self.side(x) > 0, self.coef.beta_plus, self.coef.beta_minus)

    def alpha(self, x):
        return np.where(self.side(x) > 0, self.coef.alpha_plus, self.coef.alpha_minus)

    def _pick(self, x, fn):
        s = self.side(x)
        plus, minus = fn(x, 1), fn(x, -1)
        if plus.ndim > s.ndim:
            s = s[..., None]
        return np.where(s > 0, plus, minus)


@dataclass(frozen=True)
class H1CircleSolution(_CircleBranches):
    """``u = r^3 / beta-`` inside, ``r^3 / beta+ + (1/beta- - 1/beta+) r0^3`` outside; ``f = -9 r``."""

    center: tuple[float, float]
    radius: float
    coef: CoefficientPair

    def u_branch(self, x, sign):
        r = _polar(x, self.center)[1]
        bp, bm = self.coef.beta_plus, self.coef.beta_minus
        if sign > 0:
            return r**3 / bp + (1.0 / bm - 1.0 / bp) * self.radius**3
        return r**3 / bm

    def grad_branch(self, x, sign):
        d, r = _polar(x, self.center)
        beta = self.coef.beta_plus if sign > 0 else self.coef.beta_minus
        return (3.0 * r / beta)[..., None] * d

    def u(self, x):
        return self._pick(x, self.u_branch)

    def grad(self, x):
        return self._pick(x, self.grad_branch)

    def f(self, x):
        return -9.0 * _polar(x, self.center)[1]


@dataclass(frozen=True)
class RotationalCurlSolution(_CircleBranches):
    """Tangential field ``h(r) e_theta`` with ``alpha curl u = 1`` and ``u . n = 0`` on the circle.

    ``h- = r / (2 alpha-)`` inside and
    ``h+ = (r0^2 / (2 alpha-) + (r^2 - r0^2) / (2 alpha+)) / r`` outside; ``f = beta u``.
    """

    center: tuple[float, float]
    radius: float
    coef: CoefficientPair

    def u_branch(self, x, sign):
        d, r = _polar(x, self.center)
        am, ap, r0 = self.coef.alpha_minus, self.coef.alpha_plus, self.radius
        rot = np.stack([-d[..., 1], d[..., 0]], axis=-1)
        if sign > 0:
            # h+(r) e_theta = (h+(r) / r) rot(d)
            safe = np.where(r == 0.0, 1.0, r)
            scale = (r0**2 / (2 * am) + (r**2 - r0**2) / (2 * ap)) / safe**2
            return scale[..., None] * rot
        return rot / (2 * am)

    def curl_branch(self, x, sign):
        r = _polar(x, self.center)[1]
        return np.full_like(r, 1.0 / (self.coef.alpha_plus if sign > 0 else self.coef.alpha_minus))

    def u(self, x):
        return self._pick(x, self.u_branch)

    def curl(self, x):
        return self._pick(x, self.curl_branch)

    def f(self, x):
        return self.beta(x)[..., None] * self.u(x)


@dataclass(frozen=True)
class GradientCurlSolution(_CircleBranches):
    """Curl-free field ``u = grad p`` with ``p`` the H1 circle solution; ``f = beta u``."""

    center: tuple[float, float]
    radius: float
    coef: CoefficientPair

    @property
    def potential(self) -> H1CircleSolution:
        return H1CircleSolution(self.center, self.radius, self.coef)

    def u_branch(self, x, sign):
        return self.potential.grad_branch(x, sign)

    def curl_branch(self, x, sign):
        return np.zeros(np.shape(x)[:-1])

    def u(self, x):
        return self._pick(x, self.u_branch)

    def curl(self, x):
        return np.zeros(np.shape(x)[:-1])

    def f(self, x):
        return self.beta(x)[..., None] * self.u(x)


@dataclass(frozen=True)
class LinearSolution:
    """``u = a + b . x`` with ``f = 0`` (uniform coefficients only)."""

    a: float = 1.0
    b: tuple[float, float] = (2.0, 3.0)

    def u(self, x):
        x = np.asarray(x, dtype=float)
        return self.a + x[..., 0] * self.b[0] + x[..., 1] * self.b[1]

    def grad(self, x):
        return np.broadcast_to(np.asarray(self.b, dtype=float), np.shape(x)).copy()

    def f(self, x):
        return np.zeros(np.shape(x)[:-1])


@dataclass(frozen=True)
class ConstantFieldSolution:
    """Constant field ``u = c`` with ``f = beta c`` (uniform beta only)."""

    c: tuple[float, float] = (1.0, -0.5)
    beta_value: float = 1.0

    def u(self, x):
        return np.broadcast_to(np.asarray(self.c, dtype=float), np.shape(x)).copy()

    def curl(self, x):
        return np.zeros(np.shape(x)[:-1])

    def f(self, x):
        return self.beta_value * self.u(x)


def jump_residuals(sol, samples: int = 64) -> dict[str, float]:
    """Max violation of the interface conditions at points of the exact circle.

    H1 solutions report value and flux jumps; curl solutions report tangential,
    alpha-curl and beta-normal jumps. Both sides are evaluated on the circle itself.
    """
    theta = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    n = np.column_stack([np.cos(theta), np.sin(theta)])
    t = np.column_stack([-n[:, 1], n[:, 0]])
    x = np.asarray(sol.center) + sol.radius * n
    coef = sol.coef
    dot = lambda a, b: np.einsum("qi,qi->q", a, b)
    if isinstance(sol, H1CircleSolution):
        return {
            "value": float(np.abs(sol.u_branch(x, 1) - sol.u_branch(x, -1)).max()),
            "flux": float(np.abs(
                coef.beta_plus * dot(sol.grad_branch(x, 1), n) - coef.beta_minus * dot(sol.grad_branch(x, -1), n)
            ).max()),
        }
    up, um = sol.u_branch(x, 1), sol.u_branch(x, -1)
    return {
        "tangential": float(np.abs(dot(up - um, t)).max()),
        "alpha_curl": float(np.abs(coef.alpha_plus * sol.curl_branch(x, 1) - coef.alpha_minus * sol.curl_branch(x, -1)).max()),
        "beta_normal": float(np.abs(coef.beta_plus * dot(up, n) - coef.beta_minus * dot(um, n)).max()),
    }
