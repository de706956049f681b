"""Structural property checks of the discrete spaces, run by ``ivem verify``.

Every check reports its worst observed violation against a fixed tolerance.
Violations are scaled to be dimensionless (relative to coefficient or DoF
magnitudes) so that random coefficient contrasts do not distort them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ivem.ife_local import (
    CoefficientPair,
    IfeCurlFunction,
    IfeH1Function,
    jump_matrix,
    rot90,
    verify_exact_sequence,
)
from ivem.mesh_geometry import CutTopology, LineInterface, build_uniform_mesh, cut_mesh
from ivem.projection import build_curl_projection, build_h1_projection
from ivem.quadrature import triangle_quadrature
from ivem.scheme_hcurl import assemble_curl
from ivem.study import StudyConfig, build_level_mesh, default_config
from ivem.virtual_dofs import build_dof_maps, curl_from_dofs, interpolate_edge


@dataclass(frozen=True)
class CheckResult:
    name: str
    description: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<22s} {self.value:10.3e} <= {self.tol:.0e}  {self.description}"


def _random_coef(rng) -> CoefficientPair:
    """Coefficients log-uniform in [10^-1.5, 10^1.5]: contrasts up to 1000 either way."""
    b = 10.0 ** rng.uniform(-1.5, 1.5, 2)
    a = 10.0 ** rng.uniform(-1.5, 1.5, 2)
    return CoefficientPair(beta_plus=b[0], beta_minus=b[1], alpha_plus=a[0], alpha_minus=a[1])


def random_cut_elements(rng, count: int, n: int = 4) -> list[CutTopology]:
    """Interface elements cut by random straight lines through the unit square."""
    mesh = build_uniform_mesh(n=n)
    cuts: list[CutTopology] = []
    while len(cuts) < count:
        theta = rng.uniform(0.0, 2 * np.pi)
        iface = LineInterface(tuple(rng.uniform(0.1, 0.9, 2)), (np.cos(theta), np.sin(theta)))
        imesh = cut_mesh(mesh, iface)
        keys = sorted(imesh.cuts)
        cuts.append(imesh.cuts[keys[rng.integers(len(keys))]])
    return cuts


def check_jump_matrix(rng, samples: int = 1000) -> CheckResult:
    worst = 0.0
    for _ in range(samples):
        theta = rng.uniform(0.0, 2 * np.pi)
        n = np.array([np.cos(theta), np.sin(theta)])
        t = rot90(n)
        rho = 10.0 ** rng.uniform(-3, 3)
        M = jump_matrix(n, rho)
        worst = max(worst, float(np.abs(M @ n - rho * n).max()) / max(1.0, rho), float(np.abs(M @ t - t).max()))
    return CheckResult("3a jump_matrix", "M n = rho n, M t = t over random (n, rho)", worst, 1e-12)


def check_ife_jumps(cuts, coefs, rng) -> CheckResult:
    worst = 0.0
    for cut, coef in zip(cuts, coefs):
        M = jump_matrix(cut.n_bar, coef.rho)
        n, t = cut.n_bar, cut.t_bar
        seg = cut.gamma_seg
        s = rng.uniform(0.0, 1.0, 8)[:, None]
        pts = seg[0] + s * (seg[1] - seg[0])
        f = IfeH1Function(rng.normal(), rng.normal(size=2), cut.x_m, M)
        scale = max(1.0, float(np.abs(f.c).max()))
        gp, gm = f.grad(1), f.grad(-1)
        bmax = max(coef.beta_plus, coef.beta_minus)
        worst = max(
            worst,
            float(np.abs(f.value(pts, 1) - f.value(pts, -1)).max()) / (scale * max(1.0, cut.diameter)),
            abs(coef.beta_plus * gp @ n - coef.beta_minus * gm @ n) / (bmax * scale),
        )
        v = IfeCurlFunction(rng.normal(size=2), rng.normal(), cut.x_m, M, coef.alpha_plus, coef.alpha_minus)
        vp, vm = v.value(cut.x_m, 1), v.value(cut.x_m, -1)
        cp, cm = v.curl()
        vscale = max(1.0, float(np.abs(v.c).max()), float(np.abs(M @ v.c).max()))
        worst = max(
            worst,
            abs((vp - vm) @ t) / vscale,
            abs(coef.alpha_plus * cp - coef.alpha_minus * cm) / max(1.0, abs(v.c0)),
            abs(coef.beta_plus * vp @ n - coef.beta_minus * vm @ n) / (bmax * vscale),
        )
    return CheckResult("3b ife_jumps", "H1 value/flux and curl tangential/alpha-curl/beta-normal jumps",
                       worst, 1e-12)


def _gram_relative(G: np.ndarray, err: np.ndarray, ref: np.ndarray) -> float:
    return float(np.sqrt(max(err @ G @ err, 0.0)) / np.sqrt(ref @ G @ ref))


def check_idempotence(cuts, coefs, rng) -> CheckResult:
    """``Pi u - u`` for IFE functions ``u``, measured by the conditions that define each projection.

    H1: beta-weighted gradient Gram norm plus the boundary mean, relative to
    ``|grad u|_G`` and the largest nodal value. Curl: the beta-weighted L2 Gram norm.
    Coefficient-wise max norms would instead report the conditioning of the
    DoF-to-coefficient map, which degrades when a sub-region is tiny and the
    contrast large while the projection itself stays exact.
    """
    worst = 0.0
    for cut, coef in zip(cuts, coefs):
        op = build_h1_projection(cut, coef)
        f = IfeH1Function(rng.normal(), rng.normal(size=2), cut.x_m, op.M)
        sign = np.where(cut.node_sign == 0, 1, cut.node_sign)
        dofs = f.value(cut.nodes, sign)
        coeffs = op.matrix @ dofs
        diff = op.node_values() @ dofs - dofs
        mean = np.dot(cut.edge_length, 0.5 * (diff + np.roll(diff, -1))) / cut.edge_length.sum()
        worst = max(worst, _gram_relative(op.gram, coeffs[1:] - f.c, f.c), abs(mean) / np.abs(dofs).max())

        cop = build_curl_projection(cut, coef)
        c = rng.normal(size=2)
        side = np.where(cut.edge_sign[:, None] > 0, cop.M @ c, c)
        dofs = np.einsum("ei,ei->e", side, cut.edge_tangent)
        worst = max(worst, _gram_relative(cop.gram, cop.matrix @ dofs - c, c))
    return CheckResult("3c idempotence", "Pi and curl-Pi reproduce IFE functions (defining norms)", worst, 1e-12)


def check_discrete_complex(config: StudyConfig, n: int, rng) -> CheckResult:
    imesh = build_level_mesh(config, n)
    dm = build_dof_maps(imesh)
    asm = assemble_curl(imesh, config.coef(), dofmap=dm)
    worst = 0.0
    C = asm.curlcurl
    cmax = float(abs(C).max())
    for _ in range(5):
        g = dm.discrete_gradient(rng.normal(size=dm.n_nodal))
        worst = max(worst, float(np.abs(C @ g).max()) / (cmax * float(np.abs(g).max())))
    return CheckResult("3d discrete_complex", "curl-curl block annihilates discrete gradients", worst, 1e-13)


def _smooth_field(x):
    x = np.asarray(x, dtype=float)
    X, Y = x[..., 0], x[..., 1]
    return np.stack([X**2 * Y + Y**3 - 0.5 * X, X**3 - X * Y**2 + 2.0 * Y], axis=-1)


def _smooth_curl(x):
    x = np.asarray(x, dtype=float)
    X, Y = x[..., 0], x[..., 1]
    # d/dx (X^3 - X Y^2 + 2Y) - d/dy (X^2 Y + Y^3 - X/2)
    return 3 * X**2 - Y**2 - X**2 - 3 * Y**2


def check_commutativity(config: StudyConfig, n: int) -> CheckResult:
    imesh = build_level_mesh(config, n)
    dm = build_dof_maps(imesh)
    coef = config.coef()
    dofs = interpolate_edge(dm, _smooth_field, degree=5)
    worst = 0.0
    for t, cut in imesh.cuts.items():
        cp, cm = curl_from_dofs(cut, coef, dm.local_edge_values(dofs, t))
        q = triangle_quadrature(imesh.mesh.vertices[imesh.mesh.triangles[t]], 4)
        total = float(q.weights @ _smooth_curl(q.points))
        alpha_K = (cut.area_plus * coef.alpha_minus + cut.area_minus * coef.alpha_plus) / cut.area
        s = total / (cut.area * alpha_K)
        ref_p, ref_m = coef.alpha_minus * s, coef.alpha_plus * s
        worst = max(worst, abs(cp - ref_p), abs(cm - ref_m))
    return CheckResult("3e commutativity", "curl from interpolated DoFs equals alpha-weighted curl projection",
                       worst, 1e-10)


def check_hodge(cuts, coefs) -> CheckResult:
    worst = max(verify_exact_sequence(cut, coef)["hodge"] for cut, coef in zip(cuts, coefs))
    return CheckResult("3f hodge", "beta grad S equals vector curl of rotated potentials", worst, 1e-12)


def run_verification(seed: int = 0, config: StudyConfig | None = None, elements: int = 200,
                     mesh_n: int = 16) -> list[CheckResult]:
    """Run checks 3a-3f; random samples come from ``numpy.random.default_rng(seed)``."""
    rng = np.random.default_rng(seed)
    if config is None:
        config = default_config("hcurl")
    cuts = random_cut_elements(rng, elements)
    coefs = [_random_coef(rng) for _ in cuts]
    return [
        check_jump_matrix(rng),
        check_ife_jumps(cuts, coefs, rng),
        check_idempotence(cuts, coefs, rng),
        check_discrete_complex(config, mesh_n, rng),
        check_commutativity(config, mesh_n),
        check_hodge(cuts, coefs),
    ]


def format_table(results: list[CheckResult]) -> str:
    return "".join(r.line() + "\n" for r in results)
