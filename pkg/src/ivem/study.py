"""Error measures, convergence studies and their configuration.

A study is described by a JSON document whose keys mirror :class:`StudyConfig`.
Unknown keys are rejected so that a stored config always reproduces its table.
"""

from __future__ import annotations

import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ivem.errors import ConfigError, IvemError, NumericalFailure
from ivem.ife_local import CoefficientPair
from ivem.linear_solver import DEFAULT_TOL
from ivem.manufactured import (
    ConstantFieldSolution,
    GradientCurlSolution,
    H1CircleSolution,
    LinearSolution,
    RotationalCurlSolution,
)
from ivem.mesh_geometry import CircleInterface, InterfaceMesh, LineInterface, build_uniform_mesh, cut_mesh
from ivem.projection import apply_curl_projection, apply_h1_projection
from ivem.quadrature import batch_triangle_quadrature, polygon_quadrature, triangle_rule
from ivem.scheme_h1 import H1Solution, assemble_and_solve_h1
from ivem.scheme_hcurl import STABILIZATION_VARIANTS, CurlSolution, assemble_and_solve_curl
from ivem.standard_elements import nd0_coefficients, nd0_values, p1_gradients
from ivem.virtual_dofs import curl_from_dofs, interpolate_edge, interpolate_nodal

CASES = {"h1": ("circle", "linear"), "hcurl": ("rotational", "gradient", "constant")}
CSV_HEADER = "h,ndof,energy_dof,l2_proj,h1_proj,eoc_energy,eoc_l2,eoc_h1,cg_iters,seconds"
ACCEPTANCE_CENTER = (0.5 + 0.01 * math.sqrt(2.0), 0.5 + 0.01 * math.sqrt(3.0))
ACCEPTANCE_RADIUS = 0.3


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StudyConfig:
    problem: str
    interface: dict
    coefficients: dict
    case: str
    meshes: tuple[int, ...]
    domain: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)
    quadrature: dict = field(default_factory=lambda: {"load": 4, "error": 6, "boundary": 5})
    solver: str = "cg"
    solver_tol: float = DEFAULT_TOL
    stabilization: str = "O1"
    center_perturbation: float = 0.0
    record_time: bool = False
    output: str | None = None

    def coef(self) -> CoefficientPair:
        return CoefficientPair(**self.coefficients)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["meshes"] = list(self.meshes)
        d["domain"] = list(self.domain)
        return d


_REQUIRED = ("problem", "interface", "coefficients", "case", "meshes")
_COEF_KEYS = ("beta_plus", "beta_minus", "alpha_plus", "alpha_minus")
_QUAD_KEYS = ("load", "error", "boundary")


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{name}: expected a finite number, got {value!r}")
    return float(value)


def _vector(value, name: str, length: int) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or len(value) != length:
        raise ConfigError(f"{name}: expected a list of {length} numbers, got {value!r}")
    return tuple(_number(v, f"{name}[{i}]") for i, v in enumerate(value))


def _check_keys(d: dict, allowed, name: str):
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"{name}: unknown key(s) {', '.join(unknown)}")


def config_from_dict(raw: dict) -> StudyConfig:
    """Validate a parsed config document; errors name the offending field."""
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a JSON object at top level")
    _check_keys(raw, StudyConfig.__dataclass_fields__, "config")
    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError(f"{key}: required field missing")

    problem = raw["problem"]
    if problem not in CASES:
        raise ConfigError(f"problem: expected one of {sorted(CASES)}, got {problem!r}")
    case = raw["case"]
    if case not in CASES[problem]:
        raise ConfigError(f"case: {problem} problems support {list(CASES[problem])}, got {case!r}")

    domain = _vector(raw.get("domain", (0.0, 1.0, 0.0, 1.0)), "domain", 4)
    if not (domain[0] < domain[1] and domain[2] < domain[3]):
        raise ConfigError(f"domain: expected [xmin, xmax, ymin, ymax] with min < max, got {list(domain)}")

    iface = raw["interface"]
    if not isinstance(iface, dict) or iface.get("type") not in ("circle", "line"):
        raise ConfigError("interface.type: expected 'circle' or 'line'")
    if iface["type"] == "circle":
        _check_keys(iface, ("type", "center", "radius"), "interface")
        for key in ("center", "radius"):
            if key not in iface:
                raise ConfigError(f"interface.{key}: required field missing")
        iface = {"type": "circle", "center": list(_vector(iface["center"], "interface.center", 2)),
                 "radius": _number(iface["radius"], "interface.radius")}
        if iface["radius"] <= 0:
            raise ConfigError("interface.radius: must be positive")
    else:
        _check_keys(iface, ("type", "point", "normal"), "interface")
        for key in ("point", "normal"):
            if key not in iface:
                raise ConfigError(f"interface.{key}: required field missing")
        iface = {"type": "line", "point": list(_vector(iface["point"], "interface.point", 2)),
                 "normal": list(_vector(iface["normal"], "interface.normal", 2))}
        if math.hypot(*iface["normal"]) == 0.0:
            raise ConfigError("interface.normal: must be nonzero")

    coefs = raw["coefficients"]
    if not isinstance(coefs, dict):
        raise ConfigError("coefficients: expected an object")
    _check_keys(coefs, _COEF_KEYS, "coefficients")
    coefs = {k: _number(coefs.get(k, 1.0), f"coefficients.{k}") for k in _COEF_KEYS}
    for k, v in coefs.items():
        if v <= 0:
            raise ConfigError(f"coefficients.{k}: must be positive, got {v}")

    meshes = raw["meshes"]
    if not isinstance(meshes, list) or not meshes:
        raise ConfigError("meshes: expected a non-empty list of integers")
    for i, n in enumerate(meshes):
        if isinstance(n, bool) or not isinstance(n, int) or n < 2:
            raise ConfigError(f"meshes[{i}]: expected an integer >= 2, got {n!r}")

    quad = raw.get("quadrature", {})
    if not isinstance(quad, dict):
        raise ConfigError("quadrature: expected an object")
    _check_keys(quad, _QUAD_KEYS, "quadrature")
    quad = {"load": 4, "error": 6, "boundary": 5, **quad}
    for k, v in quad.items():
        if isinstance(v, bool) or not isinstance(v, int) or not 1 <= v <= 6:
            raise ConfigError(f"quadrature.{k}: expected an integer degree in 1..6, got {v!r}")

    solver = raw.get("solver", "cg")
    if solver not in ("cg", "dense"):
        raise ConfigError(f"solver: expected 'cg' or 'dense', got {solver!r}")
    tol = _number(raw.get("solver_tol", DEFAULT_TOL), "solver_tol")
    if not 0 < tol < 1:
        raise ConfigError(f"solver_tol: expected a value in (0, 1), got {tol}")
    stab = raw.get("stabilization", "O1")
    if stab not in STABILIZATION_VARIANTS:
        raise ConfigError(f"stabilization: expected one of {list(STABILIZATION_VARIANTS)}, got {stab!r}")
    perturb = _number(raw.get("center_perturbation", 0.0), "center_perturbation")
    if perturb < 0:
        raise ConfigError("center_perturbation: must be non-negative")
    record_time = raw.get("record_time", False)
    if not isinstance(record_time, bool):
        raise ConfigError("record_time: expected true or false")
    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("output: expected a path string or null")

    if case in ("circle", "rotational", "gradient") and iface["type"] != "circle":
        raise ConfigError(f"interface.type: case {case!r} needs a circle interface")
    if case in ("linear", "constant") and coefs["beta_plus"] != coefs["beta_minus"]:
        raise ConfigError(f"coefficients.beta_plus: case {case!r} needs beta_plus == beta_minus")

    return StudyConfig(problem, iface, coefs, case, tuple(meshes), domain, quad, solver, tol, stab, perturb,
                       record_time, output)


def load_config(path) -> StudyConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return config_from_dict(raw)


def default_config(problem: str = "h1", **overrides) -> StudyConfig:
    """The circle benchmark used by the acceptance suite."""
    base = {
        "problem": problem,
        "interface": {"type": "circle", "center": list(ACCEPTANCE_CENTER), "radius": ACCEPTANCE_RADIUS},
        "coefficients": {"beta_plus": 10.0, "beta_minus": 1.0, "alpha_plus": 2.0, "alpha_minus": 1.0},
        "case": "circle" if problem == "h1" else "rotational",
        "meshes": [8, 16, 32, 64],
    }
    base.update(overrides)
    return config_from_dict(base)


# ---------------------------------------------------------------------------
# problem setup
# ---------------------------------------------------------------------------


def interface_for(config: StudyConfig, offset=(0.0, 0.0)):
    iface = config.interface
    if iface["type"] == "circle":
        return CircleInterface(tuple(np.add(iface["center"], offset)), iface["radius"])
    return LineInterface(tuple(np.add(iface["point"], offset)), tuple(iface["normal"]))


def exact_solution_for(config: StudyConfig, offset=(0.0, 0.0)):
    coef = config.coef()
    if config.case == "linear":
        return LinearSolution()
    if config.case == "constant":
        return ConstantFieldSolution(beta_value=coef.beta_plus)
    center = tuple(np.add(config.interface["center"], offset))
    radius = config.interface["radius"]
    cls = {"circle": H1CircleSolution, "rotational": RotationalCurlSolution, "gradient": GradientCurlSolution}
    return cls[config.case](center, radius, coef)


def build_level_mesh(config: StudyConfig, n: int, offset=(0.0, 0.0)) -> InterfaceMesh:
    return cut_mesh(build_uniform_mesh(config.domain, n), interface_for(config, offset))


# ---------------------------------------------------------------------------
# errors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorRecord:
    energy_dof: float
    l2_proj: float
    h1_proj: float  # projected H1 seminorm (h1) or projected energy norm (hcurl)
    curl_proj: float = float("nan")


def _regular_quadrature(imesh: InterfaceMesh, degree: int):
    regular = np.nonzero(imesh.labels != 0)[0]
    p = imesh.mesh.vertices[imesh.mesh.triangles[regular]]
    pts, w = batch_triangle_quadrature(p, degree)
    return regular, p, pts, w


def compute_errors_h1(sol: H1Solution, exact, degree: int = 6) -> ErrorRecord:
    """Energy DoF error and broken L2 / H1 errors of ``u - Pi u_h``.

    ``u`` branches by the exact interface, ``Pi u_h`` by the discrete one.
    """
    dm = sol.dofmap
    imesh = dm.imesh
    e = interpolate_nodal(dm, exact.u) - sol.values
    energy = math.sqrt(max(float(e @ (sol.assembled.matrix @ e)), 0.0))

    regular, p, pts, w = _regular_quadrature(imesh, degree)
    tri = imesh.mesh.triangles[regular]
    bary, _ = triangle_rule(degree)
    uh = sol.values[tri]
    flat = pts.reshape(-1, 2)
    val_err = np.asarray(exact.u(flat)).reshape(w.shape) - uh @ bary.T
    grad_h = np.einsum("tkd,tk->td", p1_gradients(p), uh)
    grad_err = np.asarray(exact.grad(flat)).reshape(pts.shape) - grad_h[:, None, :]
    l2 = float(np.sum(w * val_err**2))
    h1 = float(np.sum(w * np.sum(grad_err**2, axis=-1)))

    for t, op in sol.assembled.projections.items():
        fn = apply_h1_projection(op, sol.values[dm.local_nodes(t)])
        cut = imesh.cuts[t]
        for poly, sign in ((cut.sub_plus, 1), (cut.sub_minus, -1)):
            q = polygon_quadrature(poly, degree, h=cut.diameter)
            if len(q.weights) == 0:
                continue
            ve = np.asarray(exact.u(q.points)) - fn.value(q.points, sign)
            ge = np.asarray(exact.grad(q.points)) - fn.grad(sign)
            l2 += float(q.weights @ ve**2)
            h1 += float(q.weights @ np.sum(ge**2, axis=-1))
    return ErrorRecord(energy, math.sqrt(l2), math.sqrt(h1))


def compute_errors_hcurl(sol: CurlSolution, exact, degree: int = 6, boundary_degree: int = 5) -> ErrorRecord:
    """Energy DoF error, broken L2 error of ``u - Pi u_h`` and the projected energy error.

    The projected energy error is ``(sum alpha |curl u - curl_h u_h|^2 + beta |u - Pi u_h|^2)^(1/2)``
    with ``curl_h u_h`` the piecewise constant curl read off the DoFs.
    """
    dm = sol.dofmap
    imesh = dm.imesh
    coef = sol.assembled.coef
    e = interpolate_edge(dm, exact.u, boundary_degree) - sol.values
    energy = math.sqrt(max(float(e @ (sol.assembled.matrix @ e)), 0.0))

    regular, p, pts, w = _regular_quadrature(imesh, degree)
    plus = imesh.labels[regular] > 0
    alpha = np.where(plus, coef.alpha_plus, coef.alpha_minus)
    beta = np.where(plus, coef.beta_plus, coef.beta_minus)
    d = sol.values[dm.tri_edge_dofs[regular]] * dm.tri_edge_signs[regular]
    uh = np.einsum("tqkd,tk->tqd", nd0_values(p, pts), d)
    curl_h = 2.0 * np.einsum("tk,tk->t", nd0_coefficients(p)[:, 2, :], d)
    flat = pts.reshape(-1, 2)
    val_err = np.sum((np.asarray(exact.u(flat)).reshape(pts.shape) - uh) ** 2, axis=-1)
    curl_err = (np.asarray(exact.curl(flat)).reshape(w.shape) - curl_h[:, None]) ** 2
    l2 = float(np.sum(w * val_err))
    mass = float(np.sum(beta[:, None] * w * val_err))
    curl = float(np.sum(alpha[:, None] * w * curl_err))

    for t, op in sol.assembled.projections.items():
        cut = imesh.cuts[t]
        local = dm.local_edge_values(sol.values, t)
        v_plus, v_minus = apply_curl_projection(op, local)
        c_plus, c_minus = curl_from_dofs(cut, coef, local)
        for poly, sign, v, c in ((cut.sub_plus, 1, v_plus, c_plus), (cut.sub_minus, -1, v_minus, c_minus)):
            q = polygon_quadrature(poly, degree, h=cut.diameter)
            if len(q.weights) == 0:
                continue
            ve = q.weights @ np.sum((np.asarray(exact.u(q.points)) - v) ** 2, axis=-1)
            ce = q.weights @ (np.asarray(exact.curl(q.points)) - c) ** 2
            l2 += float(ve)
            mass += coef.beta(sign) * float(ve)
            curl += coef.alpha(sign) * float(ce)
    return ErrorRecord(energy, math.sqrt(l2), math.sqrt(curl + mass), math.sqrt(curl))


def compute_errors(sol, exact, degree: int = 6, boundary_degree: int = 5) -> ErrorRecord:
    if isinstance(sol, CurlSolution):
        return compute_errors_hcurl(sol, exact, degree, boundary_degree)
    return compute_errors_h1(sol, exact, degree)


# ---------------------------------------------------------------------------
# studies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelResult:
    n: int
    h: float
    ndof: int
    errors: ErrorRecord
    cg_iters: int
    seconds: float


def _order(e0: float, e1: float, h0: float, h1: float) -> float:
    if not (e0 > 0 and e1 > 0) or h0 == h1:
        return float("nan")
    return math.log(e0 / e1) / math.log(h0 / h1)


@dataclass
class ConvergenceReport:
    config: StudyConfig
    levels: list[LevelResult]

    def _eoc(self, attr: str) -> list[float]:
        lv = self.levels
        return [
            _order(getattr(a.errors, attr), getattr(b.errors, attr), a.h, b.h) for a, b in zip(lv[:-1], lv[1:])
        ]

    @property
    def eoc_energy(self) -> list[float]:
        return self._eoc("energy_dof")

    @property
    def eoc_l2(self) -> list[float]:
        return self._eoc("l2_proj")

    @property
    def eoc_h1(self) -> list[float]:
        return self._eoc("h1_proj")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        rates = list(zip(self.eoc_energy, self.eoc_l2, self.eoc_h1))
        fmt = "{:.12e}".format
        for i, lv in enumerate(self.levels):
            eoc = [fmt(r) for r in rates[i - 1]] if i > 0 else ["", "", ""]
            seconds = fmt(lv.seconds) if self.config.record_time else ""
            row = [fmt(lv.h), str(lv.ndof), fmt(lv.errors.energy_dof), fmt(lv.errors.l2_proj), fmt(lv.errors.h1_proj),
                   *eoc, str(lv.cg_iters), seconds]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def plot_data(self) -> str:
        """``log_h,log_energy_dof,log_l2_proj,log_h1_proj`` rows (natural logarithms)."""
        buf = io.StringIO()
        buf.write("log_h,log_energy_dof,log_l2_proj,log_h1_proj\n")
        for lv in self.levels:
            vals = (lv.h, lv.errors.energy_dof, lv.errors.l2_proj, lv.errors.h1_proj)
            buf.write(",".join(f"{math.log(v):.12e}" if v > 0 else "" for v in vals) + "\n")
        return buf.getvalue()


def solve_level(config: StudyConfig, n: int, offset=(0.0, 0.0)):
    """Mesh, assemble and solve one level; returns ``(solution, exact)``."""
    imesh = build_level_mesh(config, n, offset)
    exact = exact_solution_for(config, offset)
    coef = config.coef()
    q = config.quadrature
    if config.problem == "h1":
        sol = assemble_and_solve_h1(imesh, coef, exact.f, exact.u, solver=config.solver, tol=config.solver_tol,
                                    degree=q["load"])
    else:
        sol = assemble_and_solve_curl(imesh, coef, exact.f, exact.u, solver=config.solver, tol=config.solver_tol,
                                      degree=q["load"], variant=config.stabilization, boundary_degree=q["boundary"])
    return sol, exact


def level_offsets(config: StudyConfig, seed: int | None):
    """Per-level interface shifts, uniform in ``[-p h, p h]^2`` with ``p = center_perturbation``."""
    if config.center_perturbation == 0.0:
        return [(0.0, 0.0)] * len(config.meshes)
    rng = np.random.default_rng(seed)
    width = config.domain[1] - config.domain[0]
    return [tuple(rng.uniform(-1.0, 1.0, 2) * config.center_perturbation * width / n) for n in config.meshes]


def run_study(config: StudyConfig, seed: int | None = 0, out=None) -> ConvergenceReport:
    """Run every mesh level in order; writes the CSV to ``out`` (or ``config.output``) if given."""
    levels = []
    for n, offset in zip(config.meshes, level_offsets(config, seed)):
        start = time.perf_counter()
        try:
            sol, exact = solve_level(config, n, offset)
            errs = compute_errors(sol, exact, config.quadrature["error"], config.quadrature["boundary"])
        except NumericalFailure as exc:
            raise NumericalFailure(f"level n={n}: {exc}", exc.residual, exc.iterations) from exc
        except IvemError as exc:
            raise type(exc)(f"level n={n}: {exc}") from exc
        elapsed = time.perf_counter() - start
        ndof = int(np.count_nonzero(sol.free))
        levels.append(LevelResult(n, sol.dofmap.imesh.h, ndof, errs, sol.report.iterations, elapsed))
    report = ConvergenceReport(config, levels)
    target = out if out is not None else config.output
    if target is not None:
        Path(target).write_text(report.to_csv(), newline="\n")
    return report


def with_meshes(config: StudyConfig, meshes) -> StudyConfig:
    return replace(config, meshes=tuple(meshes))
