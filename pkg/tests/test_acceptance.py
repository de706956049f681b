"""Acceptance suite: convergence rates, structural checks, patch tests, robustness, solver agreement.

Each criterion prints one PASS/FAIL line; the lines are collected again in the
terminal summary. Run as a script (``python3 tests/test_acceptance.py``) to
print the lines without pytest.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES  # noqa: E402
from ivem.linear_solver import dense_solve, is_positive_definite  # noqa: E402
from ivem.study import (  # noqa: E402
    compute_errors,
    config_from_dict,
    default_config,
    level_offsets,
    run_study,
    solve_level,
)
from ivem.verification import run_verification  # noqa: E402
from ivem.virtual_dofs import interpolate_edge  # noqa: E402

# (beta_minus, beta_plus): minus is the disk inside the circle
H1_BETAS = [(1.0, 10.0), (10.0, 1.0), (1.0, 1000.0)]
MESHES = [8, 16, 32, 64]


def record(key: str, passed: bool, text: str) -> bool:
    line = f"{'PASS' if passed else 'FAIL'}  [{key}] {text}"
    ACCEPTANCE_LINES[key] = line
    print(line)
    return passed


def h1_config(beta_minus, beta_plus, **kw):
    coefficients = {"beta_plus": beta_plus, "beta_minus": beta_minus, "alpha_plus": 1.0, "alpha_minus": 1.0}
    return default_config("h1", coefficients=coefficients, meshes=MESHES, **kw)


def hcurl_config(**kw):
    coefficients = {"beta_plus": 10.0, "beta_minus": 1.0, "alpha_plus": 2.0, "alpha_minus": 1.0}
    return default_config("hcurl", coefficients=coefficients, meshes=MESHES, **kw)


def criterion_1() -> bool:
    ok = True
    parts = []
    for bm, bp in H1_BETAS:
        start = time.perf_counter()
        report = run_study(h1_config(bm, bp))
        elapsed = time.perf_counter() - start
        eoc = report.eoc_h1[-1]
        l2 = report.eoc_l2[-1]
        good = 0.9 <= eoc <= 1.3 and elapsed <= 120.0
        ok &= good
        parts.append(f"beta=({bm:g},{bp:g}) eoc_h1={eoc:.3f} eoc_l2={l2:.3f}{'' if l2 >= 1.7 else '(<1.7)'} "
                     f"t={elapsed:.1f}s")
    return record("1", ok, "H1 projected-error order in [0.9,1.3], <=120 s: " + "; ".join(parts))


def criterion_2() -> bool:
    start = time.perf_counter()
    report = run_study(hcurl_config())
    elapsed = time.perf_counter() - start
    eoc = report.eoc_energy[-1]
    ok = 0.9 <= eoc <= 1.3 and elapsed <= 180.0
    return record("2", ok, f"H(curl) energy order in [0.9,1.3], <=180 s: eoc_energy={eoc:.3f} "
                           f"eoc_hcurl_proj={report.eoc_h1[-1]:.3f} t={elapsed:.1f}s")


def criterion_3() -> bool:
    results = run_verification(seed=0)
    ok = all(r.passed for r in results)
    detail = "; ".join(f"{r.name.split()[0]}={r.value:.1e}/{r.tol:.0e}{'' if r.passed else ' FAIL'}" for r in results)
    return record("3", ok, "structural suite 3a-3f: " + detail)


def criterion_4() -> bool:
    worst = {}
    base = {"interface": {"type": "circle", "center": list(default_config().interface["center"]), "radius": 0.3},
            "solver": "dense"}
    cases = {
        "h1-linear": dict(problem="h1", case="linear", coefficients={"beta_plus": 3.0, "beta_minus": 3.0}),
        "hcurl-constant": dict(problem="hcurl", case="constant",
                               coefficients={"beta_plus": 3.0, "beta_minus": 3.0, "alpha_plus": 5.0,
                                             "alpha_minus": 0.5}),
    }
    for name, kw in cases.items():
        cfg = config_from_dict({**base, **kw, "meshes": [8, 16, 32]})
        err = 0.0
        for n in cfg.meshes:
            sol, exact = solve_level(cfg, n)
            dm = sol.dofmap
            ref = exact.u(dm.node_coords) if cfg.problem == "h1" else interpolate_edge(dm, exact.u)
            err = max(err, float(np.abs(sol.values - ref).max()))
        worst[name] = err
    ok = all(v <= 1e-9 for v in worst.values())
    return record("4", ok, "patch tests, DoF max-norm <= 1e-9: "
                  + "; ".join(f"{k}={v:.1e}" for k, v in worst.items()))


def _check_system(sol) -> tuple[bool, float]:
    A = sol.assembled.matrix
    asym = float(abs(A - A.T).max() / abs(A).max())
    return is_positive_definite(sol.reduced.matrix), asym


def criterion_5(trials: int = 20, n: int = 32) -> bool:
    ok = True
    parts = []
    for label, cfg in (("h1", h1_config(1.0, 10.0)), ("hcurl", hcurl_config())):
        cfg = config_from_dict({**cfg.to_dict(), "meshes": [n] * trials, "center_perturbation": 0.3})
        errs, chol, worst_asym = [], True, 0.0
        for offset in level_offsets(cfg, seed=2024):
            sol, exact = solve_level(cfg, n, offset)
            errs.append(compute_errors(sol, exact).h1_proj)
            spd, asym = _check_system(sol)
            chol &= spd
            worst_asym = max(worst_asym, asym)
        spread = max(errs) / min(errs)
        good = spread <= 3.0 and chol and worst_asym <= 1e-13
        ok &= good
        parts.append(f"{label}: max/min={spread:.3f} cholesky={'ok' if chol else 'FAILED'} asym={worst_asym:.1e}")
    return record("5", ok, f"{trials} perturbations <= 0.3h at n={n}, spread <= 3x, SPD, symmetric: "
                  + "; ".join(parts))


def criterion_6() -> bool:
    configs = [h1_config(bm, bp) for bm, bp in H1_BETAS]
    configs += [hcurl_config(case=c) for c in ("rotational", "gradient")]
    configs.append(hcurl_config(stabilization="sqrt_h"))
    configs.append(config_from_dict({**hcurl_config().to_dict(), "case": "constant",
                                     "coefficients": {"beta_plus": 3.0, "beta_minus": 3.0}}))
    worst = 0.0
    count = 0
    for cfg in configs:
        for n in (8, 16):
            sol, _ = solve_level(cfg, n)
            x_cg = sol.values[sol.free]
            x_dense = dense_solve(sol.reduced)
            worst = max(worst, float(np.linalg.norm(x_cg - x_dense) / np.linalg.norm(x_dense)))
            count += 1
    return record("6", worst <= 1e-8, f"CG vs dense relative difference <= 1e-8 over {count} systems: {worst:.1e}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6]


def test_criterion_1_h1_convergence():
    assert criterion_1()


def test_criterion_2_hcurl_convergence():
    assert criterion_2()


def test_criterion_3_structural_suite():
    assert criterion_3()


def test_criterion_4_patch_tests():
    assert criterion_4()


def test_criterion_5_robustness():
    assert criterion_5()


def test_criterion_6_solver_agreement():
    assert criterion_6()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
