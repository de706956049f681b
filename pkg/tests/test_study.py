import json
import math

import numpy as np
import pytest

from ivem import scheme_h1
from ivem.errors import ConfigError, NumericalFailure
from ivem.study import (
    ACCEPTANCE_CENTER,
    CSV_HEADER,
    compute_errors,
    config_from_dict,
    default_config,
    level_offsets,
    load_config,
    run_study,
    solve_level,
    with_meshes,
)
from ivem.virtual_dofs import interpolate_edge, interpolate_nodal


def base(**overrides):
    d = {
        "problem": "h1",
        "interface": {"type": "circle", "center": [0.5, 0.5], "radius": 0.3},
        "coefficients": {"beta_plus": 10.0, "beta_minus": 1.0},
        "case": "circle",
        "meshes": [4, 8],
    }
    d.update(overrides)
    return d


def test_defaults_filled():
    cfg = config_from_dict(base())
    assert cfg.coefficients["alpha_plus"] == 1.0
    assert cfg.quadrature == {"load": 4, "error": 6, "boundary": 5}
    assert cfg.stabilization == "O1" and cfg.solver == "cg" and cfg.solver_tol == 1e-12
    assert config_from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize(
    "overrides, field",
    [
        ({"problem": "maxwell"}, "problem"),
        ({"case": "rotational"}, "case"),
        ({"meshes": []}, "meshes"),
        ({"meshes": [8, 1]}, "meshes[1]"),
        ({"meshes": [8, 16.0]}, "meshes[1]"),
        ({"coefficients": {"beta_plus": -1.0}}, "coefficients.beta_plus"),
        ({"coefficients": {"beta_pluss": 1.0}}, "coefficients"),
        ({"interface": {"type": "circle", "center": [0.5], "radius": 0.3}}, "interface.center"),
        ({"interface": {"type": "circle", "center": [0.5, 0.5], "radius": 0.0}}, "interface.radius"),
        ({"interface": {"type": "ellipse"}}, "interface.type"),
        ({"interface": {"type": "line", "point": [0, 0.5], "normal": [0, 1]}}, "interface.type"),
        ({"quadrature": {"load": 9}}, "quadrature.load"),
        ({"stabilization": "h"}, "stabilization"),
        ({"solver_tol": 2.0}, "solver_tol"),
        ({"domain": [0, 0, 0, 1]}, "domain"),
        ({"colour": "red"}, "config"),
    ],
)
def test_validation_names_field(overrides, field):
    with pytest.raises(ConfigError) as info:
        config_from_dict(base(**overrides))
    assert str(info.value).startswith(field)


def test_missing_required_field():
    d = base()
    del d["meshes"]
    with pytest.raises(ConfigError, match="^meshes"):
        config_from_dict(d)


def test_uniform_cases_require_equal_beta():
    with pytest.raises(ConfigError, match="beta_plus"):
        config_from_dict(base(case="linear"))
    cfg = config_from_dict(base(case="linear", coefficients={"beta_plus": 2.0, "beta_minus": 2.0}))
    assert cfg.case == "linear"


def test_load_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")
    good = tmp_path / "good.json"
    good.write_text(json.dumps(base()))
    assert load_config(good).meshes == (4, 8)


def test_acceptance_center_is_offset():
    assert ACCEPTANCE_CENTER == pytest.approx((0.5 + 0.01 * math.sqrt(2), 0.5 + 0.01 * math.sqrt(3)))


@pytest.mark.parametrize("problem", ["h1", "hcurl"])
def test_interpolant_has_zero_energy_error(problem):
    cfg = default_config(problem, meshes=[8])
    sol, exact = solve_level(cfg, 8)
    dm = sol.dofmap
    sol.values = interpolate_nodal(dm, exact.u) if problem == "h1" else interpolate_edge(dm, exact.u)
    assert compute_errors(sol, exact).energy_dof == 0.0


def test_linear_patch_errors():
    cfg = config_from_dict(base(case="linear", coefficients={"beta_plus": 3.0, "beta_minus": 3.0}, solver="dense"))
    report = run_study(cfg)
    for lv in report.levels:
        assert lv.errors.energy_dof <= 1e-9
        assert lv.errors.l2_proj <= 1e-9
        assert lv.errors.h1_proj <= 1e-9


def test_constant_field_patch_errors():
    cfg = config_from_dict(base(problem="hcurl", case="constant", coefficients={"beta_plus": 2.0, "beta_minus": 2.0,
                                                                                "alpha_plus": 4.0},
                                solver="dense"))
    for lv in run_study(cfg).levels:
        assert max(lv.errors.energy_dof, lv.errors.l2_proj, lv.errors.h1_proj) <= 1e-9


def test_h1_projected_error_ratio():
    report = run_study(default_config("h1", meshes=[16, 32]))
    a, b = report.levels
    assert a.errors.h1_proj / b.errors.h1_proj >= 1.85
    assert a.errors.energy_dof > b.errors.energy_dof


def test_single_level_has_empty_eoc_columns():
    report = run_study(default_config("h1", meshes=[8]))
    lines = report.to_csv().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 2
    fields = lines[1].split(",")
    assert fields[5:8] == ["", "", ""]
    assert fields[9] == ""


def test_csv_format(tmp_path):
    cfg = default_config("h1", meshes=[4, 8, 16])
    out = tmp_path / "study.csv"
    report = run_study(cfg, out=out)
    text = out.read_bytes().decode()
    assert "\r" not in text and text.endswith("\n")
    rows = [ln.split(",") for ln in text.splitlines()[1:]]
    assert len(rows) == 3
    for row in rows:
        float(row[0])
        assert "e" in row[0] and len(row[0].split("e")[0].split(".")[1]) == 12
        assert int(row[1]) > 0
    eoc = report.eoc_h1
    assert float(rows[2][7]) == pytest.approx(eoc[1], rel=1e-11)
    h = [lv.h for lv in report.levels]
    assert h[0] / h[1] == pytest.approx(2.0) and h[1] / h[2] == pytest.approx(2.0)
    e = [lv.errors.h1_proj for lv in report.levels]
    assert eoc[0] == pytest.approx(math.log2(e[0] / e[1]))


def test_plot_data():
    report = run_study(default_config("h1", meshes=[4, 8]))
    lines = report.plot_data().splitlines()
    assert lines[0] == "log_h,log_energy_dof,log_l2_proj,log_h1_proj"
    vals = [float(v) for v in lines[1].split(",")]
    assert vals[0] == pytest.approx(math.log(report.levels[0].h))
    assert vals[3] == pytest.approx(math.log(report.levels[0].errors.h1_proj))


def test_record_time_fills_seconds():
    cfg = config_from_dict(base(record_time=True, meshes=[4]))
    row = run_study(cfg).to_csv().splitlines()[1].split(",")
    assert float(row[9]) >= 0.0


def test_offsets_are_seeded_and_bounded():
    cfg = config_from_dict(base(center_perturbation=0.3, meshes=[8, 16, 32]))
    a = level_offsets(cfg, 5)
    assert a == level_offsets(cfg, 5)
    assert a != level_offsets(cfg, 6)
    for (dx, dy), n in zip(a, cfg.meshes):
        assert max(abs(dx), abs(dy)) <= 0.3 / n
    assert level_offsets(config_from_dict(base()), 1) == [(0.0, 0.0)] * 2


def test_failure_carries_level_context(monkeypatch):
    def no_convergence(system, method="cg", tol=1e-10):
        raise NumericalFailure("CG did not converge", 1e-3, 7)

    monkeypatch.setattr(scheme_h1, "solve", no_convergence)
    cfg = config_from_dict(base(meshes=[4]))
    with pytest.raises(NumericalFailure, match="level n=4"):
        run_study(cfg)


def test_with_meshes():
    cfg = with_meshes(default_config("hcurl"), [8, 16])
    assert cfg.meshes == (8, 16) and cfg.problem == "hcurl"


def test_hcurl_errors_positive_and_decreasing():
    report = run_study(default_config("hcurl", meshes=[8, 16]))
    a, b = report.levels
    for attr in ("energy_dof", "l2_proj", "h1_proj", "curl_proj"):
        assert getattr(b.errors, attr) < getattr(a.errors, attr)
    assert np.isfinite(report.eoc_energy[0])


@pytest.mark.parametrize("problem, case", [("h1", "circle"), ("hcurl", "rotational"), ("hcurl", "gradient")])
def test_energy_errors_strictly_decrease(problem, case):
    report = run_study(default_config(problem, case=case, meshes=[8, 16, 32]))
    e = [lv.errors.energy_dof for lv in report.levels]
    assert e[0] > e[1] > e[2]


def test_repeated_levels_give_nan_order():
    cfg = config_from_dict(base(meshes=[4, 4], center_perturbation=0.3))
    report = run_study(cfg, seed=1)
    assert math.isnan(report.eoc_h1[0])
    assert report.to_csv().splitlines()[2].split(",")[7] == "nan"
