import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ivem import CoefficientPair, jump_matrix
from ivem.ife_local import (
    IfeCurlFunction,
    curl_ife_basis,
    h1_ife_basis,
    rot90,
    rot_h1_potential,
    verify_exact_sequence,
)

angles = st.floats(0.0, 2 * np.pi)
log_rho = st.floats(-3.0, 3.0)


@settings(max_examples=200, deadline=None)
@given(angles, log_rho)
def test_jump_matrix_eigenstructure(theta, lr):
    n = np.array([np.cos(theta), np.sin(theta)])
    t = rot90(n)
    rho = 10.0**lr
    M = jump_matrix(n, rho)
    assert np.allclose(M @ n, rho * n, atol=1e-12 * max(1.0, rho))
    assert np.allclose(M @ t, t, atol=1e-12)
    assert np.allclose(M, M.T)


def test_jump_matrix_identity_for_rho_one():
    assert np.allclose(jump_matrix(np.array([0.6, 0.8]), 1.0), np.eye(2))


def test_jump_matrix_rejects_bad_input():
    with pytest.raises(ValueError):
        jump_matrix(np.array([1.0, 1.0]), 2.0)
    with pytest.raises(ValueError):
        jump_matrix(np.array([1.0, 0.0]), 0.0)


def test_coefficient_pair_validation():
    with pytest.raises(ValueError):
        CoefficientPair(beta_plus=-1.0)
    c = CoefficientPair(beta_plus=4.0, beta_minus=2.0)
    assert c.rho == pytest.approx(0.5)
    assert np.allclose(c.beta(np.array([1, -1])), [4.0, 2.0])
    assert np.allclose(c.alpha(np.array([1, -1])), [1.0, 1.0])


def test_h1_basis_jump_conditions(imesh16, coef):
    for cut in imesh16.cuts.values():
        n = cut.n_bar
        seg = cut.gamma_seg
        pts = seg[0] + np.linspace(0, 1, 7)[:, None] * (seg[1] - seg[0])
        for f in h1_ife_basis(cut, coef):
            assert np.allclose(f.value(pts, 1), f.value(pts, -1), atol=1e-13)
            flux = coef.beta_plus * f.grad(1) @ n - coef.beta_minus * f.grad(-1) @ n
            assert abs(flux) < 1e-12 * coef.beta_plus


def test_curl_basis_jump_conditions(imesh16, coef):
    for cut in imesh16.cuts.values():
        n, t = cut.n_bar, cut.t_bar
        for f in curl_ife_basis(cut, coef):
            vp, vm = f.value(cut.x_m, 1), f.value(cut.x_m, -1)
            assert abs((vp - vm) @ t) < 1e-13
            assert abs(coef.beta_plus * vp @ n - coef.beta_minus * vm @ n) < 1e-12
            cp, cm = f.curl()
            assert coef.alpha_plus * cp == pytest.approx(coef.alpha_minus * cm, abs=1e-13)


def test_curl_function_curl_matches_finite_difference(coef):
    M = jump_matrix(np.array([0.6, 0.8]), coef.rho)
    f = IfeCurlFunction(np.array([0.3, -0.2]), 0.7, np.array([0.1, 0.2]), M, coef.alpha_plus, coef.alpha_minus)
    x = np.array([0.4, 0.5])
    eps = 1e-6
    for sign, expected in zip((1, -1), f.curl()):
        dvy_dx = (f.value(x + [eps, 0], sign)[1] - f.value(x - [eps, 0], sign)[1]) / (2 * eps)
        dvx_dy = (f.value(x + [0, eps], sign)[0] - f.value(x - [0, eps], sign)[0]) / (2 * eps)
        assert dvy_dx - dvx_dy == pytest.approx(expected, rel=1e-8)


def test_rot_potential_rejects_non_ife_gradient(imesh8, coef):
    cut = next(iter(imesh8.cuts.values()))
    with pytest.raises(ValueError):
        rot_h1_potential(np.array([1.0, 0.0]), cut, coef, v_plus=np.array([5.0, 5.0]))


def test_rot_potential_zero_boundary_mean(imesh8, coef):
    for cut in imesh8.cuts.values():
        phi = rot_h1_potential(np.array([0.3, 0.9]), cut, coef)
        mean = np.sum(cut.edge_length * phi.value(cut.edge_mid, cut.edge_sign))
        assert abs(mean) < 1e-14


def test_exact_sequence_on_all_cut_elements(imesh16):
    for coef in (
        CoefficientPair(10.0, 1.0, 2.0, 1.0),
        CoefficientPair(1.0, 1000.0, 0.5, 30.0),
        CoefficientPair(1.0, 1.0, 1.0, 1.0),
    ):
        for cut in imesh16.cuts.values():
            viol = verify_exact_sequence(cut, coef)
            assert max(viol.values()) < 1e-12
