import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conedecay import reparam
from conedecay.errors import NegativeRadicand, ShrinkExhausted
from conedecay.surfaces import QuadraticSignature, identity_map, quadratic_form

Q1 = QuadraticSignature(1, 1)


def test_eta_parabola_examples():
    np.testing.assert_allclose(reparam.eta_parabola(0.0), [0, 1, 0])
    np.testing.assert_allclose(reparam.eta_parabola(0.5), [-1, 1, 0.25])
    assert np.dot([1, 1, 1], reparam.eta_parabola(0.5)) == pytest.approx(0.25)


def test_perturbed_closed_form():
    np.testing.assert_allclose(reparam.eta_perturbed(0.0), [0, 1, 0])
    x = np.linspace(-0.2, 0.2, 11)
    np.testing.assert_allclose(reparam.T_perturbed(0.0, x), x, atol=1e-15)
    t = np.linspace(-0.2, 0.2, 11)
    np.testing.assert_allclose(reparam.T_perturbed(t, t), 0.0, atol=1e-15)
    x, t = 0.1, 0.05
    lhs = reparam.T_perturbed(t, x) ** 2
    rhs = np.dot([x + x**3, x * x, 1.0], reparam.eta_perturbed(t))
    assert lhs == pytest.approx(rhs, abs=1e-12)
    with pytest.raises(NegativeRadicand):
        reparam.T_perturbed(1.2, 0.0)


def test_cylinder_eta():
    et, rho = reparam.eta_cylinder_parabola(0.0)
    np.testing.assert_allclose(et, [0, 1, 0]) and rho == 0.0
    et, rho = reparam.eta_cylinder_parabola(-0.3)
    np.testing.assert_allclose(et, [0.6, 1, 0])
    assert rho == pytest.approx(0.09)
    # h-independent identity
    et, rho = reparam.eta_cylinder_parabola(0.5)
    assert np.dot([1, 1, 7], et) + rho == pytest.approx(0.25)


def test_split_eta():
    et, rho = reparam.split_eta_for_cylinder([-1.0, 1.0, 0.25])
    np.testing.assert_allclose(et, [-1, 1, 0])
    assert rho == 0.25
    et, rho = reparam.split_eta_for_cylinder([0.0, 1.0, 0.0])
    np.testing.assert_allclose(et, [0, 1, 0]) and rho == 0.0


def test_eta_general_reductions():
    np.testing.assert_allclose(reparam.eta_general(identity_map(1), Q1, [[0.0]]), [[0, 1, 0]])
    np.testing.assert_allclose(reparam.eta_general(identity_map(1), Q1, [[0.5]]), [[-1, 1, 0.25]])
    t = np.linspace(-0.2, 0.2, 41)[:, None]
    np.testing.assert_allclose(reparam.eta_general(reparam.varphi_cubic(), Q1, t),
                               reparam.eta_perturbed(t[:, 0]), atol=1e-12)
    e = reparam.eta_general(identity_map(2), QuadraticSignature(2, 1), np.zeros((1, 2)))
    np.testing.assert_allclose(e, [[0, 0, 1, 0]])


@settings(max_examples=50, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_F_identity_is_shift_square(x, t):
    F = reparam.F_eval(identity_map(1), Q1, [x], [t])
    assert F == pytest.approx((x - t) ** 2, abs=1e-12)


def test_F_vanishes_on_diagonal_with_zero_gradient():
    vp = reparam.varphi_cubic()
    x = np.linspace(-0.2, 0.2, 9)[:, None]
    np.testing.assert_allclose(reparam.F_eval(vp, Q1, x, x), 0.0, atol=1e-15)
    e = 1e-6
    g = (reparam.F_eval(vp, Q1, x, x + e) - reparam.F_eval(vp, Q1, x, x - e)) / (2 * e)
    assert np.max(np.abs(g)) <= 1e-7


def test_general_family_identity_is_shift():
    fam = reparam.build_T_general(identity_map(1), Q1, c=0.5)
    x = np.linspace(-0.5, 0.5, 21)[:, None]
    np.testing.assert_allclose(fam.T(np.array([0.3]), x), x - 0.3, atol=1e-9)


def test_general_family_matches_closed_form():
    fam = reparam.build_T_general(reparam.varphi_cubic(), Q1, c=reparam.I2)
    x = np.linspace(-fam.c, fam.c, 41)[:, None]
    for t in (-fam.c, 0.0, 0.07):
        np.testing.assert_allclose(fam.T(np.array([t]), x)[:, 0], reparam.T_perturbed(t, x[:, 0]), atol=1e-6)


def test_saddle_family_residual():
    fam = reparam.family_from_id("cone_general:saddle", 0.2)
    assert reparam.morse_residual(fam) <= 1e-6


@pytest.mark.parametrize("fid", ["cone_parabola", "cone_perturbed", "cyl_parabola", "cone_general:cubic"])
def test_family_identities(fid):
    fam = reparam.family_from_id(fid)
    rng = np.random.default_rng(1)
    x = rng.uniform(-fam.c, fam.c, (300, 1))
    t = rng.uniform(-fam.c, fam.c, (300, 1))
    tol = 1e-12 if fam.closed_form else 1e-6
    assert np.max(fam.identity_residual(x, t, h=3.0)) <= tol
    assert reparam.range_violations(fam) == 0.0


def test_lemma_checks_identity():
    L = reparam.lemma_checks(identity_map(1), Q1, 0.4)
    assert L["F_xx"] == 0.0 and L["grad_t_at_x"] <= 1e-7
    assert L["hessian_at_0_err"] <= 1e-5 and L["min_eta_norm"] >= 1.0


def test_family_registry_errors():
    with pytest.raises(KeyError):
        reparam.family_from_id("torus")
    with pytest.raises(ShrinkExhausted):
        reparam.build_T_general(reparam.varphi_cubic(), Q1, c=50.0, max_shrink=0)


def test_height_is_quadratic_of_T():
    fam = reparam.cone_perturbed()
    x = np.linspace(-0.1, 0.1, 5)[:, None]
    t = np.array([0.05])
    np.testing.assert_allclose(fam.height(t, x), quadratic_form(Q1, fam.T(t, x)))
