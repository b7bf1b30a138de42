import numpy as np
import pytest

from conedecay import fourier, measures, reparam
from conedecay.errors import DomainError, EmptySupport, MemoryCapExceeded, ZeroMass
from conedecay.surfaces import catalog_surface, cone_chart

PAR = lambda x: np.concatenate([x, x * x], axis=-1)
PSI_H = measures.make_bump((1.25, 1.75), (1.0, 2.0))


def test_bump_values():
    b = measures.make_bump([(-1, 1)], [(-2, 2)])
    assert b([0.0]) == 1.0
    assert b([2.5]) == 0.0 and b([-2.0]) == 0.0
    assert b([1.5]) == pytest.approx(0.5, abs=1e-15)
    assert measures.smooth_step(0.5) == pytest.approx(0.5)


def test_bump_gradient_matches_differences():
    b = measures.make_bump([(-0.2, 0.1), (0.0, 0.3)], [(-0.5, 0.4), (-0.2, 0.6)])
    y = np.array([[0.25, -0.1], [-0.3, 0.45], [0.0, 0.1]])
    e = 1e-6
    fd = np.stack([(b(y + e * np.eye(2)[i]) - b(y - e * np.eye(2)[i])) / (2 * e) for i in range(2)], axis=-1)
    np.testing.assert_allclose(b.gradient(y), fd, atol=1e-7)


def test_bump_nesting_validation():
    with pytest.raises(ValueError):
        measures.make_bump([(-1, 1)], [(-1, 2)])


def test_surface_measure_mass_and_empty_support():
    mu = measures.surface_measure(lambda x: x, [(0.0, 1.0)], None, 8)
    assert mu.total_mass == pytest.approx(1.0, abs=1e-15)
    assert mu.raw_mass == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(EmptySupport):
        measures.surface_measure(lambda x: x, [(0.5, 0.5)], None, 8)
    with pytest.raises(ValueError):
        measures.surface_measure(lambda x: x, [(0.0, 1.0)], None, 3)


def _surface(nodes=64):
    return measures.graph_measure(PAR, [(-0.3, 0.3)], measures.symmetric_bump(0.3), nodes)


def test_cone_lower_measure():
    nu = measures.cone_lower_measure(_surface(), PSI_H, 12)
    assert nu.total_mass == pytest.approx(1.0, abs=1e-14)
    m = nu.materialize()
    P, x, h = m.positions, m.params[:, :1], m.params[:, 1]
    np.testing.assert_allclose(P[:, -1], h, atol=0)
    np.testing.assert_allclose(P[:, :-1] / h[:, None], PAR(x), atol=1e-15)


def test_cylinder_lower_measure_separable():
    mu_S = _surface()
    nu = measures.cylinder_lower_measure(mu_S, PSI_H, 12)
    assert nu.total_mass == pytest.approx(1.0, abs=1e-14)
    for xi in ([3.0, -7.0], [40.0, 11.0]):
        a = fourier.ft(nu, np.array(xi + [0.0]))
        b = fourier.ft(mu_S, np.array(xi))
        assert abs(a - b) <= 1e-13


@pytest.mark.parametrize("kind", ["cone", "cylinder"])
def test_factored_and_materialised_transforms_agree(kind):
    nu = measures.chart_measure(kind, PAR, [(-0.2, 0.2)], None, 40, PSI_H, 8)
    m = nu.materialize()
    xi = np.array([5.0, -13.0, 9.0])
    assert fourier.ft(nu, xi) == pytest.approx(fourier.ft(m, xi), abs=1e-13)
    with pytest.raises(MemoryCapExceeded):
        nu.materialize(cap=10)


def test_mollify():
    mu = _surface().materialize()
    same = measures.mollify(mu, lambda p: np.ones(len(p)))
    np.testing.assert_allclose(same.weights, mu.weights, atol=1e-16)
    with pytest.raises(ZeroMass):
        measures.mollify(mu, lambda p: (p[:, 0] > 5).astype(float))


def test_mollify_preserves_decay():
    mu = measures.graph_measure(PAR, [(-0.3, 0.3)], measures.symmetric_bump(0.3), 16 * 1700).materialize()
    half = measures.symmetric_bump(0.15)
    nu = measures.mollify(mu, lambda p: half(p[:, :1]))
    ks = fourier.geometric_ks(16, 4096, 8)
    e0 = fourier.ray_profile(mu, [0.0, 1.0], ks=ks).fitted_exponent
    e1 = fourier.ray_profile(nu, [0.0, 1.0], ks=ks).fitted_exponent
    assert abs(e0 - 0.5) <= 0.05
    assert abs(e1 - e0) <= 0.05


def test_pushforward_examples():
    fam = reparam.cone_parabola()
    mu = measures.ParticleMeasure(cone_chart(PAR, np.array([[1.0]]), np.array([2.0])), [1.0], [[1.0, 2.0]])
    out = measures.pushforward(fam, 0.5, mu)
    np.testing.assert_allclose(out.positions, [[1.0, 0.5, 2.0]])
    np.testing.assert_allclose(out.weights, mu.weights)
    for fid in ("cone_parabola", "cone_perturbed", "cyl_parabola"):
        fam = reparam.family_from_id(fid)
        chart = measures.chart_measure(fam.kind, fam.phi, [(-0.1, 0.1)], None, 16, PSI_H, 4)
        moved = measures.pushforward(fam, 0.0, chart)
        np.testing.assert_allclose(moved.pts, chart.pts, atol=1e-15)


def test_pushforward_pullback_identity():
    fam = reparam.cone_parabola()
    mu = measures.chart_measure("cone", PAR, [(-0.2, 0.2)], None, 200, PSI_H, 8)
    t = np.array([0.13])
    ks = np.array([5.0, 50.0, 500.0])
    lhs = fourier.ft_ray(measures.pushforward(fam, t, mu), [0.0, 1.0, 0.0], ks)
    rhs = fourier.ft_ray(mu, fam.eta(t), ks)
    np.testing.assert_allclose(lhs, rhs, atol=1e-13)


def test_morse_family_domain_check():
    fam = reparam.family_from_id("cone_general:cubic")
    mu = measures.chart_measure("cone", fam.phi, [(-2 * fam.c, 2 * fam.c)], None, 16, PSI_H, 4)
    with pytest.raises(DomainError):
        measures.pushforward(fam, np.zeros(1), mu)


def test_average_single_node_and_fubini():
    fam = reparam.cone_parabola()
    mu = measures.chart_measure("cone", PAR, [(-0.2, 0.2)], None, 32, PSI_H, 4)
    one = measures.AveragedMeasure(fam, mu, np.array([[0.1]]), np.array([0.7]))
    m = one.materialize()
    p = measures.pushforward(fam, np.array([0.1]), mu).materialize()
    np.testing.assert_allclose(m.weights, 0.7 * p.weights)
    np.testing.assert_allclose(m.positions, p.positions)

    psi_t = measures.symmetric_bump(0.4)
    lazy = measures.AveragedMeasure.build(fam, mu, psi_t, 8)
    mat = measures.average(fam, mu, psi_t, 8)
    xi = np.array([3.0, 17.0, -4.0])
    parts = sum(v * fourier.ft(q, xi) for v, q in lazy.components())
    assert abs(fourier.ft(mat, xi) - parts) <= 1e-14
    assert abs(fourier.ft(lazy, xi) - parts) <= 1e-14
    assert mat.total_mass == pytest.approx(lazy.total_mass, rel=1e-13)
    with pytest.raises(MemoryCapExceeded):
        measures.average(fam, mu, psi_t, 8, cap=100)


def test_atom_file_roundtrip(tmp_path):
    mu = measures.cone_lower_measure(_surface(16), PSI_H, 4).materialize()
    path = tmp_path / "atoms.bin"
    measures.save_atoms(mu, path)
    back = measures.load_atoms(path)
    np.testing.assert_array_equal(back.positions, mu.positions)
    np.testing.assert_array_equal(back.weights, mu.weights)
    np.testing.assert_array_equal(back.params, mu.params)
    assert path.stat().st_size == 12 + 8 * mu.size * (3 + 1 + 2)
