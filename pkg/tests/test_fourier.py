import warnings

import numpy as np
import pytest
from scipy import integrate

from conedecay import fourier, measures
from conedecay.errors import AllZeroValues, DimensionMismatch

PAR = lambda x: np.concatenate([x, x * x], axis=-1)
KS = fourier.geometric_ks(16, 4096, 8)


def point(pos, w=None):
    pos = np.atleast_2d(pos)
    return measures.ParticleMeasure(pos, np.ones(len(pos)) / len(pos) if w is None else w)


def test_trivial_transforms():
    mu = point([[0.3, -0.2], [1.0, 2.0]], np.array([0.25, 0.5]))
    assert fourier.ft(mu, [0.0, 0.0]) == pytest.approx(0.75)
    assert fourier.ft(point([[0.0]]), [123.4]) == pytest.approx(1.0)
    assert fourier.ft(point([[-0.5], [0.5]]), [1.0]) == pytest.approx(-1.0, abs=1e-15)
    with pytest.raises(DimensionMismatch):
        fourier.ft(mu, [1.0, 2.0, 3.0])


def test_lebesgue_segment_sinc():
    mu = measures.surface_measure(lambda x: x, [(0.0, 1.0)], None, 16 * 2600)
    ks = np.array([0.5, 3.3, 100.25, 1000.5])
    # closed form of the Lebesgue transform on [0, 1]
    ref = np.exp(-1j * np.pi * ks) * np.sin(np.pi * ks) / (np.pi * ks)
    np.testing.assert_allclose(fourier.ft_ray(mu, [1.0], ks), ref, atol=1e-12)
    prof = fourier.ray_profile(mu, [1.0], ks=KS, mode="blockmax")
    assert abs(prof.fitted_exponent - 1.0) <= 0.05


def _arc():
    return measures.graph_measure(PAR, [(-0.3, 0.3)], measures.symmetric_bump(0.3), 16 * 1700)


def test_arc_transform_matches_adaptive_quadrature():
    mu = _arc()
    bump = measures.symmetric_bump(0.3)
    psi = lambda x: float(bump(np.array([x])))
    mass = integrate.quad(psi, -0.3, 0.3, epsabs=1e-14)[0]
    for xi in ((3.0, 20.0), (-11.0, 150.0)):
        ph = lambda x: 2 * np.pi * (xi[0] * x + xi[1] * x * x)
        re = integrate.quad(lambda x: psi(x) * np.cos(ph(x)), -0.3, 0.3, limit=400, epsabs=1e-13)[0]
        im = -integrate.quad(lambda x: psi(x) * np.sin(ph(x)), -0.3, 0.3, limit=400, epsabs=1e-13)[0]
        assert fourier.ft(mu, xi) == pytest.approx((re + 1j * im) / mass, abs=1e-10)


def test_arc_decay_along_normal():
    prof = fourier.ray_profile(_arc(), [0.0, 1.0], ks=KS)
    assert abs(prof.fitted_exponent - 0.5) <= 0.05
    assert prof.fit_r2 > 0.99


def test_point_mass_profile_flat():
    prof = fourier.ray_profile(point([[0.0, 0.0]]), [0.6, 0.8], ks=KS[:25])
    assert prof.fitted_exponent == pytest.approx(0.0, abs=1e-12)


def test_fit_exponent_synthetic():
    ks = fourier.geometric_ks(16, 4096, 8)
    assert fourier.fit_exponent((ks, ks**-0.5), "raw")[0] == pytest.approx(0.5, abs=1e-12)
    assert abs(fourier.fit_exponent((ks, ks**-0.5 * np.abs(np.cos(ks))), "blockmax")[0] - 0.5) <= 0.05
    assert fourier.fit_exponent((ks, np.ones_like(ks)), "raw")[0] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(AllZeroValues):
        fourier.fit_exponent((ks, np.zeros_like(ks)))
    with pytest.raises(ValueError):
        fourier.fit_exponent((ks[:8], ks[:8] ** -1.0))
    with pytest.raises(ValueError):
        fourier.fit_exponent((ks, ks**-1.0), "median")


def test_block_maxima_positions():
    ks = np.array([1.0, 1.5, 2.0, 3.0, 4.0, 6.0])
    bk, bv = fourier.block_maxima(ks, np.array([1.0, 3.0, 0.5, 0.2, 0.1, 0.05]))
    assert bk.tolist() == [1.5, 2.0, 4.0] and bv.tolist() == [3.0, 0.5, 0.1]
    # a lone endpoint sample is merged into the last full octave
    ks = 2.0 ** (np.arange(9) / 4)
    vals = np.array([1.0, 3.0, 0.5, 0.2, 0.1, 0.3, 0.2, 0.1, 1e-9])
    bk, bv = fourier.block_maxima(ks, vals)
    assert bv.tolist() == [3.0, 0.3]


def test_ray_profile_validation_and_warning():
    with pytest.raises(ValueError):
        fourier.ray_profile(point([[0.0, 0.0]]), [1.0, 1.0])
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        prof = fourier.ray_profile(point([[0.0, 0.0], [1.0, 0.5]]), [1.0, 0.0], ks=KS)
    assert any(issubclass(w.category, fourier.ResolutionWarning) for w in rec)
    assert prof.warnings


def test_sphere_directions():
    for dim, count in ((2, 16), (3, 50), (5, 20)):
        d = fourier.sphere_directions(dim, count, seed=1)
        assert d.shape == (count, dim)
        np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0)
    np.testing.assert_array_equal(fourier.sphere_directions(5, 8, 3), fourier.sphere_directions(5, 8, 3))


def test_dim_proxy():
    ks = fourier.geometric_ks(16, 1024, 4)
    assert fourier.dim_proxy(fourier.direction_sup_profile(point([[0.0, 0.0]]), 16, ks)) == pytest.approx(0, abs=1e-12)
    arc = measures.graph_measure(PAR, [(-0.3, 0.3)], measures.symmetric_bump(0.3), 1400)
    assert abs(fourier.dim_proxy(fourier.direction_sup_profile(arc, 32, ks)) - 1.0) <= 0.1
    seg = measures.graph_measure(lambda x: np.concatenate([x, 0 * x], axis=-1), [(-0.3, 0.3)],
                                 measures.symmetric_bump(0.3), 400)
    assert fourier.dim_proxy(fourier.direction_sup_profile(seg, 32, ks)) == pytest.approx(0, abs=1e-10)
    with pytest.raises(ValueError):
        fourier.direction_sup_profile(seg, 8, ks)


def test_profile_csv_roundtrip(tmp_path):
    prof = fourier.DecayProfile(KS, KS**-0.5, [0.0, 1.0]).refit("raw")
    prof.to_csv(tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "k,value"
    back = fourier.read_profile_csv(tmp_path / "p.csv").refit("raw")
    np.testing.assert_array_equal(back.values, prof.values)
    assert back.fitted_exponent == pytest.approx(0.5, abs=1e-12)
    prof.to_json(tmp_path / "p.json")
    with pytest.raises(ValueError):
        fourier.DecayProfile([2.0, 1.0], [1.0, 1.0], "x")
