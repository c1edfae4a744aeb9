import math

import numpy as np
import pytest
from scipy import stats

from cvqbm.errors import CutoffInsufficient, InvalidArgument, UnsupportedShape
from cvqbm.fock import DensityMatrix
from cvqbm.gates import displace
from cvqbm.quadrature import (
    Pdf,
    QuadGrid,
    density_to_pdf,
    encode_pdf,
    kde_smooth,
    kl_divergence,
    oscillator_wavefunction,
    rescale_support,
    wavefunction_table,
)


def gauss(grid, mu, sigma):
    return Pdf(grid, stats.norm.pdf(grid.q, mu, sigma))


def test_grid_validation():
    with pytest.raises(InvalidArgument):
        QuadGrid(0, 1, 50)
    with pytest.raises(InvalidArgument):
        QuadGrid(1, 1, 200)
    assert QuadGrid(-1, 1, 201).spacing == pytest.approx(0.01)


def test_wavefunction_orthonormality(backend):
    grid = QuadGrid(-14, 14, 4001)
    t = wavefunction_table(30, grid.q)
    gram = np.trapezoid(t[:, None, :] * t[None, :, :], dx=grid.spacing, axis=2)
    np.testing.assert_allclose(gram, np.eye(30), atol=1e-10)


def test_wavefunction_scalar_and_limits():
    assert oscillator_wavefunction(0, 0.0) == pytest.approx(math.pi ** -0.25)
    with pytest.raises(UnsupportedShape):
        oscillator_wavefunction(61, 0.0)
    with pytest.raises(InvalidArgument):
        oscillator_wavefunction(-1, 0.0)


def test_vacuum_pdf(backend):
    grid = QuadGrid()
    vac = DensityMatrix(np.diag([1.0] + [0.0] * 7))
    np.testing.assert_allclose(density_to_pdf(vac, grid).values, np.exp(-grid.q**2) / math.sqrt(math.pi), atol=1e-14)


def test_coherent_state_pdf_is_shifted_gaussian():
    grid, d, alpha = QuadGrid(), 40, 0.9
    psi = displace(alpha, d)[:, 0]
    pdf = density_to_pdf(DensityMatrix(np.outer(psi, psi.conj())), grid)
    ref = stats.norm.pdf(grid.q, math.sqrt(2) * alpha, math.sqrt(0.5))
    np.testing.assert_allclose(pdf.values, ref, atol=1e-9)


def test_encode_ground_state_density():
    grid = QuadGrid()
    enc = encode_pdf(gauss(grid, 0.0, math.sqrt(0.5)), 10)
    assert enc.captured_norm == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(enc.coeffs, np.eye(10)[0], atol=1e-10)


def test_encode_then_decode_recovers_pdf():
    grid = QuadGrid()
    target = gauss(grid, 0.4, 0.8).normalized()
    enc = encode_pdf(target, 20)
    back = density_to_pdf(enc.rho, grid).normalized()
    assert np.max(np.abs(back.values - target.values)) < 1e-3


def test_encode_rejects_poor_capture():
    grid = QuadGrid()
    with pytest.raises(CutoffInsufficient):
        encode_pdf(gauss(grid, 5.0, 0.2), 6)


def test_kl_gaussians_match_closed_form():
    grid = QuadGrid(-12, 12, 4001)
    m1, s1, m2, s2 = 0.3, 0.9, -0.2, 1.4
    ref = math.log(s2 / s1) + (s1**2 + (m1 - m2) ** 2) / (2 * s2**2) - 0.5
    assert kl_divergence(gauss(grid, m1, s1), gauss(grid, m2, s2)) == pytest.approx(ref, abs=1e-8)


def test_kl_self_is_zero_and_needs_same_grid():
    grid = QuadGrid()
    p = gauss(grid, 0, 1)
    assert kl_divergence(p, p) == 0.0
    with pytest.raises(InvalidArgument):
        kl_divergence(p, gauss(QuadGrid(-8, 8, 801), 0, 1))


def test_kde_matches_scipy_weighted():
    rng = np.random.default_rng(3)
    centers = np.arange(256.0)
    w = np.bincount(np.clip(rng.normal(96, 22, 5000).round(), 0, 255).astype(int), minlength=256).astype(float)
    grid = QuadGrid(-20, 300, 1601)
    ours = kde_smooth(centers, w, grid)
    nz = w > 0
    ref = stats.gaussian_kde(centers[nz], weights=w[nz])(grid.q)
    ref /= np.trapezoid(ref, dx=grid.spacing)
    np.testing.assert_allclose(ours.values, ref, atol=1e-10)


def test_kde_fixed_width_and_errors():
    grid = QuadGrid(-5, 5, 1001)
    p = kde_smooth([0.0], [1.0], grid, width=0.5)
    np.testing.assert_allclose(p.values, stats.norm.pdf(grid.q, 0, 0.5), atol=1e-6)
    with pytest.raises(InvalidArgument):
        kde_smooth([0.0], [1.0], grid)
    with pytest.raises(InvalidArgument):
        kde_smooth([0.0, 1.0], [0.0, 0.0], grid)


def test_rescale_support_preserves_mass():
    p = gauss(QuadGrid(0, 255, 1001), 100, 20)
    r = rescale_support(p, 0, 4)
    assert r.grid.q_max == pytest.approx(4.0)
    assert r.integral() == pytest.approx(p.integral())
    assert r.mean() == pytest.approx(100 * 4 / 255, rel=1e-6)


def test_restrict_renormalizes_window():
    grid = QuadGrid(-1, 6, 1401)
    p = gauss(grid, 0.0, 1.0)
    r = p.restrict(0, 6)
    assert r.grid.q_min == pytest.approx(0.0)
    assert r.integral() == pytest.approx(1.0)
    with pytest.raises(InvalidArgument):
        p.restrict(0, 0.1)


def test_pdf_csv_roundtrip_and_moments():
    grid = QuadGrid(-10, 10, 1001)
    p = gauss(grid, 0.5, 1.2)
    back = Pdf.from_csv(p.to_csv())
    np.testing.assert_array_equal(back.values, p.values)
    assert p.mean() == pytest.approx(0.5, abs=1e-6)
    assert p.std() == pytest.approx(1.2, abs=1e-4)


def test_pdf_rejects_negative():
    with pytest.raises(InvalidArgument):
        Pdf(QuadGrid(0, 1, 101), -np.ones(101))
