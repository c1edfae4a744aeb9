import math

import numpy as np
import pytest
from scipy import stats

from cvqbm.config import bundled_path
from cvqbm.errors import InvalidArgument
from cvqbm.fock import is_density_matrix
from cvqbm.gadget import gadget_fidelity
from cvqbm.quadrature import QuadGrid, density_to_pdf
from cvqbm.targets import Rescale, TargetSpec, build_target, kl_window, quantum_state_vector

GRID = QuadGrid(-1, 6, 1401)


def test_squeezed_displaced_moments():
    psi = quantum_state_vector("squeezed-displaced", {"squeezing_db": 1.73, "alpha": 0.2}, 30)
    pdf = density_to_pdf(np.outer(psi, psi.conj()), QuadGrid()).normalized()
    r = 1.73 / (20 * math.log10(math.e))
    assert pdf.mean() == pytest.approx(math.sqrt(2) * 0.2, abs=1e-6)
    assert pdf.std() == pytest.approx(math.sqrt(0.5) * math.exp(-r), abs=1e-6)


def test_cat_is_even():
    psi = quantum_state_vector("cat", {"squeezing_db": 2.6, "alpha": 1.2}, 10)
    assert np.allclose(psi[1::2], 0, atol=1e-12)
    assert np.linalg.norm(psi) == pytest.approx(1.0)
    with pytest.raises(InvalidArgument):
        quantum_state_vector("odd-cat", {"squeezing_db": 1, "alpha": 1}, 10)


def test_quantum_target_uses_gadget():
    spec = TargetSpec("quantum-state", {"squeezing_db": 1.73, "alpha": 0.2}, state="squeezed-displaced")
    t = build_target(spec, QuadGrid(), 10)
    assert t.quantum and t.fidelity_fn is gadget_fidelity
    assert kl_window(t, QuadGrid()) == (-8.0, 8.0)


def test_classical_target_encodes_density():
    spec = TargetSpec("rayleigh", {"sigma": 1.0}, support=(0.0, 6.0))
    t = build_target(spec, GRID, 15)
    assert is_density_matrix(t.rho)
    assert t.info["captured_norm"] > 0.99
    np.testing.assert_allclose(t.pdf.values, stats.rayleigh.pdf(GRID.q) / np.trapezoid(stats.rayleigh.pdf(GRID.q), GRID.q), atol=1e-12)
    assert kl_window(t, GRID) == (0.0, 6.0)


def test_weibull_rescale_records_both_parameter_sets():
    spec = TargetSpec("weibull", {"lam": 161.2, "k": 5.4}, rescale=Rescale())
    t = build_target(spec, GRID, 15)
    assert t.info["params_rescaled"]["lam"] == pytest.approx(161.2 * 4 / 255)
    ref = stats.weibull_min.pdf(GRID.q, 5.4, scale=161.2 * 4 / 255)
    np.testing.assert_allclose(t.pdf.values, ref / np.trapezoid(ref, GRID.q), atol=1e-9)


def test_histogram_gaussian_fit_and_kde():
    src = str(bundled_path("forest-histogram").parent / "forest_histogram.csv")
    fit = build_target(TargetSpec("histogram", source=src), GRID, 12)
    mu, sigma = fit.info["fit"]["mu"], fit.info["fit"]["sigma"]
    assert mu == pytest.approx(fit.info["fit_raw"]["mu"] * 4 / 255)
    assert 1.3 < mu < 1.7 and 0.25 < sigma < 0.45
    kde = build_target(TargetSpec("histogram", source=src, smoothing="kde"), GRID, 12)
    assert kde.pdf.mean() == pytest.approx(fit.pdf.mean(), abs=0.02)


def test_rescale_maps_affinely():
    rs = Rescale((0, 255), (0, 4))
    assert rs.from_raw(255) == pytest.approx(4)
    assert rs.to_raw(rs.from_raw(17.0)) == pytest.approx(17.0)


def test_spec_validation():
    with pytest.raises(InvalidArgument):
        TargetSpec("lognormal")
    with pytest.raises(InvalidArgument):
        TargetSpec("gamma", support=(3, 1))
