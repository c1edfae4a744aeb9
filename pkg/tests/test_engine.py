import math

import numpy as np
import pytest
import scipy.linalg
from scipy import stats

from cvqbm.engine import (
    QbmConfig,
    QiteParams,
    effective_hamiltonian,
    entangled_init_circuit,
    entangled_init_exact,
    forward,
    initial_state,
    qite_step,
    sample_homodyne,
)
from cvqbm.errors import DegeneratePostSelection, InvalidArgument
from cvqbm.fock import DensityMatrix, ladder_operators
from cvqbm.quadrature import QuadGrid, density_to_pdf

PARAMS = [[0.2, 0.35, -0.4, 0.3, 1.4], [-0.1, -0.2, 0.5, -0.15, 0.9]]


def block_oracle(p, d, pad):
    """R S R' D acting after X on (visible, ancilla), all from scipy expm, truncated to d."""
    D = d + pad
    a, ad, n = ladder_operators(D)
    x, pq = (a + ad) / math.sqrt(2), -1j * (a - ad) / math.sqrt(2)
    chi, r, chi2, alpha, kappa = p
    single = (
        scipy.linalg.expm(1j * chi * n)
        @ scipy.linalg.expm(r / 2 * (a @ a - ad @ ad))
        @ scipy.linalg.expm(1j * chi2 * n)
        @ scipy.linalg.expm(alpha * (ad - a))
    )
    full = np.kron(single, np.eye(D)) @ scipy.linalg.expm(-1j * kappa * np.kron(x, pq))
    return full.reshape(D, D, D, D)[:d, :d, :d, :d]


def forward_oracle(params, cfg):
    """Explicit three-mode (visible, hidden, ancilla) state vector simulation."""
    d = cfg.cutoff
    n = np.arange(d)
    psi = np.diag(np.exp(-cfg.delta * n)).astype(complex)
    psi /= np.linalg.norm(psi)
    probs = []
    for p in params:
        u = block_oracle(p, d, cfg.pad).reshape(d * d, d * d)  # (v a, v a)
        three = np.kron(psi.reshape(d * d), np.eye(d)[0]).reshape(d, d, d)  # v, h, a
        moved = three.transpose(0, 2, 1).reshape(d * d, d)  # (v a), h
        out = (u @ moved).reshape(d, d, d).transpose(0, 2, 1)  # v, h, a
        psi = out[:, :, cfg.post_select_outcome]
        prob = np.vdot(psi, psi).real
        probs.append(prob)
        psi = psi / math.sqrt(prob)
    return psi @ psi.conj().T, probs


@pytest.mark.parametrize("outcome", [0, 1])
def test_forward_matches_three_mode_simulation(outcome):
    cfg = QbmConfig(delta=1.2, steps=2, cutoff=8, post_select_outcome=outcome, pad=3)
    res = forward(QiteParams(PARAMS), cfg)
    rho, probs = forward_oracle(PARAMS, cfg)
    np.testing.assert_allclose(res.rho_v.matrix, rho, atol=1e-9)
    np.testing.assert_allclose(res.per_step_probs, probs, rtol=1e-9)
    assert res.success_prob == pytest.approx(np.prod(probs), rel=1e-12)


def test_qite_step_agrees_with_forward():
    cfg = QbmConfig(delta=1.0, steps=1, cutoff=7, post_select_outcome=0, pad=2)
    p = QiteParams(PARAMS[:1])
    state, prob = qite_step(initial_state(cfg), p.step(0), cfg)
    res = forward(p, cfg)
    assert prob == pytest.approx(res.success_prob, rel=1e-12)
    t = state.tensor()
    np.testing.assert_allclose(t @ t.conj().T, res.rho_v.matrix, atol=1e-12)


@pytest.mark.parametrize("delta", [0.5, 1.5, 2.5])
def test_zero_steps_give_thermal_spectrum(delta):
    cfg = QbmConfig(delta=delta, steps=0, cutoff=20)
    rho = forward(QiteParams.zeros(0), cfg).rho_v.matrix
    n = np.arange(20)
    np.testing.assert_allclose(rho, np.diag(np.exp(-2 * delta * n) * (1 - math.exp(-2 * delta))), atol=1e-8)


def test_effective_hamiltonian_of_thermal_state():
    cfg = QbmConfig(delta=0.8, steps=0, cutoff=12)
    h = effective_hamiltonian(forward(QiteParams.zeros(0), cfg).rho_v)
    diag = np.diag(h).real
    np.testing.assert_allclose(np.diff(diag), 1.6, atol=1e-9)


def test_circuit_seed_approximates_exact_seed():
    a = entangled_init_circuit(0.1, 12).amplitudes
    b = entangled_init_exact(0.1, 12).amplitudes
    assert abs(np.vdot(a, b)) ** 2 >= 0.98


def test_circuit_seed_range():
    with pytest.raises(InvalidArgument):
        entangled_init_circuit(1.5, 10)


def test_degenerate_post_selection_is_reported():
    cfg = QbmConfig(steps=1, cutoff=8, post_select_outcome=1)
    with pytest.raises(DegeneratePostSelection) as err:
        forward(QiteParams([[0, 0, 0, 0, 0.0]]), cfg)
    assert err.value.step == 1


def test_config_validation():
    for bad in (dict(delta=0), dict(cutoff=5), dict(steps=9), dict(post_select_outcome=10), dict(init_mode="x"), dict(pad=-1)):
        with pytest.raises(InvalidArgument):
            QbmConfig(**bad)
    with pytest.raises(InvalidArgument):
        forward(QiteParams.zeros(2), QbmConfig(steps=1))


def test_params_layout():
    p = QiteParams(PARAMS)
    assert p.steps == 2 and len(p) == 2
    assert p.step(1).kappa == 0.9
    assert p.to_list()[0]["r"] == 0.35
    np.testing.assert_array_equal(p.flat(), np.ravel(PARAMS))


def test_homodyne_samples_follow_pdf():
    grid = QuadGrid(-8, 8, 1601)
    cfg = QbmConfig(delta=1.0, steps=1, cutoff=10, post_select_outcome=0)
    rho = forward(QiteParams(PARAMS[:1]), cfg).rho_v
    pdf = density_to_pdf(rho, grid).normalized()
    samples = sample_homodyne(rho, grid, 4000, 7)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf.values[1:] + pdf.values[:-1]) * grid.spacing)])
    ks = stats.kstest(samples, lambda s: np.interp(s, grid.q, cdf))
    assert ks.pvalue > 1e-3
    np.testing.assert_array_equal(samples, sample_homodyne(rho, grid, 4000, 7))


def test_homodyne_needs_samples():
    with pytest.raises(InvalidArgument):
        sample_homodyne(DensityMatrix(np.eye(6) / 6), QuadGrid(), 0, 1)
