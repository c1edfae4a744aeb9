import json
import math

import numpy as np
import pytest
import scipy.linalg

from conftest import random_mixed, random_pure
from cvqbm.engine import QbmConfig, QiteParams, forward
from cvqbm.errors import GradientUnavailable, DegeneratePostSelection, InvalidArgument
from cvqbm.fock import DensityMatrix
from cvqbm.gates import displace, squeeze
from cvqbm.quadrature import QuadGrid
from cvqbm.trainer import (
    AdamState,
    Objective,
    TrainConfig,
    TrainResult,
    adam_step,
    clamp_squeezing,
    cost,
    fidelity,
    generate,
    gradient,
    initial_params,
    learning_rate,
    train,
    uhlmann_fidelity,
)


def sqrtm_fidelity(a, b):
    s = scipy.linalg.sqrtm(a)
    return np.real(np.trace(scipy.linalg.sqrtm(s @ b @ s))) ** 2


def test_uhlmann_matches_sqrtm(rng):
    for _ in range(5):
        a, b = random_mixed(rng, 6), random_mixed(rng, 6)
        assert uhlmann_fidelity(DensityMatrix(a), DensityMatrix(b)) == pytest.approx(sqrtm_fidelity(a, b), abs=1e-8)


def test_pure_shortcut_agrees_with_uhlmann(rng):
    psi = random_pure(rng, 7)
    pure = DensityMatrix(np.outer(psi, psi.conj()))
    mixed = DensityMatrix(random_mixed(rng, 7))
    assert fidelity(pure, mixed) == pytest.approx(uhlmann_fidelity(pure, mixed), abs=1e-9)
    assert fidelity(mixed, pure) == pytest.approx(np.real(psi.conj() @ mixed.matrix @ psi), abs=1e-12)


def test_learning_rate_schedule():
    cfg = TrainConfig(lr0=0.05, decay_steps=100, decay_rate=0.96)
    assert learning_rate(0, cfg) == 0.05
    assert learning_rate(100, cfg) == pytest.approx(0.048)
    assert learning_rate(50, cfg) == pytest.approx(0.05 * 0.96**0.5)


def test_adam_first_step_moves_by_lr():
    cfg = TrainConfig(lr0=0.1)
    g = np.array([3.0, -0.5, 0, 0, 1e-3])
    new, state = adam_step(np.zeros(5), g, AdamState.zeros(5), 0, cfg)
    # bias-corrected first step is lr * sign(g) up to eps
    np.testing.assert_allclose(new, -0.1 * np.sign(g) * np.abs(g) / (np.abs(g) + 1e-8), atol=1e-12)
    assert state.t == 1


def test_adam_matches_hand_rolled_recursion(rng):
    cfg = TrainConfig(lr0=0.02, decay_steps=10, decay_rate=0.5)
    x = rng.normal(size=5) * 0.1
    m = v = np.zeros(5)
    ref = x.copy()
    state = AdamState.zeros(5)
    for it in range(6):
        g = rng.normal(size=5)
        x, state = adam_step(x, g, state, it, cfg)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        lr = 0.02 * 0.5 ** (it / 10)
        ref = ref - lr * (m / (1 - 0.9 ** (it + 1))) / (np.sqrt(v / (1 - 0.999 ** (it + 1))) + 1e-8)
    np.testing.assert_allclose(x, ref, atol=1e-14)


def test_squeezing_clamp():
    x = clamp_squeezing([0, 3.0, 0, 0, 0, 0, -5.0, 0, 0, 9.0])
    assert x[1] == 2.0 and x[6] == -2.0 and x[9] == 9.0


def test_gradient_of_quadratic():
    a = np.diag([1.0, 2.0, 3.0])
    g = gradient(lambda x: 0.5 * x @ a @ x + x[0] ** 3, np.array([0.3, -0.2, 0.1]), 1e-4)
    np.testing.assert_allclose(g, [0.3 + 3 * 0.09, -0.4, 0.3], atol=1e-7)


def test_gradient_retries_then_gives_up():
    calls = []

    def flaky(x):
        calls.append(x[0])
        if abs(x[0]) > 1e-5:
            raise DegeneratePostSelection(0.0)
        return x[0] ** 2

    assert gradient(flaky, np.zeros(1), 1e-4)[0] == pytest.approx(0.0)

    def dead(x):
        raise DegeneratePostSelection(0.0)

    with pytest.raises(GradientUnavailable):
        gradient(dead, np.zeros(2), 1e-4)


def test_initial_params_ranges():
    x = initial_params(3, np.random.default_rng(0)).reshape(3, 5)
    assert np.all(np.abs(x[:, :4]) <= 0.1)
    assert np.all((x[:, 4] >= 0.05) & (x[:, 4] <= 0.3))


def test_cost_success_penalty():
    cfg = QbmConfig(delta=1.0, steps=1, cutoff=8, post_select_outcome=0)
    p = QiteParams([[0.1, 0.2, 0.0, 0.1, 1.0]])
    target = forward(p, cfg).rho_v
    succ = forward(p, cfg).success_prob
    assert cost(p, target, cfg) == pytest.approx(0.0, abs=1e-9)
    floor = min(1.0, succ + 0.1)
    assert cost(p, target, cfg, floor, 4.0) == pytest.approx(4.0 * (floor - succ) ** 2, abs=1e-9)


def _squeezed_target(d):
    psi = displace(0.2, d) @ squeeze(0.2, d)[:, 0]
    psi /= np.linalg.norm(psi)
    return DensityMatrix(np.outer(psi, psi.conj()))


def test_training_improves_and_is_deterministic():
    cfg = QbmConfig(delta=1.5, steps=1, cutoff=8, post_select_outcome=0, pad=8)
    target = _squeezed_target(8)
    tc = TrainConfig(epochs=25, seed=3)
    seen = []
    a = train(target, cfg, tc, callback=lambda e, ev: seen.append(e))
    b = train(target, cfg, tc)
    assert seen == list(range(25))
    assert len(a.fidelity_history) == 25
    assert a.final_fidelity >= max(a.fidelity_history)
    assert a.final_fidelity > a.fidelity_history[0] + 0.05
    np.testing.assert_array_equal(a.best_params.flat(), b.best_params.flat())
    assert a.final_fidelity == pytest.approx(fidelity(target, forward(a.best_params, cfg).rho_v), abs=1e-12)


def test_custom_init_and_validation():
    cfg = QbmConfig(steps=1, cutoff=8, post_select_outcome=0)
    init = (0.0, 0.1, 0.0, 0.0, 0.5)
    res = train(_squeezed_target(8), cfg, TrainConfig(epochs=1, init_scheme="custom", init_params=init))
    assert res.fidelity_history[0] == pytest.approx(fidelity(_squeezed_target(8), forward(QiteParams([init]), cfg).rho_v))
    with pytest.raises(InvalidArgument):
        train(_squeezed_target(8), cfg, TrainConfig(epochs=1, init_scheme="custom", init_params=(0.0,) * 4))
    for bad in (dict(epochs=0), dict(fd_step=1.0), dict(init_scheme="custom"), dict(success_floor=2.0), dict(decay_rate=0)):
        with pytest.raises(InvalidArgument):
            TrainConfig(**bad)


def test_result_roundtrip_and_generate():
    cfg = QbmConfig(steps=1, cutoff=8, post_select_outcome=0)
    res = train(_squeezed_target(8), cfg, TrainConfig(epochs=3))
    back = TrainResult.from_dict(json.loads(res.to_json()))
    np.testing.assert_array_equal(back.best_params.flat(), res.best_params.flat())
    assert back.final_fidelity == res.final_fidelity
    assert json.loads(res.to_json())["final_kl"] is None
    gen = generate(res, cfg, QuadGrid(), 50, 0)
    assert gen.samples.shape == (50,)
    assert gen.pdf.integral() == pytest.approx(1.0)
    assert math.isnan(gen.kl)


def test_objective_reports_success():
    cfg = QbmConfig(steps=1, cutoff=8, post_select_outcome=0)
    obj = Objective(_squeezed_target(8), cfg)
    ev = obj.evaluate(np.array([0, 0, 0, 0, 0.5]))
    assert 0 < ev.success_prob <= 1
    assert ev.cost == pytest.approx(1 - ev.fidelity)
