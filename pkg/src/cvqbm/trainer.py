"""Fidelity objective, finite-difference gradients and the Adam training loop."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple

import numpy as np

from .engine import ForwardResult, QbmConfig, QiteParams, forward, sample_homodyne
from .errors import (
    DegeneratePostSelection,
    GradientUnavailable,
    InitializationFailed,
    InvalidArgument,
)
from .fock import DensityMatrix
from .gates import SQUEEZE_CLAMP
from .quadrature import Pdf, QuadGrid, density_to_pdf, kl_divergence

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
PURITY_TOL = 1e-12
EIGEN_NOISE = 64 * np.finfo(float).eps
INIT_RESTARTS = 5
FD_RETRIES = 3
R_COLUMN = 1


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    lr0: float = 0.05
    decay_steps: int = 100
    decay_rate: float = 0.96
    fd_step: float = 1e-4
    seed: int = 0
    init_scheme: str = "small-uniform"
    init_params: tuple | None = None
    success_floor: float | None = None
    success_weight: float = 1.0
    squeeze_clamp: float = SQUEEZE_CLAMP

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidArgument("epochs must be positive")
        if not self.lr0 > 0:
            raise InvalidArgument("lr0 must be positive")
        if not 0 < self.decay_rate <= 1:
            raise InvalidArgument("decay_rate must lie in (0, 1]")
        if self.decay_steps < 1:
            raise InvalidArgument("decay_steps must be positive")
        if not 1e-6 <= self.fd_step <= 1e-2:
            raise InvalidArgument("fd_step must lie in [1e-6, 1e-2]")
        if self.init_scheme not in ("small-uniform", "custom"):
            raise InvalidArgument(f"unknown init_scheme {self.init_scheme!r}")
        if self.init_scheme == "custom" and self.init_params is None:
            raise InvalidArgument("init_scheme 'custom' needs init_params")
        if self.success_floor is not None and not 0 <= self.success_floor <= 1:
            raise InvalidArgument("success_floor must lie in [0, 1]")
        if not self.success_weight > 0:
            raise InvalidArgument("success_weight must be positive")


@dataclass
class TrainResult:
    best_params: QiteParams
    fidelity_history: list
    success_history: list
    cost_history: list
    final_fidelity: float
    final_success_prob: float
    final_kl: float
    best_epoch: int
    seed: int
    qbm_config: dict
    train_config: dict

    def to_dict(self) -> dict:
        return {
            "best_params": self.best_params.to_list(),
            "fidelity_history": [float(x) for x in self.fidelity_history],
            "success_history": [float(x) for x in self.success_history],
            "cost_history": [float(x) for x in self.cost_history],
            "final_fidelity": float(self.final_fidelity),
            "final_success_prob": float(self.final_success_prob),
            "final_kl": None if math.isnan(self.final_kl) else float(self.final_kl),
            "best_epoch": self.best_epoch,
            "seed": self.seed,
            "qbm_config": self.qbm_config,
            "train_config": self.train_config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "TrainResult":
        rows = [[p[k] for k in QiteParams.FIELDS] for p in d["best_params"]]
        kl = d.get("final_kl")
        return cls(
            best_params=QiteParams(rows if rows else np.zeros((0, 5))),
            fidelity_history=list(d["fidelity_history"]),
            success_history=list(d["success_history"]),
            cost_history=list(d["cost_history"]),
            final_fidelity=d["final_fidelity"],
            final_success_prob=d["final_success_prob"],
            final_kl=float("nan") if kl is None else kl,
            best_epoch=d["best_epoch"],
            seed=d["seed"],
            qbm_config=d["qbm_config"],
            train_config=d["train_config"],
        )


def _purity(m) -> float:
    return float(np.real(np.vdot(m, m)))


def uhlmann_fidelity(rho_a: DensityMatrix, rho_b: DensityMatrix) -> float:
    """(Tr sqrt(sqrt(a) b sqrt(a)))^2 without the pure-state shortcut."""
    if rho_a.cutoff != rho_b.cutoff:
        raise InvalidArgument(f"cutoff mismatch: {rho_a.cutoff} vs {rho_b.cutoff}")
    # Tr sqrt(sqrt(a) b sqrt(a)) is the trace norm of sqrt(a) sqrt(b)
    sv = np.linalg.svd(_sqrt_psd(rho_a.matrix) @ _sqrt_psd(rho_b.matrix), compute_uv=False)
    return float(np.sum(sv) ** 2)


def _sqrt_psd(m):
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    # eigenvalues at round-off level would contribute sqrt(eps) ~ 1e-8 each
    w = np.where(w > EIGEN_NOISE * max(float(w.max()), 0.0), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho_a: DensityMatrix, rho_b: DensityMatrix) -> float:
    """Uhlmann fidelity; reduces to Tr(rho_a rho_b) when either input is pure."""
    if rho_a.cutoff != rho_b.cutoff:
        raise InvalidArgument(f"cutoff mismatch: {rho_a.cutoff} vs {rho_b.cutoff}")
    a, b = rho_a.matrix, rho_b.matrix
    if abs(_purity(a) - 1.0) < PURITY_TOL or abs(_purity(b) - 1.0) < PURITY_TOL:
        return float(np.real(np.vdot(a.conj().T, b)))
    return uhlmann_fidelity(rho_a, rho_b)


class Evaluation(NamedTuple):
    cost: float
    fidelity: float
    success_prob: float


@dataclass
class Objective:
    """Cost 1 - F(target, rho_v), plus an optional weighted squared hinge
    ``w * max(0, floor - p)**2`` on the success rate.

    ``forward_fn`` maps ``(QiteParams, QbmConfig)`` to a ForwardResult and
    ``fidelity_fn`` maps ``(target, rho_v)`` to a fidelity; both are
    swappable so noisy simulation and gadget readout reuse the same loop.
    """

    target: DensityMatrix
    cfg: QbmConfig
    success_floor: float | None = None
    success_weight: float = 1.0
    forward_fn: Callable[..., ForwardResult] = forward
    fidelity_fn: Callable[[DensityMatrix, DensityMatrix], float] = fidelity

    def evaluate(self, flat) -> Evaluation:
        params = QiteParams(np.asarray(flat).reshape(self.cfg.steps, 5))
        try:
            out = self.forward_fn(params, self.cfg)
        except DegeneratePostSelection as exc:
            exc.params = params
            raise
        fid = self.fidelity_fn(self.target, out.rho_v)
        c = 1.0 - fid
        if self.success_floor is not None:
            c += self.success_weight * max(0.0, self.success_floor - out.success_prob) ** 2
        return Evaluation(c, fid, out.success_prob)

    def __call__(self, flat) -> float:
        return self.evaluate(flat).cost


def cost(params: QiteParams, target: DensityMatrix, cfg: QbmConfig, success_floor=None, success_weight=1.0) -> float:
    return Objective(target, cfg, success_floor, success_weight)(params.flat())


def gradient(cost_fn, params, h=1e-4) -> np.ndarray:
    """Central differences; a probe that hits a degenerate post-selection is
    retried with h/10 up to three times."""
    x = np.asarray(params, dtype=np.float64).ravel()
    grad = np.empty_like(x)
    for i in range(x.size):
        step = h
        for _ in range(FD_RETRIES + 1):
            e = np.zeros_like(x)
            e[i] = step
            try:
                grad[i] = (cost_fn(x + e) - cost_fn(x - e)) / (2 * step)
                break
            except DegeneratePostSelection:
                step /= 10
        else:
            raise GradientUnavailable(i)
    return grad


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def learning_rate(iteration, cfg: TrainConfig) -> float:
    return cfg.lr0 * cfg.decay_rate ** (iteration / cfg.decay_steps)


def clamp_squeezing(flat, limit=SQUEEZE_CLAMP) -> np.ndarray:
    x = np.array(flat, dtype=np.float64).reshape(-1, 5)
    x[:, R_COLUMN] = np.clip(x[:, R_COLUMN], -limit, limit)
    return x.ravel()


def adam_step(params, grads, state: AdamState, iteration, cfg: TrainConfig):
    """One Adam update with an exponentially decaying learning rate.

    Returns ``(new_params, new_state)``; squeezing entries are clamped.
    """
    g = np.asarray(grads, dtype=np.float64)
    t = state.t + 1
    m = ADAM_BETA1 * state.m + (1 - ADAM_BETA1) * g
    v = ADAM_BETA2 * state.v + (1 - ADAM_BETA2) * g * g
    m_hat = m / (1 - ADAM_BETA1**t)
    v_hat = v / (1 - ADAM_BETA2**t)
    new = np.asarray(params, dtype=np.float64) - learning_rate(iteration, cfg) * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return clamp_squeezing(new, cfg.squeeze_clamp), AdamState(m, v, t)


def initial_params(steps, rng) -> np.ndarray:
    x = rng.uniform(-0.1, 0.1, size=(steps, 5))
    x[:, 4] = rng.uniform(0.05, 0.3, size=steps)
    return x.ravel()


def _improves(new: Evaluation, old: Evaluation, floor) -> bool:
    """Lower cost wins; with a success floor, iterates meeting it outrank those that do not."""
    if floor is not None:
        ok_new, ok_old = new.success_prob >= floor, old.success_prob >= floor
        if ok_new != ok_old:
            return ok_new
    return new.cost < old.cost


def train(
    target: DensityMatrix,
    qbm_cfg: QbmConfig,
    train_cfg: TrainConfig,
    *,
    target_pdf: Pdf | None = None,
    forward_fn=forward,
    fidelity_fn=fidelity,
    callback=None,
) -> TrainResult:
    """Minimize 1 - F with one Adam update per epoch.

    ``callback(epoch, evaluation)`` is invoked after every epoch when given.
    """
    obj = Objective(target, qbm_cfg, train_cfg.success_floor, train_cfg.success_weight, forward_fn, fidelity_fn)
    rng = np.random.default_rng(train_cfg.seed)
    x = None
    if train_cfg.init_scheme == "custom":
        x = np.asarray(train_cfg.init_params, dtype=float).ravel()
        if x.size != 5 * qbm_cfg.steps:
            raise InvalidArgument(f"init_params needs {5 * qbm_cfg.steps} values, got {x.size}")
        x = clamp_squeezing(x, train_cfg.squeeze_clamp)
        current = obj.evaluate(x)
    else:
        for _ in range(INIT_RESTARTS):
            trial = initial_params(qbm_cfg.steps, rng)
            try:
                current = obj.evaluate(trial)
            except DegeneratePostSelection:
                continue
            x = trial
            break
        if x is None:
            raise InitializationFailed(f"{INIT_RESTARTS} random initializations were degenerate")

    state = AdamState.zeros(x.size)
    fid_hist, succ_hist, cost_hist = [], [], []
    best_x, best_eval, best_epoch = x.copy(), current, 0
    for epoch in range(train_cfg.epochs):
        fid_hist.append(current.fidelity)
        succ_hist.append(current.success_prob)
        cost_hist.append(current.cost)
        if _improves(current, best_eval, train_cfg.success_floor):
            best_x, best_eval, best_epoch = x.copy(), current, epoch
        if callback is not None:
            callback(epoch, current)
        grad = gradient(obj, x, train_cfg.fd_step)
        x_new, state_new = adam_step(x, grad, state, epoch, train_cfg)
        try:
            ev = obj.evaluate(x_new)
        except DegeneratePostSelection:
            # keep the previous point; the next gradient is taken from there
            continue
        x, state, current = x_new, state_new, ev
    if _improves(current, best_eval, train_cfg.success_floor):
        best_x, best_eval, best_epoch = x.copy(), current, train_cfg.epochs

    best = QiteParams(best_x.reshape(qbm_cfg.steps, 5))
    kl = float("nan")
    if target_pdf is not None:
        rho = forward_fn(best, qbm_cfg).rho_v
        kl = kl_divergence(density_to_pdf(rho, target_pdf.grid).normalized(), target_pdf)
    return TrainResult(
        best_params=best,
        fidelity_history=fid_hist,
        success_history=succ_hist,
        cost_history=cost_hist,
        final_fidelity=best_eval.fidelity,
        final_success_prob=best_eval.success_prob,
        final_kl=kl,
        best_epoch=best_epoch,
        seed=train_cfg.seed,
        qbm_config=asdict(qbm_cfg),
        train_config=_train_config_dict(train_cfg),
    )


def _train_config_dict(cfg: TrainConfig) -> dict:
    d = asdict(cfg)
    if d["init_params"] is not None:
        d["init_params"] = [float(v) for v in d["init_params"]]
    return d


class Generated(NamedTuple):
    pdf: Pdf
    samples: np.ndarray
    kl: float


def generate(
    result: TrainResult,
    qbm_cfg: QbmConfig,
    grid: QuadGrid,
    n_samples,
    seed,
    target_pdf: Pdf | None = None,
    forward_fn=forward,
) -> Generated:
    """Run the trained machine: generated pdf on ``grid``, homodyne samples, KL."""
    rho = forward_fn(result.best_params, qbm_cfg).rho_v
    pdf = density_to_pdf(rho, grid).normalized()
    samples = sample_homodyne(rho, grid, n_samples, seed)
    kl = kl_divergence(pdf, target_pdf) if target_pdf is not None else float("nan")
    return Generated(pdf, samples, kl)
