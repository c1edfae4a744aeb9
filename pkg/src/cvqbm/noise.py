"""Photon loss inside the machine and transmissivity sweeps."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import kernels
from .engine import ForwardResult, QbmConfig, QiteParams, initial_state
from .errors import CvqbmError, DegeneratePostSelection, InvalidArgument
from .fock import MIN_PROBABILITY, DensityMatrix
from .gates import loss_coefficients, step_operator_set

PLACEMENTS = ("visible-only", "all-modes")
MAX_NOISY_CUTOFF = 12
ANCILLA_WEIGHT_FLOOR = 1e-16


def _ancilla_povm(params, cfg: QbmConfig, transmissivity):
    """Weights and operators for detecting the outcome after a lossy ancilla.

    Losing k of o+k photons before the counter leaves o clicks with
    probability C(o+k, k) T^o (1-T)^k.
    """
    o = cfg.post_select_outcome
    ks = range(cfg.cutoff + cfg.pad - o) if transmissivity < 1.0 else range(1)
    weights = np.array([math.comb(o + k, k) * transmissivity**o * (1.0 - transmissivity) ** k for k in ks])
    keep = np.flatnonzero(weights >= ANCILLA_WEIGHT_FLOOR)
    ops = step_operator_set(params, cfg.cutoff, o + keep, cfg.pad)
    return weights[keep], ops


def _sandwich(ops, weights, rho):
    # sum_k w_k (T_k (x) I) rho (T_k (x) I)^dag on rho[v, h, v', h']
    left = np.tensordot(ops * weights[:, None, None], rho, axes=(2, 0))  # (k, u, h, b, j)
    return np.tensordot(left, ops.conj(), axes=([0, 3], [0, 2])).transpose(0, 1, 3, 2)


def _check(transmissivity, placement, cfg):
    if not 0.0 <= transmissivity <= 1.0:
        raise InvalidArgument(f"transmissivity must lie in [0, 1], got {transmissivity}")
    if placement not in PLACEMENTS:
        raise InvalidArgument(f"placement must be one of {PLACEMENTS}, got {placement!r}")
    if cfg.cutoff > MAX_NOISY_CUTOFF:
        raise InvalidArgument(f"noisy runs need cutoff <= {MAX_NOISY_CUTOFF}, got {cfg.cutoff}")


def noisy_forward(params: QiteParams, cfg: QbmConfig, transmissivity, placement="visible-only") -> ForwardResult:
    """Forward pass with a pure-loss channel on the visible mode after every step.

    The (visible, hidden) state is carried as a density tensor
    ``rho[v, h, v', h']``. Under ``all-modes`` the ancilla also suffers loss
    before detection; loss on the hidden mode is trace preserving and acts
    on a mode that is traced out, so it leaves ``rho_v`` unchanged and is
    not simulated.
    """
    _check(transmissivity, placement, cfg)
    if params.steps != cfg.steps:
        raise InvalidArgument(f"expected {cfg.steps} parameter steps, got {params.steps}")
    psi = initial_state(cfg).tensor()
    rho = np.einsum("ab,cd->abcd", psi, psi.conj())
    coeffs = loss_coefficients(transmissivity, cfg.cutoff)
    probs = []
    for s, p in enumerate(params, start=1):
        if placement == "all-modes":
            weights, ops = _ancilla_povm(p, cfg, transmissivity)
        else:
            weights, ops = np.ones(1), step_operator_set(p, cfg.cutoff, (cfg.post_select_outcome,), cfg.pad)
        new = _sandwich(ops, weights, rho)
        prob = float(np.einsum("ahah->", new).real)
        if prob < MIN_PROBABILITY:
            raise DegeneratePostSelection(prob, step=s, params=params)
        probs.append(min(prob, 1.0))
        rho = kernels.loss_tensor(new / prob, coeffs)
        rho /= np.einsum("ahah->", rho).real
    rho_v = np.einsum("ahbh->ab", rho)
    rho_v = 0.5 * (rho_v + rho_v.conj().T)
    return ForwardResult(DensityMatrix(rho_v).normalized(), float(np.prod(probs)) if probs else 1.0, tuple(probs))


def lossy_forward_fn(transmissivity, placement="visible-only"):
    """A ``forward``-compatible callable with the loss settings bound."""
    return partial(_bound_noisy_forward, transmissivity=transmissivity, placement=placement)


def _bound_noisy_forward(params, cfg, *, transmissivity, placement):
    return noisy_forward(params, cfg, transmissivity, placement)


@dataclass(frozen=True)
class NoiseSweepConfig:
    """Transmissivities to scan, seeds per value and where loss acts.

    ``base`` is the experiment (see :mod:`cvqbm.config`) trained at each point.
    """

    base: object
    T_values: tuple
    repeats: int = 5
    placement: str = "visible-only"
    workers: int = 1

    def __post_init__(self):
        values = tuple(float(t) for t in self.T_values)
        if not values:
            raise InvalidArgument("T_values must not be empty")
        if any(not 0.0 <= t <= 1.0 for t in values):
            raise InvalidArgument("every T value must lie in [0, 1]")
        if self.repeats < 1:
            raise InvalidArgument("repeats must be positive")
        if self.placement not in PLACEMENTS:
            raise InvalidArgument(f"placement must be one of {PLACEMENTS}")
        object.__setattr__(self, "T_values", values)


@dataclass(frozen=True)
class SweepRun:
    T: float
    seed: int
    fidelity: float
    kl: float
    success_prob: float
    error: str = ""


@dataclass(frozen=True)
class SweepRow:
    T: float
    runs: int
    failures: int
    mean_fidelity: float
    std_fidelity: float
    mean_kl: float
    std_kl: float
    mean_success_prob: float


@dataclass
class SweepResult:
    runs: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def runs_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["T", "seed", "fidelity", "kl", "success_prob", "error"])
        for r in self.runs:
            w.writerow([repr(r.T), r.seed, repr(r.fidelity), repr(r.kl), repr(r.success_prob), r.error])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(SweepRow.__dataclass_fields__)
        w.writerow(names)
        for row in self.rows:
            w.writerow([repr(getattr(row, n)) if isinstance(getattr(row, n), float) else getattr(row, n) for n in names])
        return buf.getvalue()


def read_runs_csv(text) -> list:
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        out.append(
            SweepRun(
                float(rec["T"]), int(rec["seed"]), float(rec["fidelity"]), float(rec["kl"]),
                float(rec["success_prob"]), rec.get("error", ""),
            )
        )
    return out


def _one_run(base, T, seed, placement) -> SweepRun:
    from .runner import run_experiment

    try:
        run = run_experiment(base, seed=seed, transmissivity=T, placement=placement)
    except CvqbmError as exc:
        return SweepRun(T, seed, math.nan, math.nan, math.nan, f"{type(exc).__name__}: {exc}")
    return SweepRun(T, seed, run.result.final_fidelity, run.kl, run.result.final_success_prob)


def aggregate(runs) -> list:
    rows = []
    for T in dict.fromkeys(r.T for r in runs):
        group = [r for r in runs if r.T == T]
        ok = [r for r in group if not r.error]
        fid = np.array([r.fidelity for r in ok])
        kl = np.array([r.kl for r in ok])
        succ = np.array([r.success_prob for r in ok])
        stat = (lambda a, f: float(f(a)) if a.size else math.nan)
        rows.append(
            SweepRow(
                T, len(group), len(group) - len(ok),
                stat(fid, np.mean), stat(fid, np.std), stat(kl, np.mean), stat(kl, np.std), stat(succ, np.mean),
            )
        )
    return rows


def sweep(config: NoiseSweepConfig, progress=None) -> SweepResult:
    """Train ``repeats`` seeds at every T; failed runs are recorded, not raised.

    Seeds are ``base seed + i``. ``progress(row)`` is called once per T.
    """
    base_seed = config.base.train.seed
    jobs = [(T, base_seed + i) for T in config.T_values for i in range(config.repeats)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            futures = [pool.submit(_one_run, config.base, T, s, config.placement) for T, s in jobs]
            runs = [f.result() for f in futures]
    else:
        runs = [_one_run(config.base, T, s, config.placement) for T, s in jobs]
    rows = aggregate(runs)
    if progress is not None:
        for row in rows:
            progress(row)
    return SweepResult(runs, rows)
