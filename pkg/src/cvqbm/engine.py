"""Forward pass of the continuous-variable Boltzmann machine.

The visible and hidden qumodes start in the entangled thermal seed state.
Each QITE step attaches a vacuum ancilla, applies the trainable two-mode
block to (visible, ancilla), and post-selects the ancilla on a fixed photon
count. Tracing out the hidden mode leaves the visible density matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePostSelection, InvalidArgument
from .fock import DensityMatrix, FockVector, MIN_PROBABILITY, hermitian_matrix_function, partial_trace, project_mode
from .gates import GateParams, controlled_x, qite_block, squeeze, step_operator
from .quadrature import QuadGrid, density_to_pdf

MAX_STEPS = 8
MAX_THREE_MODE_CUTOFF = 17


@dataclass(frozen=True)
class QbmConfig:
    delta: float = 1.5
    steps: int = 1
    cutoff: int = 10
    post_select_outcome: int = 1
    init_mode: str = "exact"
    # ancilla/visible padding for the two-mode block, see gates.controlled_x
    pad: int = 4

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise InvalidArgument(f"delta must be positive, got {self.delta}")
        if not 0 <= self.steps <= MAX_STEPS:
            raise InvalidArgument(f"steps must lie in [0, {MAX_STEPS}], got {self.steps}")
        if not 6 <= self.cutoff <= 20:
            raise InvalidArgument(f"cutoff must lie in [6, 20], got {self.cutoff}")
        if not 0 <= self.post_select_outcome < self.cutoff:
            raise InvalidArgument("post_select_outcome must be a photon count below the cutoff")
        if self.init_mode not in ("exact", "circuit"):
            raise InvalidArgument(f"unknown init_mode {self.init_mode!r}")
        if self.pad < 0:
            raise InvalidArgument("pad must be non-negative")


class QiteParams:
    """Per-step gate parameters, stored as an ``(S, 5)`` float array."""

    FIELDS = ("chi", "r", "chi_prime", "alpha", "kappa")

    def __init__(self, values):
        arr = np.array(values, dtype=np.float64).reshape(-1, 5)
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument("QITE parameters must be finite")
        arr.setflags(write=False)
        self._values = arr

    @classmethod
    def from_steps(cls, steps) -> "QiteParams":
        return cls([s.as_array() for s in steps] if steps else np.zeros((0, 5)))

    @classmethod
    def zeros(cls, steps) -> "QiteParams":
        return cls(np.zeros((steps, 5)))

    @property
    def steps(self) -> int:
        return self._values.shape[0]

    def as_array(self) -> np.ndarray:
        return self._values.copy()

    def flat(self) -> np.ndarray:
        return self._values.ravel().copy()

    def step(self, s) -> GateParams:
        return GateParams.from_array(self._values[s])

    def __iter__(self):
        return (self.step(s) for s in range(self.steps))

    def __len__(self):
        return self.steps

    def to_list(self):
        return [dict(zip(self.FIELDS, map(float, row))) for row in self._values]

    def __repr__(self):
        return f"QiteParams({self._values.tolist()!r})"


@dataclass(frozen=True)
class ForwardResult:
    rho_v: DensityMatrix
    success_prob: float
    per_step_probs: tuple = field(default_factory=tuple)


def entangled_init_exact(delta, cutoff) -> FockVector:
    """sum_n e^{-delta n} |n>|n>, normalized within the cutoff."""
    if delta <= 0:
        raise InvalidArgument("delta must be positive")
    amps = np.zeros((cutoff, cutoff), dtype=np.complex128)
    n = np.arange(cutoff)
    amps[n, n] = np.exp(-delta * n)
    return FockVector(amps.ravel(), 2, cutoff).normalize()


def thermal_normalization(delta) -> float:
    return 1.0 / (1.0 - math.exp(-2.0 * delta))


def entangled_init_circuit(delta, cutoff, pad=8) -> FockVector:
    """Two squeezed vacua entangled by a position-controlled shift.

    The visible wavefunction is widened to exp(-delta q^2 / 2) and the
    hidden one narrowed to exp(-q^2 / (2 delta)), i.e. squeezing magnitude
    |log(delta)| / 2 on each; X(+1) then maps |q_v>|q_h> to |q_v>|q_h + q_v>.
    Approximates :func:`entangled_init_exact` for small delta. Built at
    ``cutoff + pad`` and truncated.
    """
    if not 0 < delta <= 1:
        raise InvalidArgument("the circuit construction targets delta in (0, 1]")
    dim = cutoff + pad
    r = 0.5 * math.log(delta)
    vac = np.zeros(dim, dtype=np.complex128)
    vac[0] = 1.0
    # r < 0 anti-squeezes q in the S(r) = exp(r/2 (a^2 - a_dag^2)) convention
    visible = squeeze(r, dim) @ vac
    hidden = squeeze(-r, dim) @ vac
    psi = controlled_x(1.0, dim) @ np.kron(visible, hidden)
    psi = psi.reshape(dim, dim)[:cutoff, :cutoff]
    return FockVector(psi.ravel(), 2, cutoff).normalize()


def initial_state(cfg: QbmConfig) -> FockVector:
    if cfg.init_mode == "circuit":
        return entangled_init_circuit(cfg.delta, cfg.cutoff)
    return entangled_init_exact(cfg.delta, cfg.cutoff)


def qite_step(state: FockVector, params: GateParams, cfg: QbmConfig):
    """One post-selected QITE step on a normalized (visible, hidden) state.

    The ancilla is attached as a third mode in vacuum, the block acts on
    (visible, ancilla), and the ancilla is projected on
    ``cfg.post_select_outcome``. Returns ``(new_state, step_probability)``.
    """
    d = cfg.cutoff
    if state.num_modes != 2 or state.cutoff != d:
        raise InvalidArgument("qite_step expects a two-mode state at the configured cutoff")
    if d > MAX_THREE_MODE_CUTOFF:
        raise InvalidArgument(f"three-mode stage limited to cutoff <= {MAX_THREE_MODE_CUTOFF}")
    three = np.zeros((d, d, d), dtype=np.complex128)
    three[:, :, 0] = state.tensor()
    block = qite_block(params, d, cfg.pad).reshape(d, d, d, d)  # (v', A', v, A)
    out = np.einsum("uavb,vhb->uha", block, three)
    return project_mode(FockVector.from_tensor(out), 2, cfg.post_select_outcome)


def step_operators(params: QiteParams, cfg: QbmConfig):
    return [step_operator(p, cfg.cutoff, cfg.post_select_outcome, cfg.pad) for p in params]


def forward(params: QiteParams, cfg: QbmConfig) -> ForwardResult:
    """Seed state, S post-selected steps, trace over the hidden mode.

    Uses the contracted visible operator ``<k|U|0>_A`` per step, which is
    the same linear map as :func:`qite_step` without materializing the
    three-mode state.
    """
    if params.steps != cfg.steps:
        raise InvalidArgument(f"expected {cfg.steps} parameter steps, got {params.steps}")
    psi = initial_state(cfg).tensor()
    probs = []
    for s, op in enumerate(step_operators(params, cfg), start=1):
        psi = op @ psi
        p = float(np.vdot(psi, psi).real)
        if p < MIN_PROBABILITY:
            raise DegeneratePostSelection(p, step=s, params=params)
        probs.append(min(p, 1.0))
        psi = psi / math.sqrt(p)
    rho_v = partial_trace(FockVector.from_tensor(psi), 0)
    return ForwardResult(rho_v, float(np.prod(probs)) if probs else 1.0, tuple(probs))


def effective_hamiltonian(rho_v: DensityMatrix) -> np.ndarray:
    """H = -log(rho_v), eigenvalues floored at 1e-12."""
    return -hermitian_matrix_function(rho_v.matrix, "log")


def sample_homodyne(rho_v: DensityMatrix, grid: QuadGrid, n_samples, seed) -> np.ndarray:
    """Inverse-CDF samples of the q-quadrature distribution of ``rho_v``.

    The density is linear between grid points, so the CDF is piecewise
    quadratic and is inverted exactly. ``seed`` may be an int or a
    ``numpy.random.Generator``.
    """
    if n_samples < 1:
        raise InvalidArgument("n_samples must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    v = density_to_pdf(rho_v, grid).values
    h = grid.spacing
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * h)])
    target = rng.random(n_samples) * cdf[-1]
    idx = np.clip(np.searchsorted(cdf, target, side="right") - 1, 0, grid.points - 2)
    f0 = v[idx]
    slope = (v[idx + 1] - f0) / h
    need = target - cdf[idx]
    # solve f0 t + slope t^2 / 2 = need on [0, h]
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.sqrt(np.maximum(f0 * f0 + 2.0 * slope * need, 0.0))
        t = np.where(np.abs(slope) > 1e-12, (root - f0) / slope, need / np.maximum(f0, 1e-300))
    return grid.q[idx] + np.clip(np.nan_to_num(t), 0.0, h)
