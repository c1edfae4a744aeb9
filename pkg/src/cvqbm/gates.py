"""Gaussian gate unitaries, the two-mode QITE block and the loss channel.

Single-mode generators are diagonalized once per cutoff and cached, so a gate
evaluation costs one eigenbasis change instead of a fresh matrix exponential.
For anti-Hermitian generators this is exact and keeps every truncated gate
unitary to machine precision.
"""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import InvalidArgument, SqueezingOutOfRange
from .fock import DensityMatrix, ladder_operators

SQUEEZE_LIMIT = 2.5
SQUEEZE_CLAMP = 2.0
DB_PER_NEPER = 20.0 * math.log10(math.e)


@dataclass(frozen=True)
class GateParams:
    """Parameters of one block ``R(chi) S(r) R(chi_prime) D(alpha) X(kappa)``."""

    chi: float = 0.0
    r: float = 0.0
    chi_prime: float = 0.0
    alpha: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        for name, value in zip(("chi", "r", "chi_prime", "alpha", "kappa"), astuple(self)):
            if not math.isfinite(value):
                raise InvalidArgument(f"gate parameter {name} must be finite")

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "GateParams":
        return cls(*(float(v) for v in values))


@dataclass(frozen=True)
class KrausChannel:
    operators: tuple
    transmissivity: float
    # coeffs[k, m]: amplitude of K_k |m+k> -> |m>; lets the loss kernel skip dense products
    coeffs: np.ndarray | None = None

    @property
    def cutoff(self) -> int:
        return self.operators[0].shape[0]


@lru_cache(maxsize=64)
def _eig_generator(kind, cutoff):
    a, a_dag, _ = ladder_operators(cutoff)
    if kind == "squeeze":
        gen = 0.5 * (a @ a - a_dag @ a_dag)
    elif kind == "displace":
        gen = a_dag - a
    elif kind == "x":
        w, v = np.linalg.eigh((a + a_dag) / math.sqrt(2.0))
        return w, v
    elif kind == "p":
        w, v = np.linalg.eigh(-1j * (a - a_dag) / math.sqrt(2.0))
        return w, v
    else:
        raise ValueError(kind)
    # gen is anti-Hermitian: exp(t gen) = V exp(-i t w) V^dag with i gen = V w V^dag
    w, v = np.linalg.eigh(1j * gen)
    return w, v


def _exp_generator(kind, t, cutoff):
    w, v = _eig_generator(kind, cutoff)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def rotation(chi, cutoff) -> np.ndarray:
    """R(chi) = exp(i chi n)."""
    if cutoff < 2:
        raise InvalidArgument("cutoff must be >= 2")
    return np.diag(np.exp(1j * chi * np.arange(cutoff)))


def squeeze(r, cutoff) -> np.ndarray:
    """S(r) = exp((r/2)(a^2 - a_dag^2)); r > 0 squeezes the q quadrature."""
    if abs(r) > SQUEEZE_LIMIT:
        raise SqueezingOutOfRange(f"|r| = {abs(r):.3f} exceeds {SQUEEZE_LIMIT}")
    return _exp_generator("squeeze", r, cutoff)


def displace(alpha, cutoff) -> np.ndarray:
    """D(alpha) = exp(alpha (a_dag - a)) for real alpha."""
    return _exp_generator("displace", alpha, cutoff)


def _cx_factors(cutoff):
    xi, v = _eig_generator("x", cutoff)
    eta, w = _eig_generator("p", cutoff)
    return xi, v, eta, w


def controlled_x(kappa, cutoff, pad=0) -> np.ndarray:
    """X(kappa) = exp(-i kappa x (x) p); the first mode is the control.

    With ``pad > 0`` the gate is built at ``cutoff + pad`` and truncated,
    trading exact unitarity for matrix elements closer to the untruncated
    operator.
    """
    dim = cutoff + pad
    xi, v, eta, w = _cx_factors(dim)
    basis = np.kron(v, w)
    phases = np.exp(-1j * kappa * np.outer(xi, eta)).ravel()
    full = (basis * phases) @ basis.conj().T
    return truncate_two_mode(full, dim, cutoff)


def truncate_two_mode(op, dim, cutoff) -> np.ndarray:
    if dim == cutoff:
        return op
    t = op.reshape(dim, dim, dim, dim)[:cutoff, :cutoff, :cutoff, :cutoff]
    return t.reshape(cutoff * cutoff, cutoff * cutoff)


def beam_splitter_5050(cutoff) -> np.ndarray:
    """exp(pi/4 (a_dag b - a b_dag)); maps |01> to (|01> + |10>)/sqrt(2)."""
    return _bs_5050_cached(cutoff).copy()


@lru_cache(maxsize=16)
def _bs_5050_cached(cutoff):
    a, a_dag, _ = ladder_operators(cutoff)
    eye = np.eye(cutoff)
    gen = np.kron(a_dag, eye) @ np.kron(eye, a) - np.kron(a, eye) @ np.kron(eye, a_dag)
    w, v = np.linalg.eigh(1j * gen)
    return (v * np.exp(-1j * (math.pi / 4) * w)) @ v.conj().T


def visible_unitary(params: GateParams, cutoff) -> np.ndarray:
    """The single-mode part ``R(chi) S(r) R(chi_prime) D(alpha)``."""
    n = np.arange(cutoff)
    rot = np.exp(1j * params.chi * n)
    rot_p = np.exp(1j * params.chi_prime * n)
    s = squeeze(params.r, cutoff)
    d = displace(params.alpha, cutoff)
    return (rot[:, None] * s * rot_p[None, :]) @ d


def qite_block(params: GateParams, cutoff, pad=0) -> np.ndarray:
    """Two-mode unitary on (visible, ancilla); X(kappa) acts first."""
    dim = cutoff + pad
    single = visible_unitary(params, dim)
    full = np.kron(single, np.eye(dim)) @ controlled_x(params.kappa, dim)
    return truncate_two_mode(full, dim, cutoff)


def step_operator(params: GateParams, cutoff, outcome=1, pad=0) -> np.ndarray:
    """Visible-mode operator ``<outcome|_A U(params) |0>_A``.

    Equal to slicing :func:`qite_block` at the same ``pad`` but only builds
    the needed ancilla matrix elements.
    """
    return step_operator_set(params, cutoff, (outcome,), pad)[0]


def step_operator_set(params: GateParams, cutoff, outcomes, pad=0) -> np.ndarray:
    """Stack of :func:`step_operator` for several ancilla outcomes, shape ``(k, cutoff, cutoff)``."""
    dim = cutoff + pad
    outcomes = np.asarray(outcomes, dtype=int)
    if np.any((outcomes < 0) | (outcomes >= dim)):
        raise InvalidArgument(f"outcome outside ancilla cutoff {dim}")
    xi, v, eta, w = _cx_factors(dim)
    weights = w[outcomes] * w[0].conj()  # (k, dim)
    diag = np.exp(-1j * params.kappa * np.outer(xi, eta)) @ weights.T  # (dim, k)
    left = (visible_unitary(params, dim) @ v)[:cutoff]
    right = v.conj().T[:, :cutoff]
    return np.einsum("ua,ak,ab->kub", left, diag, right)


def loss_coefficients(transmissivity, cutoff) -> np.ndarray:
    """``c[k, m]`` with ``K_k |m+k> = c[k, m] |m>``; zero where m+k >= cutoff."""
    t = float(transmissivity)
    c = np.zeros((cutoff, cutoff))
    for k in range(cutoff):
        m = np.arange(cutoff - k)
        log_fact = np.array([math.lgamma(mm + k + 1) - math.lgamma(mm + 1) for mm in m])
        if k == 0:
            base = np.ones_like(m, dtype=float)
        elif t == 1.0:
            continue
        else:
            base = np.exp(0.5 * (k * math.log1p(-t) - math.lgamma(k + 1) + log_fact))
        c[k, : cutoff - k] = base * t ** (0.5 * m)
    return c


def loss_channel(transmissivity, cutoff) -> KrausChannel:
    """Pure-loss channel a -> sqrt(T) a + sqrt(1-T) b with vacuum environment."""
    if not 0.0 <= transmissivity <= 1.0:
        raise InvalidArgument(f"transmissivity must lie in [0, 1], got {transmissivity}")
    coeffs = loss_coefficients(transmissivity, cutoff)
    ops = []
    for k in range(cutoff):
        op = np.zeros((cutoff, cutoff), dtype=np.complex128)
        m = np.arange(cutoff - k)
        op[m, m + k] = coeffs[k, : cutoff - k]
        ops.append(op)
    return KrausChannel(tuple(ops), float(transmissivity), coeffs)


def apply_channel(rho: DensityMatrix, ch: KrausChannel) -> DensityMatrix:
    if rho.cutoff != ch.cutoff:
        raise InvalidArgument(f"cutoff mismatch: state {rho.cutoff}, channel {ch.cutoff}")
    if ch.coeffs is not None:
        d = rho.cutoff
        out = kernels.loss_tensor(rho.matrix.reshape(d, 1, d, 1), ch.coeffs).reshape(d, d)
    else:
        out = sum(k @ rho.matrix @ k.conj().T for k in ch.operators)
    return DensityMatrix(out).normalized()


def squeezing_db(r) -> float:
    return DB_PER_NEPER * abs(r)


def squeezing_from_db(db) -> float:
    return db / DB_PER_NEPER
