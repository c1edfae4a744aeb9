"""Controlled-swap interferometer that reads out |<phi|psi>|^2.

Two control qumodes start in |0>|1> and pass through a 50:50 beam splitter,
the first control drives a swap of the data modes, and a second beam
splitter recombines the controls. Photon counting on the first control gives
P1 - P0 = |<phi|psi>|^2. One photon in total never leaves the controls'
{|0>, |1>} subspace, so each control is stored with dimension 2.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgument
from .fock import DensityMatrix, FockVector
from .gates import beam_splitter_5050

CONTROL_DIM = 2


@dataclass(frozen=True)
class GadgetResult:
    p0: float
    p1: float
    overlap_estimate: float
    shots: int = 0


@lru_cache(maxsize=16)
def _cswap_cached(dim_control, state_dim):
    d = state_dim
    swap = np.zeros((d * d, d * d))
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    swap[(j * d + i).ravel(), (i * d + j).ravel()] = 1.0
    keep = np.eye(dim_control)
    keep[1, 1] = 0.0  # control levels other than |1> (|>=2> is unreachable) leave data alone
    one = np.zeros((dim_control, dim_control))
    one[1, 1] = 1.0
    return np.kron(keep, np.eye(d * d)) + np.kron(one, swap)


def cswap(dim_control, state_dim) -> np.ndarray:
    """|0><0| (x) I + |1><1| (x) SWAP on (control, data_a, data_b)."""
    if dim_control < 2:
        raise InvalidArgument("control needs at least two levels")
    return _cswap_cached(dim_control, state_dim).copy()


def _amplitudes(state, cutoff=None):
    if isinstance(state, FockVector):
        if state.num_modes != 1:
            raise InvalidArgument("gadget inputs must be single-mode states")
        return state.amplitudes
    return np.asarray(state, dtype=np.complex128).ravel()


def _control_populations(psi, phi):
    d = psi.size
    bs = beam_splitter_5050(CONTROL_DIM).reshape(2, 2, 2, 2)
    sw = _cswap_cached(CONTROL_DIM, d)
    state = np.zeros((2, 2, d, d), dtype=np.complex128)  # (c1, c2, target, machine)
    state[0, 1] = np.outer(psi, phi)
    state = np.einsum("abce,cexy->abxy", bs, state)
    # CSWAP acts on (c1, target, machine) with c2 as spectator
    moved = state.transpose(0, 2, 3, 1).reshape(2 * d * d, 2)
    state = (sw @ moved).reshape(2, d, d, 2).transpose(0, 3, 1, 2)
    state = np.einsum("abce,cexy->abxy", bs, state)
    pops = np.sum(np.abs(state) ** 2, axis=(1, 2, 3))
    return float(pops[0]), float(pops[1])


def overlap_exact(psi, phi) -> GadgetResult:
    """Exact control statistics for target ``psi`` and machine output ``phi``."""
    a = _amplitudes(psi)
    b = _amplitudes(phi)
    if a.size != b.size:
        raise InvalidArgument(f"cutoff mismatch: {a.size} vs {b.size}")
    p0, p1 = _control_populations(a, b)
    return GadgetResult(p0, p1, p1 - p0, 0)


def overlap_mixed(psi, rho: DensityMatrix) -> GadgetResult:
    """Gadget statistics when the machine output is mixed.

    The control populations are linear in the machine state, so they are the
    eigenvalue-weighted sums over the eigenvectors of ``rho``.
    """
    a = _amplitudes(psi)
    if a.size != rho.cutoff:
        raise InvalidArgument(f"cutoff mismatch: {a.size} vs {rho.cutoff}")
    w, v = np.linalg.eigh(rho.matrix)
    p0 = p1 = 0.0
    for lam, vec in zip(w, v.T):
        if lam <= 1e-15:
            continue
        q0, q1 = _control_populations(a, vec)
        p0 += lam * q0
        p1 += lam * q1
    return GadgetResult(p0, p1, p1 - p0, 0)


def gadget_fidelity(target: DensityMatrix, rho: DensityMatrix) -> float:
    """Fidelity of a pure target with ``rho`` as read out by the gadget."""
    w, v = np.linalg.eigh(target.matrix)
    return overlap_mixed(v[:, -1], rho).overlap_estimate


def overlap_sampled(psi, phi, shots, seed) -> GadgetResult:
    """Shot-noise estimate: count photons in the first control ``shots`` times."""
    if shots < 1:
        raise InvalidArgument("shots must be >= 1")
    exact = overlap_exact(psi, phi)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p1 = min(max(exact.p1 / (exact.p0 + exact.p1), 0.0), 1.0)
    ones = int(rng.binomial(shots, p1))
    f1 = ones / shots
    f0 = 1.0 - f1
    return GadgetResult(f0, f1, f1 - f0, shots)
