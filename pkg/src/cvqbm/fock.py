"""Dense linear algebra over truncated Fock spaces.

Multi-mode amplitudes are stored flat with mode 0 as the most significant
base-``cutoff`` digit, which is exactly ``np.kron`` ordering. Every module in
the package relies on that convention.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegeneratePostSelection, InvalidArgument, UnsupportedShape

HERMITIAN_TOL = 1e-9
LOG_EIGEN_FLOOR = 1e-12
MIN_PROBABILITY = 1e-14


@dataclass(frozen=True)
class FockVector:
    """Pure state of ``num_modes`` qumodes truncated at ``cutoff`` levels each."""

    amplitudes: np.ndarray
    num_modes: int
    cutoff: int

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if self.num_modes < 1 or self.cutoff < 1:
            raise InvalidArgument("num_modes and cutoff must be positive")
        if amps.size != self.cutoff**self.num_modes:
            raise InvalidArgument(
                f"expected {self.cutoff**self.num_modes} amplitudes, got {amps.size}"
            )
        if not np.all(np.isfinite(amps)):
            raise InvalidArgument("amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, photons, cutoff) -> "FockVector":
        """Product Fock state ``|n_0, n_1, ...>``."""
        photons = tuple(int(n) for n in photons)
        amps = np.zeros(cutoff ** len(photons), dtype=np.complex128)
        amps[np.ravel_multi_index(photons, (cutoff,) * len(photons))] = 1.0
        return cls(amps, len(photons), cutoff)

    @classmethod
    def from_tensor(cls, tensor) -> "FockVector":
        tensor = np.asarray(tensor)
        return cls(tensor.ravel(), tensor.ndim, tensor.shape[0])

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((self.cutoff,) * self.num_modes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "FockVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise InvalidArgument("cannot normalize the zero vector")
        return FockVector(self.amplitudes / nrm, self.num_modes, self.cutoff)


@dataclass(frozen=True)
class DensityMatrix:
    """Single-qumode density matrix in the Fock basis."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidArgument(f"density matrix must be square, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidArgument("density matrix entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_vector(cls, psi) -> "DensityMatrix":
        psi = psi.amplitudes if isinstance(psi, FockVector) else np.asarray(psi)
        return cls(np.outer(psi, psi.conj()))

    @property
    def cutoff(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> "DensityMatrix":
        tr = self.trace()
        if tr <= 0.0:
            raise InvalidArgument("density matrix has non-positive trace")
        return DensityMatrix(self.matrix / tr)

    def expectation(self, op) -> complex:
        return complex(np.trace(self.matrix @ op))


def _as_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2:
        raise InvalidArgument(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidArgument("matrix entries must be finite")
    return m


def ladder_operators(cutoff):
    """Return ``(a, a_dag, n)`` truncated to ``cutoff`` levels."""
    if cutoff < 2:
        raise InvalidArgument(f"cutoff must be >= 2, got {cutoff}")
    a = np.diag(np.sqrt(np.arange(1, cutoff, dtype=np.float64)), 1).astype(np.complex128)
    a_dag = a.conj().T
    return a, a_dag, a_dag @ a


def matrix_exponential(m) -> np.ndarray:
    """exp(m) by Pade scaling-and-squaring (scipy's ``expm``)."""
    m = _as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise InvalidArgument(f"matrix exponential needs a square matrix, got {m.shape}")
    return scipy.linalg.expm(m)


def tensor_product(a, b) -> np.ndarray:
    return np.kron(a, b)


def partial_trace(state, keep_mode) -> DensityMatrix:
    """Reduce a two-mode pure state or density matrix to one mode.

    ``state`` may be a :class:`FockVector` or a ``d**2 x d**2`` density matrix.
    The result is normalized to unit trace.
    """
    if keep_mode not in (0, 1):
        raise UnsupportedShape(f"keep_mode must be 0 or 1, got {keep_mode}")
    if isinstance(state, FockVector):
        if state.num_modes != 2:
            raise UnsupportedShape(f"partial_trace needs 2 modes, got {state.num_modes}")
        psi = state.tensor()
        if keep_mode == 1:
            psi = psi.T
        rho = psi @ psi.conj().T
    else:
        rho2 = _as_matrix(state)
        d = int(round(np.sqrt(rho2.shape[0])))
        if d * d != rho2.shape[0] or rho2.shape[0] != rho2.shape[1]:
            raise UnsupportedShape(f"not a two-mode density matrix: {rho2.shape}")
        t = rho2.reshape(d, d, d, d)
        rho = np.einsum("ikjk->ij", t) if keep_mode == 0 else np.einsum("kikj->ij", t)
    return DensityMatrix(rho).normalized()


def project_mode(state: FockVector, mode, outcome):
    """Project ``mode`` onto ``|outcome>`` and drop it.

    Returns ``(reduced, probability)`` with ``reduced`` renormalized.
    """
    if not 0 <= mode < state.num_modes:
        raise InvalidArgument(f"mode {mode} out of range")
    if not 0 <= outcome < state.cutoff:
        raise InvalidArgument(f"outcome {outcome} outside cutoff {state.cutoff}")
    slab = np.take(state.tensor(), outcome, axis=mode)
    prob = float(np.vdot(slab, slab).real)
    if prob < MIN_PROBABILITY:
        raise DegeneratePostSelection(prob)
    reduced = FockVector(slab.ravel() / np.sqrt(prob), state.num_modes - 1, state.cutoff)
    return reduced, min(prob, 1.0)


def hermitian_matrix_function(m, f) -> np.ndarray:
    """Apply ``sqrt`` or ``log`` to a Hermitian matrix through its eigenbasis.

    Negative round-off eigenvalues are clipped to zero for ``sqrt``; ``log``
    floors the spectrum at 1e-12 so rank-deficient inputs stay finite.
    """
    m = _as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise InvalidArgument("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL * scale:
        raise InvalidArgument("matrix is not Hermitian")
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    if f == "sqrt":
        fw = np.sqrt(np.clip(w, 0.0, None))
    elif f == "log":
        fw = np.log(np.maximum(w, LOG_EIGEN_FLOOR))
    else:
        raise InvalidArgument(f"unknown matrix function {f!r}")
    out = (v * fw) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def is_density_matrix(rho, atol=1e-9) -> bool:
    """Hermitian, PSD and unit trace to ``atol``."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if np.max(np.abs(m - m.conj().T)) > atol:
        return False
    if abs(np.trace(m).real - 1.0) > atol:
        return False
    return bool(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() >= -atol)
