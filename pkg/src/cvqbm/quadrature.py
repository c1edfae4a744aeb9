"""Oscillator wavefunctions, position-space PDFs and their Fock encoding."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import CutoffInsufficient, InvalidArgument, UnsupportedShape
from .fock import DensityMatrix

MAX_WAVEFUNCTION_INDEX = 60
KL_FLOOR = 1e-12


@dataclass(frozen=True)
class QuadGrid:
    q_min: float = -8.0
    q_max: float = 8.0
    points: int = 1601

    def __post_init__(self):
        if self.points < 101:
            raise InvalidArgument(f"grid needs at least 101 points, got {self.points}")
        if not self.q_max > self.q_min:
            raise InvalidArgument("grid requires q_max > q_min")

    @property
    def q(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.points)

    @property
    def spacing(self) -> float:
        return (self.q_max - self.q_min) / (self.points - 1)


@dataclass(frozen=True)
class Pdf:
    grid: QuadGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.points,):
            raise InvalidArgument(f"expected {self.grid.points} values, got {v.shape}")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise InvalidArgument("pdf values must be finite and non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def integral(self) -> float:
        return float(np.trapezoid(self.values, dx=self.grid.spacing))

    def normalized(self) -> "Pdf":
        total = self.integral()
        if total <= 0:
            raise InvalidArgument("cannot normalize a pdf with zero mass")
        return Pdf(self.grid, self.values / total)

    def mean(self) -> float:
        q = self.grid.q
        return float(np.trapezoid(q * self.values, q) / self.integral())

    def std(self) -> float:
        q = self.grid.q
        mu = self.mean()
        return float(np.sqrt(np.trapezoid((q - mu) ** 2 * self.values, q) / self.integral()))

    def resample(self, grid: QuadGrid) -> "Pdf":
        """Linear interpolation onto ``grid``; zero outside the current support."""
        return Pdf(grid, np.interp(grid.q, self.grid.q, self.values, left=0.0, right=0.0))

    def restrict(self, lo, hi) -> "Pdf":
        """Grid points inside [lo, hi], renormalized on that window."""
        q = self.grid.q
        mask = (q >= lo - 1e-12) & (q <= hi + 1e-12)
        if mask.sum() < 101:
            raise InvalidArgument(f"window [{lo}, {hi}] keeps fewer than 101 grid points")
        idx = np.flatnonzero(mask)
        sub = QuadGrid(float(q[idx[0]]), float(q[idx[-1]]), idx.size)
        return Pdf(sub, self.values[idx]).normalized()

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q", "density"])
        for q, v in zip(self.grid.q, self.values):
            w.writerow([repr(float(q)), repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Pdf":
        rows = list(csv.reader(io.StringIO(text)))
        data = np.array([[float(x) for x in r] for r in rows[1:] if r])
        grid = QuadGrid(float(data[0, 0]), float(data[-1, 0]), len(data))
        return cls(grid, data[:, 1])


class EncodedPdf(NamedTuple):
    coeffs: np.ndarray
    rho: DensityMatrix
    captured_norm: float


def oscillator_wavefunction(n, q):
    """Psi_n(q) by the normalized three-term recurrence (no factorials)."""
    if n < 0:
        raise InvalidArgument("n must be non-negative")
    if n > MAX_WAVEFUNCTION_INDEX:
        raise UnsupportedShape(f"n = {n} exceeds the supported maximum {MAX_WAVEFUNCTION_INDEX}")
    scalar = np.ndim(q) == 0
    table = kernels.hermite_table(n + 1, np.atleast_1d(np.asarray(q, dtype=float)))
    return float(table[n, 0]) if scalar else table[n]


def wavefunction_table(nmax, q) -> np.ndarray:
    """Rows Psi_0 .. Psi_{nmax-1} evaluated on ``q``."""
    if nmax - 1 > MAX_WAVEFUNCTION_INDEX:
        raise UnsupportedShape(f"n = {nmax - 1} exceeds {MAX_WAVEFUNCTION_INDEX}")
    return kernels.hermite_table(nmax, np.asarray(q, dtype=float))


def encode_pdf(p: Pdf, cutoff, min_captured=0.9) -> EncodedPdf:
    """Amplitude-encode ``p`` as a_n = int Psi_n sqrt(p) dq, renormalized.

    The positive square-root branch is used everywhere.
    """
    if cutoff > 40:
        raise InvalidArgument(f"cutoff {cutoff} exceeds 40")
    q = p.grid.q
    table = wavefunction_table(cutoff, q)
    coeffs = np.trapezoid(table * np.sqrt(p.values), dx=p.grid.spacing, axis=1)
    captured = float(coeffs @ coeffs)
    if captured < min_captured:
        raise CutoffInsufficient(captured, cutoff)
    coeffs = coeffs / math.sqrt(captured)
    return EncodedPdf(coeffs, DensityMatrix(np.outer(coeffs, coeffs)), captured)


def density_to_pdf(rho, grid: QuadGrid) -> Pdf:
    """P(q) = sum_mn rho_mn Psi_m(q) Psi_n(q)."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    table = wavefunction_table(m.shape[0], grid.q)
    vals = np.einsum("mq,mn,nq->q", table, m, table).real
    vals = np.where(vals < 0, 0.0, vals)
    return Pdf(grid, vals)


def kl_divergence(gen: Pdf, target: Pdf) -> float:
    """sum_q gen log(gen / target) dq with 0 log 0 = 0 and a 1e-12 target floor."""
    if gen.grid != target.grid:
        raise InvalidArgument("KL divergence needs both pdfs on the same grid")
    g = gen.values
    t = np.maximum(target.values, KL_FLOOR)
    mask = g >= KL_FLOOR
    return float(np.sum(g[mask] * np.log(g[mask] / t[mask])) * gen.grid.spacing)


def rescale_support(p: Pdf, new_min, new_max, old_min=None, old_max=None) -> Pdf:
    """Affine change of variable mapping [old_min, old_max] onto [new_min, new_max].

    The old interval defaults to the grid bounds. Densities pick up the
    Jacobian so the total mass is unchanged.
    """
    if not new_max > new_min:
        raise InvalidArgument("new_max must exceed new_min")
    old_min = p.grid.q_min if old_min is None else old_min
    old_max = p.grid.q_max if old_max is None else old_max
    scale = (new_max - new_min) / (old_max - old_min)
    lo = (p.grid.q_min - old_min) * scale + new_min
    hi = (p.grid.q_max - old_min) * scale + new_min
    return Pdf(QuadGrid(lo, hi, p.grid.points), p.values / scale)


def kde_smooth(centers, probabilities, grid: QuadGrid, bandwidth="scott", width=None) -> Pdf:
    """Weighted Gaussian KDE of a histogram, evaluated and normalized on ``grid``.

    Bandwidth follows the weighted ``scipy.stats.gaussian_kde`` convention:
    kernel std = factor * weighted std, with Scott's factor n_eff**(-1/5) and
    n_eff = 1 / sum(w**2). A float ``bandwidth`` sets the factor directly;
    ``width`` overrides everything with an absolute kernel std.
    """
    x = np.asarray(centers, dtype=float)
    w = np.asarray(probabilities, dtype=float)
    if x.shape != w.shape:
        raise InvalidArgument("centers and probabilities differ in length")
    if np.any(w < 0) or w.sum() <= 0:
        raise InvalidArgument("histogram must have positive total weight")
    w = w / w.sum()
    nz = w > 0
    q = grid.q
    if width is not None:
        h = float(width)
    else:
        h = _data_bandwidth(x, w, bandwidth)
    z = (q[:, None] - x[None, nz]) / h
    vals = np.exp(-0.5 * z * z) @ w[nz] / (h * math.sqrt(2 * math.pi))
    return Pdf(grid, vals).normalized()


def _data_bandwidth(x, w, bandwidth):
    if np.count_nonzero(w) < 2:
        raise InvalidArgument("KDE needs at least two nonempty bins (or an explicit width)")
    n_eff = 1.0 / np.sum(w**2)
    mu = np.sum(w * x)
    var = np.sum(w * (x - mu) ** 2) / (1.0 - np.sum(w**2))
    if bandwidth == "scott":
        factor = n_eff ** (-0.2)
    elif bandwidth == "silverman":
        factor = (n_eff * 0.75) ** (-0.2)
    else:
        factor = float(bandwidth)
    return factor * math.sqrt(var)
