"""Turn a target description into a density matrix, a reference pdf and a fidelity."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import distributions as dist
from .errors import InvalidArgument
from .fock import DensityMatrix
from .gadget import gadget_fidelity
from .gates import displace, squeeze, squeezing_from_db
from .quadrature import Pdf, QuadGrid, density_to_pdf, encode_pdf, kde_smooth
from .trainer import fidelity

KINDS = ("gaussian", "rayleigh", "gamma", "weibull", "etib", "histogram", "quantum-state")

# positional parameter order for list-valued params
PARAM_NAMES = {
    "gaussian": ("mu", "sigma"),
    "rayleigh": ("sigma",),
    "gamma": ("k", "theta"),
    "weibull": ("lam", "k"),
    "etib": ("alpha", "beta", "lam", "phi"),
    "histogram": (),
    "quantum-state": (),
}

HISTOGRAM_SMOOTHING = ("gaussian-fit", "kde")
QUANTUM_STATES = ("squeezed-displaced", "cat")


@dataclass(frozen=True)
class Rescale:
    """Affine map of the raw axis [src_min, src_max] onto [dst_min, dst_max]."""

    src: tuple = (0.0, 255.0)
    dst: tuple = (0.0, 4.0)

    @property
    def scale(self) -> float:
        return (self.dst[1] - self.dst[0]) / (self.src[1] - self.src[0])

    def to_raw(self, q):
        return (np.asarray(q) - self.dst[0]) / self.scale + self.src[0]

    def from_raw(self, x):
        return (np.asarray(x) - self.src[0]) * self.scale + self.dst[0]


@dataclass(frozen=True)
class TargetSpec:
    kind: str
    params: dict = field(default_factory=dict)
    support: tuple | None = None
    rescale: Rescale | None = None
    source: str | None = None
    smoothing: str = "gaussian-fit"
    state: str | None = None
    base_dir: str = "."

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown target kind {self.kind!r}")
        if self.support is not None and not self.support[1] > self.support[0]:
            raise InvalidArgument("support must be an increasing [min, max] pair")


@dataclass
class Target:
    spec: TargetSpec
    rho: DensityMatrix
    pdf: Pdf
    fidelity_fn: Callable
    info: dict

    @property
    def quantum(self) -> bool:
        return self.spec.kind == "quantum-state"


def _need(params, *names):
    missing = [n for n in names if n not in params]
    if missing:
        raise InvalidArgument(f"missing target parameter(s): {', '.join(missing)}")
    return [float(params[n]) for n in names]


def analytic_density(kind, params, x):
    if kind == "gaussian":
        return dist.pdf_gaussian(x, *_need(params, "mu", "sigma"))
    if kind == "rayleigh":
        return dist.pdf_rayleigh(x, *_need(params, "sigma"))
    if kind == "gamma":
        return dist.pdf_gamma(x, *_need(params, "k", "theta"))
    if kind == "weibull":
        return dist.pdf_weibull(x, *_need(params, "lam", "k"))
    if kind == "etib":
        return dist.pdf_etib(x, *_need(params, "alpha", "beta", "lam", "phi"))
    raise InvalidArgument(f"{kind!r} is not an analytic family")


def quantum_state_vector(state, params, cutoff) -> np.ndarray:
    """Pure target states built from the vacuum at ``cutoff``.

    ``squeezed-displaced``: D(alpha) S(r) |0>. ``cat``: S(r) (D(a) + D(-a)) |0>.
    Squeezing is given in dB.
    """
    vac = np.zeros(cutoff, dtype=np.complex128)
    vac[0] = 1.0
    if state == "squeezed-displaced":
        db, alpha = _need(params, "squeezing_db", "alpha")
        psi = displace(alpha, cutoff) @ squeeze(squeezing_from_db(db), cutoff) @ vac
    elif state == "cat":
        db, alpha = _need(params, "squeezing_db", "alpha")
        psi = squeeze(squeezing_from_db(db), cutoff) @ (displace(alpha, cutoff) + displace(-alpha, cutoff)) @ vac
    else:
        raise InvalidArgument(f"unknown quantum state {state!r}; choose from {QUANTUM_STATES}")
    return psi / np.linalg.norm(psi)


def _histogram_pdf(spec: TargetSpec, grid: QuadGrid, info) -> Pdf:
    if spec.source is None:
        raise InvalidArgument("histogram targets need a source file")
    path = Path(spec.source)
    if not path.is_absolute():
        path = Path(spec.base_dir) / path
    hist = dist.load_intensity_histogram(path)
    rs = spec.rescale or Rescale()
    centers = rs.from_raw(hist.centers)
    if spec.smoothing == "gaussian-fit":
        mu_raw, sigma_raw = dist.fit_gaussian(hist)
        mu, sigma = float(rs.from_raw(mu_raw)), sigma_raw * rs.scale
        info.update(fit_raw={"mu": mu_raw, "sigma": sigma_raw}, fit={"mu": mu, "sigma": sigma})
        return Pdf(grid, dist.pdf_gaussian(grid.q, mu, sigma)).normalized()
    if spec.smoothing == "kde":
        return kde_smooth(centers, hist.probabilities, grid)
    raise InvalidArgument(f"smoothing must be one of {HISTOGRAM_SMOOTHING}")


def build_target(spec: TargetSpec, grid: QuadGrid, cutoff, min_captured=0.9) -> Target:
    info = {"kind": spec.kind}
    if spec.kind == "quantum-state":
        psi = quantum_state_vector(spec.state, spec.params, cutoff)
        rho = DensityMatrix(np.outer(psi, psi.conj()))
        pdf = density_to_pdf(rho, grid).normalized()
        info["state"] = spec.state
        return Target(spec, rho, pdf, gadget_fidelity, info)
    if spec.kind == "histogram":
        pdf = _histogram_pdf(spec, grid, info)
    elif spec.rescale is not None:
        rs = spec.rescale
        pdf = Pdf(grid, analytic_density(spec.kind, spec.params, rs.to_raw(grid.q)) / rs.scale).normalized()
        if spec.kind == "weibull":
            info["params_raw"] = dict(spec.params)
            info["params_rescaled"] = {"lam": float(spec.params["lam"]) * rs.scale, "k": float(spec.params["k"])}
    else:
        pdf = Pdf(grid, analytic_density(spec.kind, spec.params, grid.q)).normalized()
    enc = encode_pdf(pdf, cutoff, min_captured)
    info["captured_norm"] = enc.captured_norm
    return Target(spec, enc.rho, pdf, fidelity, info)


def kl_window(target: Target, grid: QuadGrid):
    """The interval on which KL is scored: the support hint, else the whole grid."""
    if target.spec.support is None:
        return (grid.q_min, grid.q_max)
    lo, hi = target.spec.support
    return (max(lo, grid.q_min), min(hi, grid.q_max))

