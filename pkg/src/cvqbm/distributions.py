"""Analytic target densities and grayscale intensity histograms."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import InvalidArgument, ParseError

HISTOGRAM_BINS = 256


def _check_positive(**params):
    for name, value in params.items():
        if not (math.isfinite(value) and value > 0):
            raise InvalidArgument(f"{name} must be positive, got {value}")


def pdf_rayleigh(x, sigma):
    """(x / sigma^2) exp(-x^2 / 2 sigma^2) for x >= 0, else 0."""
    _check_positive(sigma=sigma)
    x = np.asarray(x, dtype=float)
    xp = np.maximum(x, 0.0)
    return np.where(x >= 0, xp / sigma**2 * np.exp(-(xp**2) / (2 * sigma**2)), 0.0)


def pdf_gamma(x, k, theta):
    _check_positive(k=k, theta=theta)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    out[pos] = np.exp((k - 1) * np.log(xp) - xp / theta - math.lgamma(k) - k * math.log(theta))
    if k == 1:
        out[x == 0] = 1.0 / theta
    elif k < 1:
        out[x == 0] = np.inf
    return out


def pdf_weibull(x, lam, k):
    """Standard two-parameter Weibull density (k / lam)(x / lam)^(k-1) exp(-(x / lam)^k)."""
    _check_positive(lam=lam, k=k)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    z = x[pos] / lam
    out[pos] = (k / lam) * z ** (k - 1) * np.exp(-(z**k))
    if k == 1:
        out[x == 0] = 1.0 / lam
    return out


def cdf_weibull(x, lam, k):
    _check_positive(lam=lam, k=k)
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    return -np.expm1(-((x / lam) ** k))


def regularized_incomplete_beta(z, alpha, beta):
    """I_z(alpha, beta) by Lentz continued fraction, using the reflection
    I_z(a, b) = 1 - I_{1-z}(b, a) where the fraction converges slowly."""
    _check_positive(alpha=alpha, beta=beta)
    z_arr = np.asarray(z, dtype=float)
    if np.any((z_arr < 0) | (z_arr > 1)) or not np.all(np.isfinite(z_arr)):
        raise InvalidArgument("z must lie in [0, 1]")
    out = kernels.betainc(z_arr, float(alpha), float(beta))
    return float(out.ravel()[0]) if z_arr.ndim == 0 else out


def log_beta(alpha, beta):
    return math.lgamma(alpha) + math.lgamma(beta) - math.lgamma(alpha + beta)


def pdf_beta_prime(x, alpha, beta):
    _check_positive(alpha=alpha, beta=beta)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    out[pos] = np.exp((alpha - 1) * np.log(xp) - (alpha + beta) * np.log1p(xp) - log_beta(alpha, beta))
    return out


def pdf_etib(x, alpha, beta, lam, phi):
    """Exponentiated transmuted inverted-beta density.

    Requires alpha, beta, phi > 0 and |lam| < 1. Reduces to the beta-prime
    density at lam = 0, phi = 1.
    """
    _check_positive(alpha=alpha, beta=beta, phi=phi)
    if not abs(lam) < 1:
        raise InvalidArgument(f"|lambda| must be < 1, got {lam}")
    x = np.asarray(x, dtype=float)
    xp = np.maximum(x, 0.0)
    ib = regularized_incomplete_beta(xp / (1.0 + xp), alpha, beta)
    ib = np.asarray(ib)
    base = pdf_beta_prime(xp, alpha, beta)
    transmuted = 1.0 + lam - 2.0 * lam * ib
    g = ib * (1.0 + lam - lam * ib)
    # phi * G^(phi-1) * g with G the transmuted CDF, written to stay finite at ib = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        power = np.where(g > 0, g ** (phi - 1.0), 0.0 if phi > 1 else (1.0 if phi == 1 else np.inf))
    out = phi * base * transmuted * power
    return np.where(x > 0, out, 0.0)


@dataclass(frozen=True)
class Histogram:
    """Probabilities over equally spaced bins (centers 0..255 for 8-bit images)."""

    probabilities: np.ndarray
    centers: np.ndarray = field(default=None)

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        c = np.arange(p.size, dtype=float) if self.centers is None else np.asarray(self.centers, dtype=float)
        if c.shape != p.shape:
            raise InvalidArgument("centers and probabilities differ in length")
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "centers", c)


def histogram_from_counts(counts) -> Histogram:
    counts = np.asarray(counts, dtype=float)
    if counts.size != HISTOGRAM_BINS:
        raise InvalidArgument(f"expected {HISTOGRAM_BINS} counts, got {counts.size}")
    if np.any(counts < 0):
        raise InvalidArgument("counts must be non-negative")
    total = counts.sum()
    if total <= 0:
        raise InvalidArgument("histogram is empty")
    return Histogram(counts / total)


def _parse_pgm(data: bytes) -> np.ndarray:
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ParseError(f"not a PGM file (magic {magic!r})", 0)
    tokens = []
    pos = 2
    token_re = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")
    while len(tokens) < 3:
        m = token_re.match(data, pos)
        if m is None:
            raise ParseError("truncated PGM header", pos)
        try:
            tokens.append(int(m.group(1)))
        except ValueError:
            raise ParseError(f"bad PGM header field {m.group(1)!r}", m.start(1)) from None
        pos = m.end()
    width, height, maxval = tokens
    if maxval != 255:
        raise ParseError(f"only maxval 255 is supported, got {maxval}", pos)
    npix = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte before the raster
        raster = data[pos : pos + npix]
        if len(raster) < npix:
            raise ParseError(f"raster holds {len(raster)} of {npix} pixels", pos + len(raster))
        return np.frombuffer(raster, dtype=np.uint8)
    pixels = []
    for m in re.finditer(rb"\S+", data[pos:]):
        try:
            v = int(m.group())
        except ValueError:
            raise ParseError(f"bad pixel value {m.group()!r}", pos + m.start()) from None
        if not 0 <= v <= 255:
            raise ParseError(f"pixel value {v} outside 0..255", pos + m.start())
        pixels.append(v)
    if len(pixels) < npix:
        raise ParseError(f"raster holds {len(pixels)} of {npix} pixels", len(data))
    return np.asarray(pixels[:npix], dtype=np.uint8)


def _parse_counts_csv(text: str) -> np.ndarray:
    values = []
    offset = 0
    for line in text.splitlines(keepends=True):
        for m in re.finditer(r"[^,\s]+", line):
            try:
                values.append(float(m.group()))
            except ValueError:
                raise ParseError(f"bad count {m.group()!r}", offset + m.start()) from None
        offset += len(line.encode())
    return np.asarray(values)


def load_intensity_histogram(source) -> Histogram:
    """Read a 256-bin intensity histogram from a PGM image or a CSV of counts."""
    data = Path(source).read_bytes()
    if data[:2] in (b"P2", b"P5"):
        pixels = _parse_pgm(data)
        if pixels.size == 0:
            raise InvalidArgument("image has no pixels")
        counts = np.bincount(pixels, minlength=HISTOGRAM_BINS)
    else:
        counts = _parse_counts_csv(data.decode("utf-8"))
    return histogram_from_counts(counts)


def write_pgm(path, pixels, binary=True):
    """Write an 8-bit PGM (P5 binary or P2 ASCII)."""
    img = np.asarray(pixels, dtype=np.uint8)
    h, w = img.shape
    if binary:
        Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + img.tobytes())
    else:
        body = "\n".join(" ".join(str(v) for v in row) for row in img)
        Path(path).write_text(f"P2\n{w} {h}\n255\n{body}\n")


def fit_gaussian(hist: Histogram):
    """Moment-matched (mu, sigma) of the weighted bin centers."""
    p = hist.probabilities
    if np.count_nonzero(p) < 2:
        raise InvalidArgument("a Gaussian fit needs at least two nonzero bins")
    w = p / p.sum()
    mu = float(np.sum(w * hist.centers))
    sigma = float(np.sqrt(np.sum(w * (hist.centers - mu) ** 2)))
    return mu, sigma


def pdf_gaussian(x, mu, sigma):
    _check_positive(sigma=sigma)
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * ((x - mu) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
