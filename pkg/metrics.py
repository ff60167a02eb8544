"""
Metrics - generalized Rayleigh radius, power-law fits, two-point dip depth,
sharpness and the Monte Carlo centroid-averaging oracle.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, stats
from scipy.optimize import brentq
from scipy.signal import find_peaks
from tqdm import tqdm

import config
import engines
import optics
from errors import DomainError, GeometryError, ValidationError
from optics import OpticalConfig, SourceConfig
from scene import ApertureGrid
from specfun import J1_FIRST_ZERO, RadialProfile, radius_for_fraction, somb

logger = logging.getLogger(__name__)


# ========== RESOLUTION RADII ==========

def generalized_rayleigh_radius(cfg: OpticalConfig, n: int, fraction: Optional[float] = None,
                                node_count: int = config.PROFILE_NODES) -> float:
    """x_R(N): radius holding ``fraction`` of somb^(2N), in image-plane units.

    The default fraction is the Airy first-ring fraction, so x_R(1) is the
    first dark ring.
    """
    profile = RadialProfile.for_photon_number(n, node_count=node_count)
    r = radius_for_fraction(profile, fraction)
    return cfg.m * r / cfg.argument_scale


def heisenberg_first_zero(cfg: OpticalConfig, n: int) -> float:
    """First zero of the N-photon absorber PSF, located numerically (image-plane units)."""
    hcfg = optics.heisenberg_config(cfg, n)
    guess = J1_FIRST_ZERO / hcfg.argument_scale
    root = brentq(lambda d: optics.psf_radial(hcfg, d), 0.8 * guess, 1.2 * guess, xtol=1e-15)
    return cfg.m * root


# ========== FITS ==========

@dataclass
class ScalingFit:
    slope: float
    intercept: float
    r_squared: float
    points: List[Tuple[float, float]] = field(default_factory=list)

    def within(self, target: float, tolerance: float) -> bool:
        return abs(self.slope - target) <= tolerance


def fit_scaling(points: Sequence[Tuple[float, float]]) -> ScalingFit:
    """Least squares line through (ln N, ln value)."""
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise ValidationError(f"need at least 3 points for a scaling fit, got {len(pts)}")
    ns = np.array([p[0] for p in pts])
    vals = np.array([p[1] for p in pts])
    if np.any(ns <= 0) or np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise DomainError("scaling fit needs positive N and positive finite values")
    res = stats.linregress(np.log(ns), np.log(vals))
    return ScalingFit(slope=float(res.slope), intercept=float(res.intercept),
                      r_squared=float(min(res.rvalue ** 2, 1.0)), points=pts)


# ========== IMAGE METRICS ==========

def two_point_dip(image: engines.ImageGrid, separation: float, *, axis: int = 1,
                  center: float = 0.0) -> float:
    """1 - I_mid / I_peak along the line through the image maximum.

    Lobes are searched within ``separation`` of ``center`` (object-registered
    coordinate along ``axis``); a single lobe gives 0.
    """
    values = np.asarray(image.values)
    if separation <= 0:
        raise GeometryError(f"separation must be positive, got {separation}")
    r, c = np.unravel_index(int(np.argmax(values)), values.shape)
    line = values[r, :] if axis == 1 else values[::-1, c]
    coords = (np.arange(line.size) + 0.5) * image.pitch - 0.5 * image.side
    window = np.abs(coords - center) <= separation
    if window.sum() < 3 or not np.any(line[window] > 0):
        raise GeometryError("two-point lobes cannot be located in the search window")
    idx = np.flatnonzero(window)
    segment = line[idx]
    peaks, _ = find_peaks(np.concatenate(([-np.inf], segment, [-np.inf])))
    peaks = idx[peaks - 1]
    left = [p for p in peaks if coords[p] < center]
    right = [p for p in peaks if coords[p] > center]
    if not left or not right:
        return 0.0
    pl = max(left, key=lambda p: line[p])
    pr = max(right, key=lambda p: line[p])
    i_peak = 0.5 * (line[pl] + line[pr])
    i_mid = float(line[pl:pr + 1].min())
    return float(np.clip(1.0 - i_mid / i_peak, 0.0, 1.0))


def sharpness(image) -> float:
    """Squared central-difference gradient over squared value, interior pixels only."""
    v = np.asarray(getattr(image, 'values', image), dtype=float)
    gy = 0.5 * (v[2:, 1:-1] - v[:-2, 1:-1])
    gx = 0.5 * (v[1:-1, 2:] - v[1:-1, :-2])
    energy = float(np.sum(v[1:-1, 1:-1] ** 2))
    if energy == 0.0:
        return 0.0
    return float(np.sum(gx ** 2 + gy ** 2) / energy)


def normalized_rms(a, b) -> float:
    """RMS difference of two peak-normalized images on the same grid."""
    x = np.asarray(getattr(a, 'values', a), dtype=float)
    y = np.asarray(getattr(b, 'values', b), dtype=float)
    if x.shape != y.shape:
        raise ValidationError(f"image shapes differ: {x.shape} vs {y.shape}")
    return float(np.sqrt(np.mean((x / x.max() - y / y.max()) ** 2)))


def encircled_radius_on_grid(image, fraction: float) -> float:
    """Radius about the brightest pixel that holds ``fraction`` of the image sum."""
    v = np.asarray(getattr(image, 'values', image), dtype=float)
    pitch = getattr(image, 'pitch', 1.0)
    r0, c0 = np.unravel_index(int(np.argmax(v)), v.shape)
    rows, cols = np.indices(v.shape)
    dist = np.hypot(rows - r0, cols - c0).ravel() * pitch
    order = np.argsort(dist, kind='stable')
    cum = np.cumsum(v.ravel()[order])
    j = int(np.searchsorted(cum, fraction * cum[-1], side='left'))
    return float(dist[order][min(j, cum.size - 1)])


# ========== MONTE CARLO ==========

@dataclass(frozen=True)
class McConfig:
    """Centroid-averaging experiment: ``samples`` centroids of ``N`` photons each."""
    seed: int = config.MC_SEED
    samples: int = config.MC_SAMPLES
    truncation_radius: float = config.MC_TRUNCATION
    N: int = 1
    table_nodes: int = config.MC_TABLE_NODES
    chunk: int = config.MC_CHUNK

    def __post_init__(self):
        if self.samples < config.MC_MIN_SAMPLES:
            raise ValidationError(f"samples must be >= {config.MC_MIN_SAMPLES}, got {self.samples}")
        if self.truncation_radius < config.MC_MIN_TRUNCATION:
            raise ValidationError(f"truncation_radius must be >= {config.MC_MIN_TRUNCATION}, "
                                  f"got {self.truncation_radius}")
        if self.N < 1 or self.table_nodes < 2 or self.chunk < 1:
            raise ValidationError("N, table_nodes and chunk must be positive")


def _airy_table(cfg: OpticalConfig, truncation: float, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Inverse-CDF table (cdf, radius) of the radial density somb^2(a r) r on [0, truncation x_R]."""
    r_max = truncation * optics.rayleigh_radius(cfg) / cfg.m
    r = np.linspace(0.0, r_max, nodes)
    pdf = somb(cfg.argument_scale * r) ** 2 * r
    cdf = integrate.cumulative_trapezoid(pdf, r, initial=0.0)
    return cdf / cdf[-1], r


def mc_centroid_spread(cfg: OpticalConfig, mc: McConfig, progress: bool = False) -> float:
    """Radial standard deviation of N-photon centroids drawn from the truncated Airy density.

    Every chunk of centroids draws from its own stream seeded by (seed, N, chunk index),
    so the result depends only on the configuration.
    """
    cdf, radii = _airy_table(cfg, mc.truncation_radius, mc.table_nodes)
    n_chunks = int(math.ceil(mc.samples / mc.chunk))
    centroids = np.empty((mc.samples, 2))
    for i in tqdm(range(n_chunks), desc=f"centroids N={mc.N}", disable=not progress, leave=False):
        rng = np.random.default_rng([mc.seed, mc.N, i])
        lo = i * mc.chunk
        count = min(mc.chunk, mc.samples - lo)
        u = rng.random((count, mc.N))
        phi = rng.random((count, mc.N)) * (2.0 * math.pi)
        rho = np.interp(u, cdf, radii) * cfg.m
        centroids[lo:lo + count, 0] = np.mean(rho * np.cos(phi), axis=1)
        centroids[lo:lo + count, 1] = np.mean(rho * np.sin(phi), axis=1)
    offsets = centroids - centroids.mean(axis=0)
    spread = float(np.sqrt(np.mean(np.sum(offsets ** 2, axis=1))))
    logger.debug("[MC] N=%d samples=%d truncation=%.1f x_R spread=%.6g", mc.N, mc.samples,
                 mc.truncation_radius, spread)
    return spread


def airy_photon_spread(cfg: OpticalConfig, truncation: float = config.MC_TRUNCATION) -> float:
    """Single-photon radial RMS of the truncated Airy density, by adaptive quadrature."""
    a = cfg.argument_scale
    t_max = truncation * optics.rayleigh_radius(cfg) / cfg.m * a
    breaks = np.arange(1, int(t_max / math.pi) + 1) * math.pi
    breaks = breaks[breaks < t_max]

    def density(t: float) -> float:
        return somb(t) ** 2 * t

    mass, _ = integrate.quad(density, 0.0, t_max, points=breaks, limit=500)
    second, _ = integrate.quad(lambda t: density(t) * t * t, 0.0, t_max, points=breaks, limit=500)
    return cfg.m * math.sqrt(second / mass) / a


# ========== BANDWIDTH DIAGNOSTIC ==========

def dip_vs_bandwidth(grid: ApertureGrid, cfg: OpticalConfig, separation: float,
                     bandwidths: Sequence[float], mode: str = 'sql-incoherent:5',
                     src: Optional[SourceConfig] = None) -> pd.DataFrame:
    """Two-object dip depth of an N-photon engine as the focusing bandwidth varies."""
    base = src or SourceConfig()
    rows = []
    for dk in bandwidths:
        s = replace(base, delta_k_t=float(dk))
        image = engines.render(mode, grid, cfg, s)
        rows.append({
            'delta_k_t': float(dk),
            'kernel_first_zero': s.kernel_first_zero,
            'dip': two_point_dip(image, separation),
            'sharpness': sharpness(image),
        })
        logger.info("[Sweep] %s dk_t=%g dip=%.4f", mode, dk, rows[-1]['dip'])
    return pd.DataFrame(rows, columns=['delta_k_t', 'kernel_first_zero', 'dip', 'sharpness'])
