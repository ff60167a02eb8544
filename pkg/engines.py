"""
Engines - image formation for conventional, coincidence, standard-quantum-limit
and Heisenberg-limit imaging.

Images are sampled in object-registered coordinates u = -r_i/m, so every
engine is a plain convolution on the object grid and the stored array is
upright. Raw images are peak-normalized; the raw peak and the dropped
physical prefactors are kept as logs on the ImageGrid.
"""

import logging
import math
import re
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from tqdm import tqdm

import config
import optics
from errors import DegenerateImageError, RangeError, SizeError, ValidationError
from optics import OpticalConfig, SourceConfig
from scene import ApertureGrid, convolve, focusing_weights, radial_offsets, smooth
from specfun import j1_zero, somb

logger = logging.getLogger(__name__)

COORDINATES = 'object-registered'


@dataclass(frozen=True, eq=False)
class ImageGrid:
    """Peak-normalized image plus the record needed to undo the normalization."""
    values: np.ndarray
    side: float
    mode: str
    N: int
    log_raw_peak: float
    magnification: float = 1.0
    log_scalars: Dict[str, float] = field(default_factory=dict)
    coordinates: str = COORDINATES

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    @property
    def pitch(self) -> float:
        return self.side / self.resolution

    def raw_values(self) -> np.ndarray:
        """Pixel values before peak normalization."""
        return self.values * math.exp(self.log_raw_peak)


def _finish(raw: np.ndarray, grid, mode: str, n: int, cfg: OpticalConfig,
            scalars: Dict[str, float]) -> ImageGrid:
    peak = float(np.max(raw)) if raw.size else 0.0
    if not (np.isfinite(peak) and peak > 0.0):
        raise DegenerateImageError(f"{mode}: raw image peak is {peak}; nothing to normalize")
    values = raw / peak
    values.setflags(write=False)
    logger.debug("[Engine] %s N=%d raw peak=%.6g", mode, n, peak)
    return ImageGrid(values=values, side=grid.side, mode=mode, N=n, log_raw_peak=math.log(peak),
                     magnification=cfg.m, log_scalars=dict(scalars))


def psf_kernel(cfg: OpticalConfig, resolution: int, pitch: float,
               zeros: int = config.PSF_KERNEL_ZEROS) -> np.ndarray:
    """PSF on every offset a G x G frame can produce, zero past its ``zeros``-th zero."""
    dist = radial_offsets(resolution - 1, pitch)
    arg = cfg.argument_scale * dist
    return np.where(arg <= j1_zero(zeros), somb(arg), 0.0)


def _base_scalars(cfg: OpticalConfig, src: SourceConfig) -> Dict[str, float]:
    return {'log_psf_prefactor': math.log(optics.psf_prefactor(cfg, src.area_A))}


# ========== CONVENTIONAL ==========

def image_coherent(grid: ApertureGrid, cfg: OpticalConfig, src: Optional[SourceConfig] = None,
                   method: str = 'fft') -> ImageGrid:
    """|A * K|^2, collimated coherent illumination."""
    src = src or SourceConfig()
    kernel = psf_kernel(cfg, grid.resolution, grid.pitch)
    amplitude = grid.pitch ** 2 * convolve(grid.values, kernel, method=method)
    scalars = _base_scalars(cfg, src)
    scalars['log_detection'] = optics.conventional_log_scale(src, cfg, coherent=True)
    return _finish(amplitude ** 2, grid, 'conventional-coherent', 1, cfg, scalars)


def image_incoherent(grid: ApertureGrid, cfg: OpticalConfig, src: Optional[SourceConfig] = None,
                     method: str = 'fft') -> ImageGrid:
    """|A|^2 * K^2, illumination from all directions."""
    src = src or SourceConfig()
    kernel = psf_kernel(cfg, grid.resolution, grid.pitch)
    raw = grid.pitch ** 2 * convolve(grid.values ** 2, kernel ** 2, method=method)
    scalars = _base_scalars(cfg, src)
    scalars['log_detection'] = optics.conventional_log_scale(src, cfg, coherent=False)
    return _finish(np.maximum(raw, 0.0), grid, 'conventional-incoherent', 1, cfg, scalars)


def coincidence_postprocess(image: ImageGrid, n: int) -> ImageGrid:
    """N-fold coincidence of a conventional image: P_N = P_1^N / N!."""
    if int(n) != n or n < 1:
        raise RangeError(f"coincidence order must be a positive integer, got {n}")
    if n == 1:
        return image
    powered = image.values ** n
    peak = float(np.max(powered))
    if not peak > 0.0:
        raise DegenerateImageError("coincidence image has no positive pixel")
    values = powered / peak
    values.setflags(write=False)
    scalars = dict(image.log_scalars)
    scalars['log_coincidence'] = -math.lgamma(n + 1)
    base = image.mode.replace('conventional-', '')
    return ImageGrid(values=values, side=image.side, mode=f"coincidence-{base}:{n}", N=n,
                     log_raw_peak=n * image.log_raw_peak + math.log(peak) - math.lgamma(n + 1),
                     magnification=image.magnification, log_scalars=scalars)


# ========== STANDARD QUANTUM LIMIT ==========

def _sql_scalars(cfg: OpticalConfig, src: SourceConfig, smoothed) -> Dict[str, float]:
    scalars = _base_scalars(cfg, src)
    scalars['log_sql_prefactor'] = optics.sql_log_scale(src)
    scalars['log_fock_norm'] = math.log(optics.fock_norm(src))
    scalars['kernel_mass_deficit'] = smoothed.kernel_mass_deficit
    return scalars


def image_sql_coherent(grid: ApertureGrid, cfg: OpticalConfig, src: SourceConfig,
                       method: str = 'fft', enforce_regime: bool = True) -> ImageGrid:
    """|A~^N * K^N|^2 for focused N-photon Fock states."""
    optics.check_focusing(cfg, src, enforce=enforce_regime)
    smoothed = smooth(grid, src, method=method)
    n = src.N
    kernel = psf_kernel(cfg, grid.resolution, grid.pitch) ** n
    amplitude = grid.pitch ** 2 * convolve(smoothed.values ** n, kernel, method=method)
    return _finish(amplitude ** 2, grid, f"sql-coherent:{n}", n, cfg, _sql_scalars(cfg, src, smoothed))


def image_sql_incoherent(grid: ApertureGrid, cfg: OpticalConfig, src: SourceConfig,
                         method: str = 'fft', enforce_regime: bool = True) -> ImageGrid:
    """|A~|^2N * K^2N; pixel values are the same for Fock and coherent-mixture sources."""
    optics.check_focusing(cfg, src, enforce=enforce_regime)
    smoothed = smooth(grid, src, method=method)
    n = src.N
    kernel = psf_kernel(cfg, grid.resolution, grid.pitch) ** (2 * n)
    raw = grid.pitch ** 2 * convolve(np.abs(smoothed.values) ** (2 * n), kernel, method=method)
    scalars = _sql_scalars(cfg, src, smoothed)
    scalars['log_source_efficiency'] = optics.log_source_efficiency(src)
    return _finish(np.maximum(raw, 0.0), grid, f"sql-incoherent:{n}", n, cfg, scalars)


def image_sql_coherent_exact(grid: ApertureGrid, cfg: OpticalConfig, src: SourceConfig,
                             method: str = 'fft', max_grid: int = config.EXACT_MAX_GRID,
                             progress: bool = False) -> ImageGrid:
    """N-photon coherent image from the full Q integral, without pulling h out.

    For each image point u: Q(u, r_o) = sum_r A(r) K(r - u) F(r_o - r), and the
    amplitude is the sum over r_o of Q^N. Cost grows as G^4 log G.
    """
    g = grid.resolution
    if g > max_grid:
        raise SizeError(f"exact Q engine limited to G <= {max_grid} (got {g}); raise max_grid to override")
    grid.check_resolves(src)
    n = src.N
    weights, _ = focusing_weights(src, grid.pitch)
    kernel = psf_kernel(cfg, g, grid.pitch)
    amplitude = np.zeros((g, g))
    for p in tqdm(range(g), desc=f"exact Q N={n}", disable=not progress, leave=False):
        for q in range(g):
            window = kernel[g - 1 - p:2 * g - 1 - p, g - 1 - q:2 * g - 1 - q]
            weighted = grid.values * window
            if not weighted.any():
                continue
            Q = convolve(weighted, weights, method=method)
            amplitude[p, q] = np.sum(Q ** n)
    amplitude *= grid.pitch ** 2
    scalars = _base_scalars(cfg, src)
    scalars['log_sql_prefactor'] = optics.sql_log_scale(src)
    return _finish(amplitude ** 2, grid, f"sql-coherent-exact:{n}", n, cfg, scalars)


# ========== HEISENBERG LIMIT ==========

def image_heisenberg(grid: ApertureGrid, cfg: OpticalConfig, src: SourceConfig, coherent: bool = True,
                     method: str = 'fft', enforce_regime: bool = True,
                     s_F: Optional[float] = None) -> ImageGrid:
    """N-photon absorber imaging: the SQL integrands with K_N, the PSF at wavenumber N k."""
    optics.check_focusing(cfg, src, enforce=enforce_regime)
    smoothed = smooth(grid, src, method=method)
    n = src.N
    kernel = psf_kernel(optics.heisenberg_config(cfg, n), grid.resolution, grid.pitch)
    if coherent:
        amplitude = grid.pitch ** 2 * convolve(smoothed.values ** n, kernel, method=method)
        raw = amplitude ** 2
    else:
        raw = np.maximum(grid.pitch ** 2 * convolve(np.abs(smoothed.values) ** (2 * n), kernel ** 2,
                                                    method=method), 0.0)
    scalars = _sql_scalars(cfg, src, smoothed)
    pupil = math.pi * cfg.R ** 2
    scalars['log_heisenberg_gamma'] = math.log(optics.heisenberg_gamma(cfg, s_F or pupil, n))
    mode = f"heisenberg-{'coherent' if coherent else 'incoherent'}:{n}"
    return _finish(raw, grid, mode, n, cfg, scalars)


# ========== MODE DISPATCH ==========

MODE_ALIASES = {
    'conventional': 'conventional-coherent',
    'sql': 'sql-coherent',
    'heisenberg': 'heisenberg-coherent',
    'coincidence': 'coincidence-coherent',
}
MODES = ('conventional-coherent', 'conventional-incoherent', 'coincidence-coherent',
         'coincidence-incoherent', 'sql-coherent', 'sql-incoherent', 'sql-coherent-exact',
         'heisenberg-coherent', 'heisenberg-incoherent')
_MODE_RE = re.compile(r'^([a-z-]+?)(?::(\d+))?$')


@dataclass(frozen=True)
class EngineMode:
    name: str
    N: int = 1

    @property
    def label(self) -> str:
        return self.name if self.name.startswith('conventional') else f"{self.name}:{self.N}"


def parse_mode(text: str) -> EngineMode:
    """Parse 'sql-coherent:5', 'coincidence:5', 'conventional', ... into an EngineMode."""
    match = _MODE_RE.match(text.strip().lower())
    if not match:
        raise ValidationError(f"cannot parse engine mode {text!r}")
    name, count = match.group(1), match.group(2)
    name = MODE_ALIASES.get(name, name)
    if name not in MODES:
        raise ValidationError(f"unknown engine mode {text!r}; choose from {', '.join(MODES)}")
    if name.startswith('conventional'):
        if count not in (None, '1'):
            raise ValidationError(f"{name} takes no photon number")
        return EngineMode(name, 1)
    if count is None:
        raise ValidationError(f"mode {name} needs a photon number, e.g. {name}:5")
    n = int(count)
    if n < 1:
        raise ValidationError(f"photon number must be >= 1 in {text!r}")
    return EngineMode(name, n)


def render(mode, grid: ApertureGrid, cfg: OpticalConfig, src: Optional[SourceConfig] = None,
           method: str = 'fft', enforce_regime: bool = True, progress: bool = False,
           max_grid: int = config.EXACT_MAX_GRID) -> ImageGrid:
    """Run the engine named by ``mode`` (an EngineMode or mode string)."""
    mode = parse_mode(mode) if isinstance(mode, str) else mode
    src = (src or SourceConfig()).with_photons(mode.N)
    name = mode.name
    if name == 'conventional-coherent':
        return image_coherent(grid, cfg, src, method=method)
    if name == 'conventional-incoherent':
        return image_incoherent(grid, cfg, src, method=method)
    if name.startswith('coincidence-'):
        base = image_coherent if name == 'coincidence-coherent' else image_incoherent
        return coincidence_postprocess(base(grid, cfg, src, method=method), mode.N)
    if name == 'sql-coherent':
        return image_sql_coherent(grid, cfg, src, method=method, enforce_regime=enforce_regime)
    if name == 'sql-incoherent':
        return image_sql_incoherent(grid, cfg, src, method=method, enforce_regime=enforce_regime)
    if name == 'sql-coherent-exact':
        return image_sql_coherent_exact(grid, cfg, src, method=method, max_grid=max_grid, progress=progress)
    return image_heisenberg(grid, cfg, src, coherent=(name == 'heisenberg-coherent'), method=method,
                            enforce_regime=enforce_regime)
