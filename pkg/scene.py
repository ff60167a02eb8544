"""
Scene - object apertures on a uniform grid, PGM input/output, the shared
'same'-size convolution, the focusing-kernel smoothing and the bundled
test objects.

Grid convention: values[row, col] sampled at pixel centers of
[-side/2, side/2]^2, row 0 at the top edge (y = +side/2), col 0 at x = -side/2.
"""

import hashlib
import logging
import math
import os
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.signal import fftconvolve

import config
from errors import DataError, PgmParseError, ResolutionError, StorageError, ValidationError
from optics import SourceConfig, focusing_kernel
from specfun import bessel_j0, j1_zero

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ApertureGrid:
    """Real aperture transmissivity A in [0, 1] on a G x G grid."""
    values: np.ndarray
    side: float = 1.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValidationError(f"aperture must be a square 2-D array, got shape {values.shape}")
        if values.shape[0] < config.MIN_GRID:
            raise ValidationError(f"grid resolution must be >= {config.MIN_GRID}, got {values.shape[0]}")
        if not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
            raise ValidationError("aperture values must be finite and lie in [0, 1]")
        if not (np.isfinite(self.side) and self.side > 0):
            raise ValidationError(f"side must be positive, got {self.side}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    @property
    def pitch(self) -> float:
        return self.side / self.resolution

    def centers(self) -> np.ndarray:
        """Pixel-center x coordinates; y of row i is -centers()[i]."""
        return (np.arange(self.resolution) + 0.5) * self.pitch - 0.5 * self.side

    def digest(self) -> str:
        h = hashlib.sha1(self.values.tobytes())
        h.update(repr(self.side).encode())
        return h.hexdigest()[:16]

    def check_resolves(self, src: SourceConfig) -> None:
        """Raise ResolutionError unless the pitch resolves the focusing kernel."""
        limit = src.kernel_first_zero / config.PITCH_PER_KERNEL_ZERO
        if self.pitch > limit:
            required = int(math.ceil(self.side / limit))
            raise ResolutionError(
                f"pixel pitch {self.pitch:.5g} exceeds {limit:.5g} (first focusing zero / "
                f"{config.PITCH_PER_KERNEL_ZERO}) at dk_t = {src.delta_k_t:g}; use G >= {required} "
                f"for side {self.side:g}", required)


@dataclass(frozen=True, eq=False)
class SmoothedAperture:
    """A convolved with the unit-mass focusing kernel. Values are signed (somb side lobes)."""
    values: np.ndarray
    side: float
    peak: float
    source_hash: str
    delta_k_t: float
    kernel_radius: float
    kernel_mass_deficit: float

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    @property
    def pitch(self) -> float:
        return self.side / self.resolution


# ========== PGM I/O ==========

def _next_token(data: bytes, pos: int) -> Tuple[bytes, int]:
    """Return the next whitespace-delimited header token and the position after it."""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b'#':
            while pos < n and data[pos:pos + 1] not in (b'\n', b'\r'):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b'#':
        pos += 1
    if start == pos:
        raise PgmParseError("unexpected end of header", start)
    return data[start:pos], pos


def _header_int(data: bytes, pos: int, what: str) -> Tuple[int, int]:
    token, end = _next_token(data, pos)
    if not token.isdigit():
        raise PgmParseError(f"expected {what}, got {token[:16]!r}", end - len(token))
    return int(token), end


def parse_pgm(data: bytes) -> Tuple[np.ndarray, int]:
    """Decode P2/P5 bytes into (samples as float array, maxval)."""
    magic, pos = _next_token(data, 0)
    if magic not in (b'P2', b'P5'):
        raise PgmParseError(f"unsupported magic number {magic[:8]!r}", 0)
    width, pos = _header_int(data, pos, 'width')
    height, pos = _header_int(data, pos, 'height')
    maxval_at = pos
    maxval, pos = _header_int(data, pos, 'maxval')
    if width == 0 or height == 0:
        raise PgmParseError(f"empty image {width}x{height}", maxval_at)
    if width != height:
        raise PgmParseError(f"image must be square, got {width}x{height}", maxval_at)
    if not 0 < maxval < 65536:
        raise PgmParseError(f"maxval must lie in 1..65535, got {maxval}", maxval_at)
    count = width * height
    if magic == b'P5':
        if pos >= len(data) or not data[pos:pos + 1].isspace():
            raise PgmParseError("missing whitespace after maxval", pos)
        pos += 1
        dtype = np.dtype('u1') if maxval < 256 else np.dtype('>u2')
        needed = count * dtype.itemsize
        if len(data) - pos < needed:
            raise PgmParseError(f"truncated raster: need {needed} bytes, have {len(data) - pos}", pos)
        samples = np.frombuffer(data, dtype=dtype, count=count, offset=pos).astype(float)
    else:
        values = []
        for _ in range(count):
            v, pos = _header_int(data, pos, 'sample')
            values.append(v)
        samples = np.asarray(values, dtype=float)
    if samples.max(initial=0) > maxval:
        raise PgmParseError(f"sample exceeds maxval {maxval}", pos)
    return samples.reshape(height, width), maxval


def load_pgm(path: str, side: float = 1.0) -> ApertureGrid:
    """Read a square PGM into an aperture, mapping gray levels linearly so maxval -> 1."""
    try:
        with open(path, 'rb') as fh:
            data = fh.read()
    except OSError as e:
        raise StorageError(f"cannot read {path}: {e}") from e
    samples, maxval = parse_pgm(data)
    logger.debug("[PGM] %s: %dx%d maxval=%d", path, samples.shape[1], samples.shape[0], maxval)
    return ApertureGrid(samples / maxval, side=side)


def encode_pgm(values: np.ndarray, gamma: float = config.DISPLAY_GAMMA) -> bytes:
    """Peak-normalize, apply display gamma and encode as 16-bit P5."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise DataError(f"image must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError("image contains NaN or infinite values")
    if arr.size and arr.min() < 0.0:
        raise DataError(f"image contains negative values (min {arr.min():.3g})")
    if not gamma > 0:
        raise DataError(f"gamma must be positive, got {gamma}")
    peak = arr.max(initial=0.0)
    scaled = arr / peak if peak > 0 else np.zeros_like(arr)
    if gamma != 1.0:
        scaled = scaled ** gamma
    raster = np.rint(scaled * config.PGM_MAXVAL).astype('>u2')
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n{config.PGM_MAXVAL}\n".encode('ascii')
    return header + raster.tobytes()


def save_pgm(image, path: str, gamma: float = config.DISPLAY_GAMMA) -> None:
    """Write an aperture, smoothed aperture, image or bare array as a 16-bit P5 file."""
    payload = encode_pgm(getattr(image, 'values', image), gamma=gamma)
    try:
        dirn = os.path.dirname(path)
        if dirn:
            os.makedirs(dirn, exist_ok=True)
        with open(path, 'wb') as fh:
            fh.write(payload)
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e}") from e


# ========== CONVOLUTION ==========

def _direct_same(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """O(G^2 K^2) 'same' convolution, summing each output pixel in a fixed order."""
    g0, g1 = values.shape
    c0, c1 = (kernel.shape[0] - 1) // 2, (kernel.shape[1] - 1) // 2
    padded = np.pad(kernel, ((g0, g0), (g1, g1)))
    flipped = values[::-1, ::-1]
    dtype = np.result_type(values, kernel)
    out = np.empty((g0, g1), dtype=dtype)
    for p in range(g0):
        rows = slice(p + c0 + 1, p + c0 + g0 + 1)
        for q in range(g1):
            out[p, q] = np.sum(padded[rows, q + c1 + 1:q + c1 + g1 + 1] * flipped)
    return out


def convolve(values: np.ndarray, kernel: np.ndarray, method: str = 'fft') -> np.ndarray:
    """Zero-padded convolution cropped to the input frame.

    ``kernel`` has odd side lengths and is centered on its middle sample.
    """
    if kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise ValidationError(f"kernel sides must be odd, got {kernel.shape}")
    if method == 'fft':
        return fftconvolve(values, kernel, mode='same')
    if method == 'direct':
        return _direct_same(values, kernel)
    raise ValidationError(f"unknown convolution method {method!r}")


def radial_offsets(half: int, pitch: float) -> np.ndarray:
    """Distances of a (2 half + 1)^2 block of pixel offsets from its center."""
    o = (np.arange(2 * half + 1) - half) * pitch
    return np.hypot(o[None, :], o[:, None])


def focusing_weights(src: SourceConfig, pitch: float, zeros: int = config.FOCUS_KERNEL_ZEROS
                     ) -> Tuple[np.ndarray, float]:
    """Unit-sum samples of the focusing spot, truncated at its ``zeros``-th zero."""
    radius = 2.0 * j1_zero(zeros) / src.delta_k_t
    half = max(int(math.ceil(radius / pitch)), 0)
    dist = radial_offsets(half, pitch)
    samples = np.where(dist <= radius, focusing_kernel(src, dist), 0.0)
    return samples / samples.sum(), radius


def smooth(grid: ApertureGrid, src: SourceConfig, method: str = 'fft',
           zeros: int = config.FOCUS_KERNEL_ZEROS) -> SmoothedAperture:
    """A~ = A convolved with the unit-mass focusing kernel (zero outside the frame)."""
    grid.check_resolves(src)
    weights, radius = focusing_weights(src, grid.pitch, zeros)
    values = convolve(grid.values, weights, method=method)
    values.setflags(write=False)
    # 2-D somb mass inside its s-th zero is (1 - J0(j1s)) of the full-plane mass
    deficit = float(bessel_j0(j1_zero(zeros)))
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    logger.debug("[Smooth] dk_t=%g kernel %dx%d radius=%.5g deficit=%.3f", src.delta_k_t,
                 weights.shape[0], weights.shape[1], radius, deficit)
    return SmoothedAperture(values=values, side=grid.side, peak=peak, source_hash=grid.digest(),
                            delta_k_t=src.delta_k_t, kernel_radius=radius,
                            kernel_mass_deficit=deficit)


# ========== BUNDLED OBJECTS ==========

# 5x7 bitmap glyphs, top row first
GLYPHS = {
    'R': ("11110", "10001", "10001", "11110", "10100", "10010", "10001"),
    'Q': ("01110", "10001", "10001", "10001", "10101", "10010", "01101"),
    'E': ("11111", "10000", "10000", "11110", "10000", "10000", "11111"),
}


def _blank(resolution: int) -> np.ndarray:
    if resolution < config.MIN_GRID:
        raise ValidationError(f"grid resolution must be >= {config.MIN_GRID}, got {resolution}")
    return np.zeros((resolution, resolution))


def snapped_half_gap(resolution: int, side: float, separation: float) -> int:
    """Half gap h so that two pixels symmetric about the frame center sit (2h+1) pitches apart."""
    pitch = side / resolution
    h = max(int(round((separation / pitch - 1.0) / 2.0)), 0)
    if resolution // 2 + h >= resolution:
        raise ValidationError(f"separation {separation} does not fit in a frame of side {side}")
    return h


def snapped_separation(resolution: int, side: float, separation: float) -> float:
    return (2 * snapped_half_gap(resolution, side, separation) + 1) * side / resolution


def point_target(resolution: int = config.ORACLE_GRID, side: float = config.FRAME_SIDE,
                 offset: Tuple[int, int] = (0, 0)) -> ApertureGrid:
    """Single open pixel at (G//2, G//2) shifted by ``offset`` (rows, cols)."""
    values = _blank(resolution)
    values[resolution // 2 + offset[0], resolution // 2 + offset[1]] = 1.0
    return ApertureGrid(values, side=side)


def two_point_target(resolution: int, side: float, separation: float) -> ApertureGrid:
    """Two open pixels on row G//2, symmetric about the frame center.

    The separation is snapped to an odd number of pitches; see snapped_separation.
    """
    values = _blank(resolution)
    h = snapped_half_gap(resolution, side, separation)
    row = resolution // 2
    values[row, resolution // 2 - 1 - h] = 1.0
    values[row, resolution // 2 + h] = 1.0
    return ApertureGrid(values, side=side)


def two_bar_target(resolution: int, side: float, gap: float,
                   length: Optional[float] = None) -> ApertureGrid:
    """Two vertical bars whose centers are ``gap`` apart, each gap/3 wide."""
    values = _blank(resolution)
    pitch = side / resolution
    h = snapped_half_gap(resolution, side, gap)
    width = max(int(round(gap / 3.0 / pitch)), 1)
    span = max(int(round((length if length is not None else 3.0 * gap) / pitch)), 1)
    top = max(resolution // 2 - span // 2, 0)
    rows = slice(top, min(top + span, resolution))
    for center in (resolution // 2 - 1 - h, resolution // 2 + h):
        lo = center - (width - 1) // 2
        values[rows, max(lo, 0):min(lo + width, resolution)] = 1.0
    return ApertureGrid(values, side=side)


def glyph_target(resolution: int = config.RENDER_GRID, side: float = config.FRAME_SIDE,
                 glyph: str = config.GLYPH, height: Optional[float] = None) -> ApertureGrid:
    """Bitmap letter centered in the frame, ``height`` image widths tall (default 0.6 side)."""
    try:
        rows = GLYPHS[glyph.upper()]
    except KeyError:
        raise ValidationError(f"no bundled glyph {glyph!r}; choose from {sorted(GLYPHS)}") from None
    values = _blank(resolution)
    height = 0.6 * side if height is None else height
    cell = max(int(round(height / 7.0 / (side / resolution))), 1)
    bitmap = np.array([[c == '1' for c in r] for r in rows], dtype=float)
    block = np.kron(bitmap, np.ones((cell, cell)))
    if block.shape[0] > resolution or block.shape[1] > resolution:
        raise ValidationError(f"glyph of height {height} does not fit in side {side}")
    r0 = (resolution - block.shape[0]) // 2
    c0 = (resolution - block.shape[1]) // 2
    values[r0:r0 + block.shape[0], c0:c0 + block.shape[1]] = block
    return ApertureGrid(values, side=side)


def grating_target(resolution: int, side: float, period_px: int, duty_px: Optional[int] = None
                   ) -> ApertureGrid:
    """Vertical bars filling the frame: ``duty_px`` open columns per ``period_px``."""
    if period_px < 2:
        raise ValidationError(f"grating period must be >= 2 pixels, got {period_px}")
    duty = period_px // 2 if duty_px is None else duty_px
    values = _blank(resolution)
    cols = np.arange(resolution) % period_px < duty
    values[:, cols] = 1.0
    return ApertureGrid(values, side=side)


TARGETS = ('two-point', 'two-bar', 'glyph', 'grating', 'point')


def bundled_target(name: str, resolution: int, side: float, separation: float) -> ApertureGrid:
    """Build a bundled object by name; ``separation`` sets the two-point/two-bar gap."""
    if name == 'two-point':
        return two_point_target(resolution, side, separation)
    if name == 'two-bar':
        return two_bar_target(resolution, side, separation)
    if name == 'glyph':
        return glyph_target(resolution, side)
    if name == 'grating':
        return grating_target(resolution, side, 4)
    if name == 'point':
        return point_target(resolution, side)
    raise ValidationError(f"unknown target {name!r}; choose from {', '.join(TARGETS)}")
