"""
Sub-Rayleigh Imaging - Centralized Configuration
Single source of truth for physical defaults, grid sizes, quadrature and
Monte Carlo settings, and the acceptance windows of the scaling checks.

Lengths are in image widths, wavenumbers in inverse image widths.
"""
import os
from typing import Dict

from errors import ValidationError

ROOT_DIR = os.path.dirname(os.path.abspath(__file__))

# ========== OUTPUT ==========
OUTPUT_DIR_ENV = 'SUBRAYLEIGH_OUTPUT_DIR'  # beats the config file, loses to --output-dir
DEFAULT_OUTPUT_DIR = os.path.join(ROOT_DIR, 'output')


# ========== OPTICS (figure caption parameters) ==========
WAVENUMBER = 6000.0          # k
LENS_RADIUS = 1.0            # R
OBJECT_DISTANCE = 250.0      # D_o, so D_o/R = 250
MAGNIFICATION = 1.0          # m = D_i/D_o
PARAXIAL_LIMIT = 0.2         # warn when R/D_o reaches this

# ========== SOURCE ==========
FOCUSING_BANDWIDTH = 600.0   # Δk_t
MEAN_PHOTONS = 1.0           # |α|²
TRANSMISSIVITY = 1.0         # μ
MONOCHROMATICITY = 0.01      # ΔωΔt
QUANTUM_EFFICIENCY = 1.0     # η
PIXEL_TO_OBJECT_AREA = 1e-4  # S/𝒜
OBJECT_INTENSITY = 1.0       # I_o
OBJECT_AREA = 1.0            # 𝒜, full unit frame
TIME_WINDOW = 1.0            # Δt
FOCUSING_MIN = 10.0          # warn when π Δk_t² 𝒜 falls below this

# ========== GRIDS ==========
RENDER_GRID = 256
ORACLE_GRID = 64
MIN_GRID = 16
FRAME_SIDE = 0.8             # keeps the default render pitch below the focusing-kernel limit
PITCH_PER_KERNEL_ZERO = 4    # pitch must not exceed first focusing zero / 4
EXACT_MAX_GRID = 128
FOCUS_KERNEL_ZEROS = 3       # smoothing kernel truncated at this somb zero
PSF_KERNEL_ZEROS = 8         # imaging kernel truncated at this somb zero

# ========== QUADRATURE ==========
PROFILE_NODES = 16384
MIN_PROFILE_NODES = 64
CUTOFF_ZEROS = 50            # cutoff radius = 50 j11 / sqrt(N)
BISECTION_RTOL = 1e-6
BISECTION_MAX_ITER = 200
SERIES_LIMIT = 8.0           # power series below, rational asymptotics above
SERIES_TERMS = 30
SOMB_SERIES_LIMIT = 1e-4

# ========== MONTE CARLO ==========
MC_SEED = 20070101
MC_SAMPLES = 100_000
MC_MIN_SAMPLES = 1000
MC_TRUNCATION = 10.0         # multiples of x_R
MC_MIN_TRUNCATION = 3.0
MC_TABLE_NODES = 4096
MC_CHUNK = 8192              # centroids per random stream

# ========== SCALING CHECKS ==========
SQL_NS = (4, 8, 16, 32, 64)
HEISENBERG_NS = tuple(range(1, 11))
MC_NS = (4, 16, 64, 256)
SLOPE_WINDOWS: Dict[str, tuple] = {
    'sql_radius': (-0.5, 0.05),
    'heisenberg_zero': (-1.0, 1e-6),
    'mc_spread': (-0.5, 0.05),
}
MIN_R_SQUARED = 0.99

# ========== RENDERING ==========
DISPLAY_GAMMA = 1.0
PGM_MAXVAL = 65535
GLYPH = 'R'
FIG1_MODES = ('conventional-coherent', 'coincidence:5', 'sql-coherent:5',
              'sql-coherent:10', 'heisenberg-coherent:5')
FIG2_MODES = ('conventional-incoherent', 'coincidence-incoherent:5',
              'sql-incoherent:5', 'sql-incoherent:10')
EXACT_AGREEMENT_RMS = 0.1

# ========== CONFIG FILES ==========


def load_config_file(path: str) -> Dict[str, str]:
    """Parse a ``key = value`` file. Blank lines and ``#`` comments are skipped.

    Values are returned as strings; the caller coerces and rejects unknown keys.
    """
    entries: Dict[str, str] = {}
    with open(path, 'r', encoding='utf-8') as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ValidationError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split('=', 1))
            if not key:
                raise ValidationError(f"{path}:{lineno}: empty key")
            entries[key] = value
    return entries
