"""
Sub-Rayleigh imaging - command line front end

Subcommands:
  render   render an object with one or more engines (PGM panels + manifest.csv)
  figure   render the fig1 (coherent) or fig2 (incoherent) panel set
  psf      radial PSF profiles and the x_R / x_R(N) summary
  scaling  x_R(N), Heisenberg first zero and Monte Carlo spread versus N, with slope checks
  sweep    two-object dip depth of an N-photon engine versus the focusing bandwidth

Settings resolve as: command-line flags > key=value config file (--config) >
built-in defaults from config.py. SUBRAYLEIGH_OUTPUT_DIR sets the output
directory when --output-dir is not given.

Exit codes: 0 success, 2 usage, 3 regime/validation, 4 I/O.
"""

import argparse
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

PROJECT_ROOT = os.path.dirname(os.path.abspath(__file__))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

import config  # noqa: E402
import engines  # noqa: E402
import manifest  # noqa: E402
import metrics  # noqa: E402
import optics  # noqa: E402
import scene  # noqa: E402
from errors import SubRayleighError, ValidationError  # noqa: E402
from tools.csv_utils import safe_write_frame  # noqa: E402

logger = logging.getLogger(__name__)


# ========== LOGGING ==========

class _ColorFormatter(logging.Formatter):
    """Simple color formatter for console logs."""
    COLORS = {
        'DEBUG': '\x1b[90m',   # dim gray
        'INFO': '\x1b[37m',    # white
        'WARNING': '\x1b[33m',  # yellow
        'ERROR': '\x1b[31m',   # red
        'CRITICAL': '\x1b[41m'  # red background
    }
    RESET = '\x1b[0m'

    def format(self, record):
        color = self.COLORS.get(record.levelname, '')
        formatted = super().format(record)
        return f"{color}{formatted}{self.RESET}"


def setup_logging(level=logging.INFO):
    root = logging.getLogger()
    if root.handlers:
        return  # already configured

    fmt = '%(asctime)s %(levelname)-7s [%(name)s] %(message)s'
    handler = logging.StreamHandler()
    handler.setFormatter(_ColorFormatter(fmt, datefmt='%H:%M:%S'))

    root.setLevel(level)
    root.addHandler(handler)


# ========== RUN CONFIGURATION ==========

@dataclass
class RunConfig:
    """Fully resolved settings of one CLI invocation."""
    subcommand: str = 'render'
    input_path: Optional[str] = None
    output_dir: str = config.DEFAULT_OUTPUT_DIR
    modes: List[str] = field(default_factory=lambda: list(config.FIG1_MODES))
    N: int = 5
    k: float = config.WAVENUMBER
    R: float = config.LENS_RADIUS
    D_o: float = config.OBJECT_DISTANCE
    m: float = config.MAGNIFICATION
    delta_k_t: float = config.FOCUSING_BANDWIDTH
    grid: int = config.RENDER_GRID
    side: float = config.FRAME_SIDE
    seed: int = config.MC_SEED
    exact: bool = False
    exact_max_grid: int = config.EXACT_MAX_GRID
    gamma: float = config.DISPLAY_GAMMA
    target: str = 'glyph'
    separation: Optional[float] = None
    scale_bar: bool = False
    samples: int = config.MC_SAMPLES
    truncation: float = config.MC_TRUNCATION
    sql_ns: List[int] = field(default_factory=lambda: list(config.SQL_NS))
    heisenberg_ns: List[int] = field(default_factory=lambda: list(config.HEISENBERG_NS))
    mc_ns: List[int] = field(default_factory=lambda: list(config.MC_NS))
    bandwidths: List[float] = field(default_factory=lambda: [150.0, 300.0, 450.0, 600.0])
    sweep_mode: str = 'sql-incoherent:5'
    figure: Optional[str] = None
    progress: bool = False

    def optical(self) -> optics.OpticalConfig:
        return optics.OpticalConfig(k=self.k, R=self.R, D_o=self.D_o, D_i=self.m * self.D_o)

    def source(self, n: Optional[int] = None) -> optics.SourceConfig:
        return optics.SourceConfig(N=n or self.N, delta_k_t=self.delta_k_t)

    def resolved_separation(self) -> float:
        """Two-object separation; defaults to 0.6 x_R/m."""
        if self.separation is not None:
            return self.separation
        cfg = self.optical()
        return 0.6 * optics.rayleigh_radius(cfg) / cfg.m


def _to_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ('1', 'true', 'yes', 'on'):
        return True
    if value in ('0', 'false', 'no', 'off'):
        return False
    raise ValidationError(f"expected a boolean, got {text!r}")


def _to_optional_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ('', 'none') else float(text)


def _split(text: str) -> List[str]:
    return [t.strip() for t in text.split(',') if t.strip()]


_COERCE: Dict[str, Callable[[str], object]] = {
    'subcommand': str, 'input_path': str, 'output_dir': str, 'target': str, 'sweep_mode': str,
    'figure': str,
    'modes': _split,
    'bandwidths': lambda t: [float(v) for v in _split(t)],
    'sql_ns': lambda t: [int(v) for v in _split(t)],
    'heisenberg_ns': lambda t: [int(v) for v in _split(t)],
    'mc_ns': lambda t: [int(v) for v in _split(t)],
    'N': int, 'grid': int, 'seed': int, 'samples': int, 'exact_max_grid': int,
    'k': float, 'R': float, 'D_o': float, 'm': float, 'delta_k_t': float, 'side': float,
    'gamma': float, 'truncation': float,
    'separation': _to_optional_float,
    'exact': _to_bool, 'scale_bar': _to_bool, 'progress': _to_bool,
}


def _from_file(path: str) -> Dict[str, object]:
    known = {f.name for f in fields(RunConfig)}
    values: Dict[str, object] = {}
    for key, text in config.load_config_file(path).items():
        if key not in known:
            raise ValidationError(f"{path}: unknown setting {key!r}")
        try:
            values[key] = _COERCE[key](text)
        except ValueError as e:
            raise ValidationError(f"{path}: bad value for {key}: {e}") from e
    return values


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, the optional config file, the environment and the flags."""
    merged = asdict(RunConfig())
    if getattr(args, 'config', None):
        merged.update(_from_file(args.config))
    env_dir = os.environ.get(config.OUTPUT_DIR_ENV)
    if env_dir:
        merged['output_dir'] = env_dir
    for name in merged:
        value = getattr(args, name, None)
        if value is not None:
            merged[name] = value
    merged['subcommand'] = args.command
    rc = RunConfig(**merged)
    if rc.figure:
        rc.modes = list(config.FIG1_MODES if rc.figure == 'fig1' else config.FIG2_MODES)
    return rc


# ========== HELPERS ==========

def _load_object(rc: RunConfig) -> scene.ApertureGrid:
    if rc.input_path:
        grid = scene.load_pgm(rc.input_path, side=rc.side)
        logger.info("[Input] %s (G=%d, side=%g)", rc.input_path, grid.resolution, grid.side)
        return grid
    return scene.bundled_target(rc.target, rc.grid, rc.side, rc.resolved_separation())


def with_scale_bar(values: np.ndarray, length_px: float) -> np.ndarray:
    """Copy of ``values`` with a bright bar of ``length_px`` pixels burned into the top right."""
    out = np.array(values, dtype=float)
    g = out.shape[1]
    margin = max(g // 32, 1)
    length = int(min(max(round(length_px), 1), g - 2 * margin))
    thickness = max(g // 128, 1)
    out[margin:margin + thickness, g - margin - length:g - margin] = out.max(initial=0.0) or 1.0
    return out


def _panel_file(index: int, mode: engines.EngineMode) -> str:
    return f"{index:02d}_{mode.label.replace(':', '_N')}.pgm"


def _panels(rc: RunConfig) -> List[engines.EngineMode]:
    panels = []
    for text in rc.modes:
        mode = engines.parse_mode(text)
        panels.append(mode)
        if rc.exact and mode.name == 'sql-coherent':
            panels.append(engines.EngineMode('sql-coherent-exact', mode.N))
    return panels


# ========== COMMANDS ==========

def cmd_render(rc: RunConfig) -> int:
    """Render every requested engine; one PGM per panel plus manifest rows."""
    grid = _load_object(rc)
    cfg = rc.optical()
    src = rc.source()
    os.makedirs(rc.output_dir, exist_ok=True)
    manifest.start_manifest(rc.output_dir)
    bar_px = optics.rayleigh_radius(cfg) / cfg.m / grid.pitch
    approx: Dict[int, engines.ImageGrid] = {}
    for index, mode in enumerate(_panels(rc), start=1):
        started = time.perf_counter()
        image = engines.render(mode, grid, cfg, src, progress=rc.progress, max_grid=rc.exact_max_grid)
        runtime = time.perf_counter() - started
        name = _panel_file(index, mode)
        sharp = metrics.sharpness(image)
        pixels = with_scale_bar(image.values, bar_px) if rc.scale_bar else image.values
        scene.save_pgm(pixels, os.path.join(rc.output_dir, name), gamma=rc.gamma)
        row = {
            'engine': mode.label,
            'N': mode.N,
            'log_raw_peak': f"{image.log_raw_peak:.12g}",
            'sharpness': f"{sharp:.12g}",
            'runtime_s': f"{runtime:.4f}",
            'file': name,
            'gamma': rc.gamma,
        }
        if mode.name == 'sql-coherent':
            approx[mode.N] = image
        elif mode.name == 'sql-coherent-exact':
            if mode.N not in approx:
                approx[mode.N] = engines.render(engines.EngineMode('sql-coherent', mode.N), grid, cfg, src,
                                               enforce_regime=False)
            rms = metrics.normalized_rms(image, approx[mode.N])
            row['rms_vs_approx'] = f"{rms:.6g}"
            if rms > config.EXACT_AGREEMENT_RMS:
                logger.warning("[Render] exact vs approximate N=%d disagree: RMS %.4f > %.2f",
                               mode.N, rms, config.EXACT_AGREEMENT_RMS)
            else:
                logger.info("[Render] exact vs approximate N=%d: RMS %.4f", mode.N, rms)
        manifest.append_manifest_row(rc.output_dir, row)
        logger.info("[Render] %-26s sharpness=%.5g (%.2fs) -> %s", mode.label, sharp, runtime, name)
    manifest.write_run_config(rc.output_dir, rc.subcommand, asdict(rc))
    return 0


def cmd_psf(rc: RunConfig, points: int = 401) -> int:
    """Radial PSF profiles and the x_R / x_R(N) summary line."""
    cfg = rc.optical()
    n = rc.N
    x_r = optics.rayleigh_radius(cfg)
    x_rn = metrics.generalized_rayleigh_radius(cfg, n)
    r = np.linspace(0.0, 3.0 * x_r, points)
    d = r / cfg.m
    amplitude = optics.psf_radial(cfg, d)
    profile = pd.DataFrame({
        'r': r,
        'somb': amplitude,
        'somb_2N': amplitude ** (2 * n),
        'heisenberg_somb': optics.psf_radial(optics.heisenberg_config(cfg, n), d),
    })
    summary = pd.DataFrame([{
        'N': n,
        'x_R': x_r,
        'x_R_N': x_rn,
        'ratio': x_rn / x_r,
        'heisenberg_first_zero': metrics.heisenberg_first_zero(cfg, n),
    }])
    safe_write_frame(os.path.join(rc.output_dir, 'psf_profile.csv'), profile)
    safe_write_frame(os.path.join(rc.output_dir, 'psf_summary.csv'), summary)
    manifest.write_run_config(rc.output_dir, rc.subcommand, asdict(rc))
    logger.info("[PSF] x_R=%.6f x_R(%d)=%.6f ratio=%.4f", x_r, n, x_rn, x_rn / x_r)
    return 0


def cmd_scaling(rc: RunConfig) -> int:
    """Scaling table and slope checks; exit 3 when a slope leaves its window.

    Each column is computed only for the N values of its own fit and left
    empty elsewhere.
    """
    cfg = rc.optical()
    fits = {
        'sql_radius': ('x_R_N', rc.sql_ns),
        'heisenberg_zero': ('heisenberg_first_zero', rc.heisenberg_ns),
        'mc_spread': ('mc_spread', rc.mc_ns),
    }
    for quantity, (_, subset) in fits.items():
        if any(int(n) < 1 for n in subset):
            raise ValidationError(f"{quantity}: photon numbers must be >= 1, got {subset}")

    def mc_spread(n: int) -> float:
        mc = metrics.McConfig(seed=rc.seed, samples=rc.samples, truncation_radius=rc.truncation, N=n)
        return metrics.mc_centroid_spread(cfg, mc, progress=rc.progress)

    compute = {
        'x_R_N': lambda n: metrics.generalized_rayleigh_radius(cfg, n),
        'heisenberg_first_zero': lambda n: metrics.heisenberg_first_zero(cfg, n),
        'mc_spread': mc_spread,
    }
    ns = sorted(set().union(*(set(subset) for _, subset in fits.values())))
    rows = []
    for n in ns:
        row = {'N': n}
        for column, subset in fits.values():
            row[column] = compute[column](n) if n in subset else np.nan
        rows.append(row)
    table = pd.DataFrame(rows, columns=['N', 'x_R_N', 'heisenberg_first_zero', 'mc_spread'])

    fit_rows = []
    ok = True
    for quantity, (column, subset) in fits.items():
        part = table[table['N'].isin(subset)]
        fit = metrics.fit_scaling(list(zip(part['N'], part[column])))
        target, tol = config.SLOPE_WINDOWS[quantity]
        within = fit.within(target, tol)
        if quantity == 'sql_radius':
            within = within and fit.r_squared >= config.MIN_R_SQUARED
        ok = ok and within
        fit_rows.append({'quantity': quantity, 'slope': fit.slope, 'intercept': fit.intercept,
                         'r_squared': fit.r_squared, 'target': target, 'tolerance': tol,
                         'within': within})
        log = logger.info if within else logger.error
        log("[Scaling] %-16s slope=%.6f (target %.2f ± %g) r2=%.5f", quantity, fit.slope, target, tol,
            fit.r_squared)
    safe_write_frame(os.path.join(rc.output_dir, 'scaling.csv'), table)
    safe_write_frame(os.path.join(rc.output_dir, 'scaling_fits.csv'), pd.DataFrame(fit_rows))
    manifest.write_run_config(rc.output_dir, rc.subcommand, asdict(rc))
    return 0 if ok else ValidationError.exit_code


def cmd_figure(rc: RunConfig) -> int:
    """Render a caption panel set on the bundled glyph (or --input)."""
    if rc.figure not in ('fig1', 'fig2'):
        raise ValidationError(f"unknown figure {rc.figure!r}; choose fig1 or fig2")
    return cmd_render(rc)


def cmd_sweep(rc: RunConfig) -> int:
    """Dip depth of one engine on the two-object target versus dk_t."""
    cfg = rc.optical()
    separation = rc.resolved_separation()
    target = rc.target if rc.target in ('two-point', 'two-bar') else 'two-bar'
    grid = scene.bundled_target(target, rc.grid, rc.side, separation)
    table = metrics.dip_vs_bandwidth(grid, cfg, separation, rc.bandwidths, mode=rc.sweep_mode,
                                     src=rc.source())
    safe_write_frame(os.path.join(rc.output_dir, 'dip_sweep.csv'), table)
    manifest.write_run_config(rc.output_dir, rc.subcommand, asdict(rc))
    return 0


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    'render': cmd_render,
    'figure': cmd_figure,
    'psf': cmd_psf,
    'scaling': cmd_scaling,
    'sweep': cmd_sweep,
}


# ========== ARGUMENTS ==========

def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in _split(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in _split(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='key = value settings file')
    common.add_argument('--output-dir', dest='output_dir')
    common.add_argument('--k', type=float, help='wavenumber (inverse image widths)')
    common.add_argument('--R', type=float, help='lens radius')
    common.add_argument('--D-o', dest='D_o', type=float, help='object distance')
    common.add_argument('--m', type=float, help='magnification D_i/D_o')
    common.add_argument('--delta-k-t', dest='delta_k_t', type=float, help='focusing bandwidth')
    common.add_argument('--grid', type=int, help='samples per side')
    common.add_argument('--side', type=float, help='frame width in image widths')
    common.add_argument('--seed', type=int)
    common.add_argument('--progress', action='store_true', default=None)
    common.add_argument('-v', '--verbose', action='store_true')
    common.add_argument('-q', '--quiet', action='store_true')

    imaging = argparse.ArgumentParser(add_help=False)
    imaging.add_argument('--input', dest='input_path', help='square PGM object (P2 or P5)')
    imaging.add_argument('--target', choices=scene.TARGETS, help='bundled object when --input is absent')
    imaging.add_argument('--separation', type=float, help='two-point/two-bar separation (default 0.6 x_R/m)')
    imaging.add_argument('--gamma', type=float, help='display gamma for written PGMs')
    imaging.add_argument('--exact', action='store_true', default=None,
                         help='add a full Q-integral panel for every sql-coherent mode')
    imaging.add_argument('--exact-max-grid', dest='exact_max_grid', type=int)
    imaging.add_argument('--scale-bar', dest='scale_bar', action='store_true', default=None)

    parser = argparse.ArgumentParser(prog='subrayleigh', description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest='command', required=True)

    render = sub.add_parser('render', parents=[common, imaging], help='render engine panels')
    render.add_argument('--mode', dest='modes', action='append',
                        help='engine mode, repeatable (e.g. conventional, sql:5, heisenberg-incoherent:5)')

    figure = sub.add_parser('figure', parents=[common, imaging], help='render a caption panel set')
    figure.add_argument('figure', choices=('fig1', 'fig2'))

    psf = sub.add_parser('psf', parents=[common], help='radial PSF profiles')
    psf.add_argument('--N', type=int)

    scaling = sub.add_parser('scaling', parents=[common], help='x_R(N) and Monte Carlo scaling fits')
    scaling.add_argument('--samples', type=int, help='centroids per N')
    scaling.add_argument('--truncation', type=float, help='Monte Carlo truncation in units of x_R')
    scaling.add_argument('--sql-ns', dest='sql_ns', type=_int_list, help='photon numbers for the x_R(N) fit')
    scaling.add_argument('--heisenberg-ns', dest='heisenberg_ns', type=_int_list,
                         help='photon numbers for the Heisenberg first-zero fit')
    scaling.add_argument('--mc-ns', dest='mc_ns', type=_int_list, help='photon numbers for the Monte Carlo fit')

    sweep = sub.add_parser('sweep', parents=[common], help='dip depth versus focusing bandwidth')
    sweep.add_argument('--mode', dest='sweep_mode')
    sweep.add_argument('--bandwidths', type=_float_list)
    sweep.add_argument('--separation', type=float)
    sweep.add_argument('--target', choices=('two-point', 'two-bar'))
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    setup_logging(logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO)
    try:
        rc = resolve_config(args)
        return COMMANDS[rc.subcommand](rc)
    except SubRayleighError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except OSError as exc:
        logger.error("I/O failure: %s", exc)
        return 4


if __name__ == '__main__':
    sys.exit(main())
