"""
Write the bundled test objects as PGM files

Produces two-point, two-bar, glyph, grating and point targets at the requested
grid so they can be inspected or fed back to `cli.py render --input`.
The two-object separation defaults to 0.6 x_R/m at the default optics.
"""

import os
import sys
from typing import Optional, Sequence

# Add parent directory to path for imports
SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))
PROJECT_ROOT = os.path.abspath(os.path.join(SCRIPT_DIR, '..'))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

import config  # noqa: E402
import optics  # noqa: E402
import scene  # noqa: E402
from errors import SubRayleighError  # noqa: E402


def main(out_dir: str, resolution: int = config.RENDER_GRID, side: float = config.FRAME_SIDE,
         separation: Optional[float] = None, names: Sequence[str] = scene.TARGETS) -> int:
    """Write one PGM per bundled target into ``out_dir``."""
    if separation is None:
        cfg = optics.OpticalConfig()
        separation = 0.6 * optics.rayleigh_radius(cfg) / cfg.m
    print(f"Targets: {', '.join(names)}  (G={resolution}, side={side:g}, separation={separation:.5g})")
    try:
        for name in names:
            grid = scene.bundled_target(name, resolution, side, separation)
            path = os.path.join(out_dir, f"{name}.pgm")
            scene.save_pgm(grid, path)
            print(f"   {name:<10} -> {path}")
    except SubRayleighError as e:
        print(f"\nFATAL ERROR: {e}")
        return e.exit_code
    return 0


if __name__ == "__main__":
    import argparse
    parser = argparse.ArgumentParser(description='Write the bundled object targets as PGM files')
    parser.add_argument('--out-dir', default=os.path.join(PROJECT_ROOT, 'targets'))
    parser.add_argument('--grid', type=int, default=config.RENDER_GRID)
    parser.add_argument('--side', type=float, default=config.FRAME_SIDE)
    parser.add_argument('--separation', type=float, default=None)
    parser.add_argument('--target', action='append', choices=scene.TARGETS,
                        help='target to write (repeatable, default all)')
    args = parser.parse_args()

    sys.exit(main(args.out_dir, args.grid, args.side, args.separation, args.target or scene.TARGETS))
