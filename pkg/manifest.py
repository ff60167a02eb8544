"""Run manifests for the CLI.

Each render run starts a fresh `manifest.csv` in the output directory and
appends one row per panel; every run also dumps its fully resolved configuration to
`run_config.json` so it can be reproduced.
"""
import json
import logging
import os
import time
from datetime import datetime, timezone
from typing import Any, Dict

import pandas as pd

from errors import StorageError
from tools.csv_utils import safe_append_row, safe_write_frame

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.csv"
RUN_CONFIG_NAME = "run_config.json"

# Column order of manifest.csv
REQUIRED_HEADERS = [
    'engine',
    'N',
    'log_raw_peak',
    'sharpness',
    'runtime_s',
    'file',
    'gamma',
    'rms_vs_approx',
]


def manifest_path(output_dir: str) -> str:
    return os.path.join(output_dir, MANIFEST_NAME)


def start_manifest(output_dir: str) -> None:
    """Reset manifest.csv to a bare header; each render run owns the whole file."""
    try:
        safe_write_frame(manifest_path(output_dir), pd.DataFrame(columns=REQUIRED_HEADERS))
    except OSError as e:
        raise StorageError(f"cannot reset {manifest_path(output_dir)}: {e}") from e


def append_manifest_row(output_dir: str, row: Dict[str, Any]) -> None:
    """Append one panel record; missing columns are left empty."""
    full = {key: row.get(key, '') for key in REQUIRED_HEADERS}
    try:
        safe_append_row(manifest_path(output_dir), full, REQUIRED_HEADERS)
    except OSError as e:
        raise StorageError(f"cannot append to {manifest_path(output_dir)}: {e}") from e


def write_run_config(output_dir: str, command: str, resolved: Dict[str, Any]) -> str:
    """Dump the resolved configuration of this run next to its outputs."""
    path = os.path.join(output_dir, RUN_CONFIG_NAME)
    payload = {
        'command': command,
        'config': resolved,
        'written': int(time.time()),
        'written_utc': datetime.now(timezone.utc).strftime('%Y-%m-%d %H:%M:%S'),
    }
    try:
        os.makedirs(output_dir, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(payload, f, indent=2, default=str)
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e}") from e
    logger.debug("[Manifest] wrote %s", path)
    return path


__all__ = [
    "MANIFEST_NAME",
    "RUN_CONFIG_NAME",
    "REQUIRED_HEADERS",
    "start_manifest",
    "manifest_path",
    "append_manifest_row",
    "write_run_config",
]
