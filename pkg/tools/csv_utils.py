"""tools/csv_utils
File-locked CSV helpers for run outputs.

`safe_append_row` appends one manifest row under an exclusive portalocker
lock; `safe_write_frame` replaces a whole table atomically (tmp file +
os.replace under a sidecar lock) so readers never see a half-written CSV.
"""

import csv
import os
import tempfile

import pandas as pd
import portalocker


def _ensure_parent(path: str) -> None:
    dirn = os.path.dirname(path)
    if dirn:
        os.makedirs(dirn, exist_ok=True)


def safe_append_row(csv_path: str, row: dict, fieldnames: list):
    """Append a single row to CSV with file locking. Creates header if file empty."""
    _ensure_parent(csv_path)
    with open(csv_path, 'a+', encoding='utf-8', newline='') as f:
        portalocker.lock(f, portalocker.LockFlags.EXCLUSIVE)
        try:
            f.seek(0)
            first = f.read(1)
            writer = csv.DictWriter(f, fieldnames=fieldnames, extrasaction='ignore')
            if first == '':
                f.seek(0)
                writer.writeheader()
            else:
                f.seek(0, os.SEEK_END)
            writer.writerow(row)
            f.flush()
            try:
                os.fsync(f.fileno())
            except OSError:
                pass
        finally:
            try:
                portalocker.unlock(f)
            except Exception:
                pass


def safe_write_frame(csv_path: str, frame: pd.DataFrame):
    """Write a DataFrame to CSV through an atomic tmp-replace."""
    _ensure_parent(csv_path)
    dirn = os.path.dirname(os.path.abspath(csv_path))
    fd, tmp_path = tempfile.mkstemp(prefix='csv_tmp_', suffix='.csv', dir=dirn)
    os.close(fd)
    try:
        frame.to_csv(tmp_path, index=False)
        lock_path = csv_path + '.lock'
        with open(lock_path, 'w', encoding='utf-8') as lf:
            portalocker.lock(lf, portalocker.LockFlags.EXCLUSIVE)
            try:
                os.replace(tmp_path, csv_path)
            finally:
                try:
                    portalocker.unlock(lf)
                except Exception:
                    pass
    finally:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
