"""Versioned array checkpoints.

A checkpoint is a zip archive of ``.npy`` members (one per named array, row-major
float64) plus a ``__meta__`` member holding a JSON document. Member timestamps
are fixed so identical contents produce identical bytes.
"""

from __future__ import annotations

import json
import zipfile
from pathlib import Path

import numpy as np

FORMAT = "capmix-checkpoint"
VERSION = 1
_EPOCH = (1980, 1, 1, 0, 0, 0)


def save_arrays(path, arrays: dict[str, np.ndarray], meta: dict) -> None:
    meta = {"format": FORMAT, "version": VERSION, **meta}
    with zipfile.ZipFile(Path(path), "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            info = zipfile.ZipInfo(name + ".npy", date_time=_EPOCH)
            with zf.open(info, "w", force_zip64=True) as fh:
                np.lib.format.write_array(fh, np.ascontiguousarray(arrays[name]), allow_pickle=False)
        info = zipfile.ZipInfo("__meta__.json", date_time=_EPOCH)
        zf.writestr(info, json.dumps(meta, sort_keys=True))


def load_arrays(path) -> tuple[dict[str, np.ndarray], dict]:
    arrays = {}
    with zipfile.ZipFile(Path(path)) as zf:
        names = zf.namelist()
        if "__meta__.json" not in names:
            raise ValueError(f"{path}: not a {FORMAT} file")
        meta = json.loads(zf.read("__meta__.json"))
        if meta.get("format") != FORMAT or meta.get("version") != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint {meta.get('format')} v{meta.get('version')}")
        for name in names:
            if name.endswith(".npy"):
                with zf.open(name) as fh:
                    arrays[name[:-4]] = np.lib.format.read_array(fh, allow_pickle=False)
    return arrays, meta
