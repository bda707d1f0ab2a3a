"""File output: CSV tables, complex64 blobs and JSON sidecar manifests.

Numbers are written with ``repr``-exact formatting and no timestamps, so a
fixed scenario and seed always produce byte-identical files.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def _fmt(x) -> str:
    return repr(float(x))


def write_json(path, payload) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2, default=_default) + "\n")
    return path


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def write_sidecar(path, manifest: dict) -> Path:
    path = Path(path)
    return write_json(path.with_name(path.name + ".manifest.json"), dict(manifest, file=path.name))


def write_table(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (int, np.integer, str)) else _fmt(v) for v in row])
    return path


def write_realizations_csv(path, realizations) -> Path:
    def rows():
        for n, r in enumerate(realizations):
            h = np.asarray(r.h)
            for i in range(h.shape[0]):
                for j in range(h.shape[1]):
                    yield (n, i, j, h[i, j].real, h[i, j].imag)

    return write_table(path, ("realization", "r_index", "s_index", "re", "im"), rows())


def write_blob(path, realizations) -> tuple[Path, dict]:
    """Raw little-endian complex64 array of shape ``(N, P_r, P_s)``, C order."""
    h = np.stack([np.asarray(r.h) for r in realizations]).astype("<c8")
    path = Path(path)
    path.write_bytes(h.tobytes(order="C"))
    return path, {"dtype": "complex64", "byteorder": "little", "shape": list(h.shape), "order": "C"}


def read_blob(path, shape) -> np.ndarray:
    return np.frombuffer(Path(path).read_bytes(), dtype="<c8").reshape(shape)
