"""Versioned container for named parameter tensors.

Layout (documented here and in the README):

* first line: UTF-8 JSON header terminated by ``\\n`` —
  ``{"format": "tensor-container", "version": 1, "meta": {...},
  "tensors": [{"name": ..., "shape": [...]}, ...]}``
* then, for each tensor in header order, its raw data: little-endian
  float64, C order, ``8 * prod(shape)`` bytes.

Round trips are lossless: the bytes written are the bytes read back.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import UserInputError

FORMAT_NAME = "tensor-container"
FORMAT_VERSION = 1


def save_tensors(path, tensors: dict[str, np.ndarray], meta: dict | None = None) -> None:
    """Write named float64 tensors plus a JSON ``meta`` blob to ``path``."""
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "meta": meta or {},
        "tensors": [
            {"name": name, "shape": list(arr.shape)} for name, arr in tensors.items()
        ],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        for arr in tensors.values():
            data = np.ascontiguousarray(arr, dtype="<f8")
            fh.write(data.tobytes())


def load_tensors(path) -> tuple[dict[str, np.ndarray], dict]:
    """Read a container written by :func:`save_tensors`."""
    path = Path(path)
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise UserInputError(f"{path}: malformed container header: {exc}") from None
        if header.get("format") != FORMAT_NAME:
            raise UserInputError(f"{path}: not a {FORMAT_NAME} file")
        if header.get("version") != FORMAT_VERSION:
            raise UserInputError(
                f"{path}: unsupported container version {header.get('version')!r}"
            )
        tensors: dict[str, np.ndarray] = {}
        for entry in header["tensors"]:
            name, shape = entry["name"], tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(8 * count)
            if len(raw) != 8 * count:
                raise UserInputError(f"{path}: truncated data for tensor {name!r}")
            tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        if fh.read(1):
            raise UserInputError(f"{path}: trailing bytes after last tensor")
    return tensors, header.get("meta", {})
