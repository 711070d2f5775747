"""Checkpoint container: one JSON header line, then raw float64 arrays.

The header records the model config, freeze flags, and a named-array index
with shapes and byte offsets; arrays follow in index order as little-endian
64-bit floats in C order. Loading verifies every shape against the config.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import ModelConfig
from .network import ModelBundle, param_shapes

FORMAT_NAME = "editrec-checkpoint"
FORMAT_VERSION = 1


class CheckpointError(Exception):
    """Raised when a checkpoint is unreadable or inconsistent."""


def save_bundle(bundle: ModelBundle, path: str | Path) -> None:
    names = list(bundle.params)
    index = []
    offset = 0
    for name in names:
        arr = bundle.params[name]
        nbytes = arr.size * 8
        index.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += nbytes
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "config": bundle.config.to_dict(),
        "freeze": bundle.freeze,
        "arrays": index,
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        f.write(b"\n")
        for name in names:
            f.write(np.ascontiguousarray(bundle.params[name], dtype="<f8").tobytes())


def load_bundle(path: str | Path) -> ModelBundle:
    try:
        with open(path, "rb") as f:
            header_line = f.readline()
            blob = f.read()
        header = json.loads(header_line.decode("utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"unreadable checkpoint {path}: {e}") from e

    if header.get("format") != FORMAT_NAME:
        raise CheckpointError(f"{path} is not a {FORMAT_NAME} file")
    config = ModelConfig.from_dict(header["config"])
    expected = param_shapes(config)

    listed = {entry["name"]: entry for entry in header["arrays"]}
    if set(listed) != set(expected):
        missing = sorted(set(expected) - set(listed))
        extra = sorted(set(listed) - set(expected))
        raise CheckpointError(f"array index mismatch: missing={missing} extra={extra}")

    params: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        name, shape, offset = entry["name"], tuple(entry["shape"]), entry["offset"]
        if shape != expected[name]:
            raise CheckpointError(
                f"shape mismatch for {name}: header {shape}, config expects {expected[name]}"
            )
        count = int(np.prod(shape)) if shape else 1
        end = offset + count * 8
        if end > len(blob):
            raise CheckpointError(f"truncated checkpoint: {name} extends past end of file")
        params[name] = np.frombuffer(blob[offset:end], dtype="<f8").reshape(shape).copy()
    return ModelBundle(config=config, params=params, freeze=dict(header["freeze"]))
