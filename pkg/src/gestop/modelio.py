"""Versioned on-disk model container.

Layout (see docs/model-format.md): one UTF-8 JSON header line describing
schema/feature-layout versions, kind, labels, architecture sizes and the
array table, followed by the raw little-endian float64 bytes of each
array in table order. No timestamps or other nondeterminism: saving the
same model twice yields byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .features import FEATURE_LAYOUT_VERSION
from .nn import DynamicNet, StaticNet

MODEL_SCHEMA_VERSION = 1
_MAGIC = "gestop-model"


class ModelIOError(Exception):
    pass


class IncompatibleModelVersion(ModelIOError):
    pass


class CorruptModelFile(ModelIOError):
    pass


def save_model(model: StaticNet | DynamicNet, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = sorted(model.params)
    header = {
        "format": _MAGIC,
        "schema_version": MODEL_SCHEMA_VERSION,
        "feature_layout": FEATURE_LAYOUT_VERSION,
        "kind": model.kind,
        "labels": list(model.labels),
        "sizes": model.sizes,
        "arrays": [
            {"name": n, "shape": list(model.params[n].shape)} for n in names
        ],
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        f.write(b"\n")
        for n in names:
            f.write(np.ascontiguousarray(model.params[n], dtype="<f8").tobytes())


def load_model(path: str | Path) -> StaticNet | DynamicNet:
    path = Path(path)
    with open(path, "rb") as f:
        header_line = f.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CorruptModelFile(f"{path}: unreadable header") from exc
        if header.get("format") != _MAGIC:
            raise CorruptModelFile(f"{path}: not a model file")
        if header.get("schema_version") != MODEL_SCHEMA_VERSION:
            raise IncompatibleModelVersion(
                f"{path}: schema version {header.get('schema_version')}, "
                f"this build reads {MODEL_SCHEMA_VERSION}"
            )
        if header.get("feature_layout") != FEATURE_LAYOUT_VERSION:
            raise IncompatibleModelVersion(
                f"{path}: feature layout {header.get('feature_layout')}, "
                f"this build computes layout {FEATURE_LAYOUT_VERSION}"
            )
        params = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = f.read(count * 8)
            if len(raw) != count * 8:
                raise CorruptModelFile(f"{path}: truncated array {entry['name']}")
            params[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        if f.read(1):
            raise CorruptModelFile(f"{path}: trailing bytes after last array")

    kind = header.get("kind")
    labels = tuple(header["labels"])
    sizes = header["sizes"]
    try:
        if kind == "static":
            return StaticNet(labels, input_dim=sizes["input_dim"],
                             hidden=sizes["hidden"], params=params)
        if kind == "dynamic":
            return DynamicNet(labels, input_dim=sizes["input_dim"],
                              encoder=sizes["encoder"], hidden=sizes["hidden"],
                              params=params)
    except (KeyError, ValueError) as exc:
        raise CorruptModelFile(f"{path}: inconsistent header/arrays: {exc}") from exc
    raise CorruptModelFile(f"{path}: unknown model kind {kind!r}")
