from __future__ import annotations

import json
import logging
import os
import struct
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from geometry import PointSet

logger = logging.getLogger(__name__)

MAGIC = b"MEBD"
FORMAT_VERSION = 1
# magic, u16 version, u64 n, u64 d (all little-endian)
HEADER = struct.Struct("<4sHQQ")


class DatasetFormatError(ValueError):
    """A dataset file could not be decoded."""


@dataclass
class Sidecar:
    spec: Dict[str, Any] = field(default_factory=dict)
    inliers: Optional[List[int]] = None
    beta_hint: Optional[float] = None
    # mode -> {"radius": float, "center": [...], "epsilon": float}
    references: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    version: int = 1


def write_mebd(path: str, points: PointSet) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    payload = np.ascontiguousarray(points.data, dtype="<f8")
    with open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, FORMAT_VERSION, points.n, points.d))
        f.write(payload.tobytes(order="C"))


def read_mebd(path: str) -> PointSet:
    with open(path, "rb") as f:
        head = f.read(HEADER.size)
        if len(head) < HEADER.size:
            raise DatasetFormatError(f"{path}: truncated header")
        magic, version, n, d = HEADER.unpack(head)
        if magic != MAGIC:
            raise DatasetFormatError(f"{path}: bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise DatasetFormatError(f"{path}: unsupported format version {version}")
        payload = f.read()
    expected = n * d * 8
    if len(payload) != expected:
        raise DatasetFormatError(f"{path}: payload is {len(payload)} bytes, expected {expected} for n={n}, d={d}")
    data = np.frombuffer(payload, dtype="<f8").reshape(n, d).astype(np.float64)
    if not np.isfinite(data).all():
        raise DatasetFormatError(f"{path}: non-finite coordinates")
    return PointSet(data)


def read_csv(path: str) -> PointSet:
    rows: List[List[float]] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append([float(x) for x in line.split(",")])
            except ValueError as e:
                raise DatasetFormatError(f"{path}:{lineno}: {e}") from e
    if not rows:
        raise DatasetFormatError(f"{path}: no points")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DatasetFormatError(f"{path}: ragged rows")
    data = np.asarray(rows, dtype=np.float64)
    if not np.isfinite(data).all():
        raise DatasetFormatError(f"{path}: non-finite coordinates")
    return PointSet(data)


def load_points(path: str) -> PointSet:
    if path.lower().endswith(".csv"):
        return read_csv(path)
    return read_mebd(path)


def sidecar_path(dataset_path: str) -> str:
    return dataset_path + ".json"


def load_sidecar(dataset_path: str) -> Sidecar:
    path = sidecar_path(dataset_path)
    if not os.path.exists(path):
        return Sidecar()
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    inliers = data.get("inliers")
    return Sidecar(
        spec=dict(data.get("spec") or {}),
        inliers=[int(i) for i in inliers] if inliers is not None else None,
        beta_hint=data.get("beta_hint"),
        references=dict(data.get("references") or {}),
        version=int(data.get("version", 1)),
    )


def save_sidecar(dataset_path: str, sidecar: Sidecar) -> None:
    path = sidecar_path(dataset_path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(
            {
                "version": sidecar.version,
                "spec": sidecar.spec,
                "inliers": sidecar.inliers,
                "beta_hint": sidecar.beta_hint,
                "references": sidecar.references,
            },
            f,
            indent=2,
            sort_keys=True,
        )
