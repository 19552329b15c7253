"""Binary checkpoints: magic, JSON header, little-endian f64 payload, CRC32 trailer."""
from __future__ import annotations

import json
import os
import struct
import zlib
from pathlib import Path

import numpy as np

from .model import ModelSpec, ParamLayout

MAGIC = b"GAMSPCK\x00"
VERSION = 1


class CheckpointError(ValueError):
    pass


def dumps(theta: np.ndarray, spec: ModelSpec, meta: dict | None = None) -> bytes:
    layout = ParamLayout.for_spec(spec)
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (layout.size,):
        raise CheckpointError(f"parameter vector has {theta.size} entries, layout wants {layout.size}")
    header = {
        "version": VERSION,
        "model": {"widths": list(spec.widths), "leaky_slope": spec.leaky_slope},
        "layout": layout.describe(),
        "n_params": layout.size,
        "meta": meta or {},
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = MAGIC + struct.pack("<HI", VERSION, len(hbytes)) + hbytes + theta.astype("<f8").tobytes()
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def loads(blob: bytes) -> tuple[np.ndarray, ModelSpec, dict]:
    if len(blob) < len(MAGIC) + 10 or blob[:len(MAGIC)] != MAGIC:
        raise CheckpointError("not a checkpoint (bad magic)")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise CheckpointError("CRC mismatch: checkpoint is corrupt")
    version, hlen = struct.unpack("<HI", body[len(MAGIC):len(MAGIC) + 6])
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    start = len(MAGIC) + 6
    header = json.loads(body[start:start + hlen].decode("utf-8"))
    theta = np.frombuffer(body[start + hlen:], dtype="<f8").astype(np.float64)
    spec = ModelSpec(tuple(header["model"]["widths"]), header["model"]["leaky_slope"])
    if theta.size != header["n_params"] or ParamLayout.for_spec(spec).describe() != header["layout"]:
        raise CheckpointError("payload does not match the declared layout")
    return theta, spec, header["meta"]


def save_checkpoint(path, theta, spec: ModelSpec, meta: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(dumps(theta, spec, meta))
    os.replace(tmp, path)


def load_checkpoint(path) -> tuple[np.ndarray, ModelSpec, dict]:
    return loads(Path(path).read_bytes())
