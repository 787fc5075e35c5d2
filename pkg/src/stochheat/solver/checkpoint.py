"""Binary checkpoints of a single field state.

Layout (little-endian): 8-byte magic, u32 version, 32-byte SHA-256 of the
solver config, f64 time, u64 step, u64 node count, then the node values as
f64.
"""
from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .config import SolverConfig
from .schemes import FieldState

MAGIC = b"SHEFIELD"
VERSION = 1
_HEADER = struct.Struct("<8sI32sdQQ")


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class CheckpointHeader:
    version: int
    config_hash: str
    time: float
    step: int
    n: int


def write_checkpoint(path, state: FieldState, cfg: SolverConfig) -> None:
    values = np.ascontiguousarray(state.values, dtype="<f8")
    header = _HEADER.pack(MAGIC, VERSION, bytes.fromhex(cfg.config_hash()), state.time,
                          state.step, values.size)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".ckpt-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(values.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_checkpoint(path, cfg: SolverConfig | None = None) -> tuple[CheckpointHeader, FieldState]:
    """Read a checkpoint; with ``cfg`` given, its hash must match the file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise CheckpointError("truncated header")
    magic, version, digest, time, step, n = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError("bad magic")
    if version != VERSION:
        raise CheckpointError(f"unsupported version {version}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * n:
        raise CheckpointError(f"expected {n} values, found {len(body) / 8:g}")
    header = CheckpointHeader(version, digest.hex(), time, step, n)
    if cfg is not None and header.config_hash != cfg.config_hash():
        raise CheckpointError("checkpoint was written for a different config")
    values = np.frombuffer(body, dtype="<f8").astype(float)
    return header, FieldState(time, values, step)
