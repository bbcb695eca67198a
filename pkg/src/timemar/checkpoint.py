"""Single-file checkpoint container with a bit-exact round trip.

Layout: 8-byte magic, u32 format version, u64 config length + UTF-8 JSON
config block, u32 tensor count, then per tensor (u16 name length, name,
u8 ndim, u64 dims..., u64 payload bytes, row-major little-endian float32
payload), and a trailing 8-byte checksum over everything before it.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointError, CheckpointVersionError

MAGIC = b"TMARCKPT"
FORMAT_VERSION = 1


def _checksum(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=8).digest()


def save_checkpoint(path: str | Path, config: dict, tensors: dict[str, np.ndarray]) -> None:
    """Write config plus named float32 tensors; overwrites atomically."""
    parts = [MAGIC, struct.pack("<I", FORMAT_VERSION)]
    config_blob = json.dumps(config, sort_keys=True).encode("utf-8")
    parts.append(struct.pack("<Q", len(config_blob)))
    parts.append(config_blob)
    parts.append(struct.pack("<I", len(tensors)))
    for name in sorted(tensors):
        array = np.asarray(tensors[name], dtype="<f4", order="C")
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<B", array.ndim))
        parts.append(struct.pack(f"<{array.ndim}Q", *array.shape))
        payload = array.tobytes()
        parts.append(struct.pack("<Q", len(payload)))
        parts.append(payload)
    body = b"".join(parts)
    blob = body + _checksum(body)
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(blob)
    tmp.replace(path)


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.offset = 0

    def take(self, count: int) -> bytes:
        if self.offset + count > len(self.blob):
            raise CheckpointError("truncated checkpoint file")
        out = self.blob[self.offset : self.offset + count]
        self.offset += count
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    """Read a checkpoint; raises on bad magic, unknown version, or checksum."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"missing checkpoint file: {path}")
    blob = path.read_bytes()
    if len(blob) < len(MAGIC) + 4 + 8:
        raise CheckpointError("truncated checkpoint file")
    body, digest = blob[:-8], blob[-8:]
    if _checksum(body) != digest:
        raise CheckpointError(f"checksum mismatch in {path}")
    reader = _Reader(body)
    if reader.take(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"bad magic in {path}")
    (version,) = reader.unpack("<I")
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"unsupported checkpoint version {version}, expected {FORMAT_VERSION}"
        )
    (config_len,) = reader.unpack("<Q")
    config = json.loads(reader.take(config_len).decode("utf-8"))
    (count,) = reader.unpack("<I")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8")
        (ndim,) = reader.unpack("<B")
        shape = reader.unpack(f"<{ndim}Q") if ndim else ()
        (payload_len,) = reader.unpack("<Q")
        array = np.frombuffer(reader.take(payload_len), dtype="<f4").reshape(shape)
        tensors[name] = array.copy()
    if reader.offset != len(body):
        raise CheckpointError(f"trailing bytes in {path}")
    return config, tensors
