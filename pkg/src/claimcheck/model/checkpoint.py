"""Versioned binary checkpoints (CCNCKPT1).

Layout, little-endian::

    magic[8] = "CCNCKPT1"
    u32 config-json length, utf-8 bytes     (the CcnConfig)
    u32 vocab-json length, utf-8 bytes      ({"domains": [...]} or null)
    u32 n_arrays
    per array (sorted by name):
        str16 name, u8 kind (0 parameter, 1 buffer),
        u32 ndim, u32 dims..., float32 payload

Values are stored as float32; loading promotes to float64, so a
save -> load -> save cycle is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from ..data.vocab import DomainVocabulary
from ..errors import StoreFormatError
from .config import CcnConfig
from .network import ConsistencyModel

MAGIC = b"CCNCKPT1"


def save_checkpoint(model: ConsistencyModel, path: str | Path) -> None:
    arrays: list[tuple[str, int, np.ndarray]] = []
    for name, p in model.parameters().items():
        arrays.append((name, 0, p.value))
    for name, buf in model.buffers().items():
        arrays.append((name, 1, buf))
    arrays.sort(key=lambda t: t[0])

    cfg_raw = json.dumps(model.config.to_dict(), sort_keys=True).encode("utf-8")
    vocab_obj = {"domains": model.vocab.domains} if model.vocab is not None else None
    vocab_raw = json.dumps(vocab_obj, sort_keys=True).encode("utf-8")

    chunks = [MAGIC]
    chunks.append(struct.pack("<I", len(cfg_raw)))
    chunks.append(cfg_raw)
    chunks.append(struct.pack("<I", len(vocab_raw)))
    chunks.append(vocab_raw)
    chunks.append(struct.pack("<I", len(arrays)))
    for name, kind, arr in arrays:
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<BI", kind, arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path: str | Path, seed: int = 0) -> ConsistencyModel:
    buf = Path(path).read_bytes()
    if buf[:8] != MAGIC:
        raise StoreFormatError(f"{path}: bad checkpoint magic {buf[:8]!r}")
    pos = 8

    def u32() -> int:
        nonlocal pos
        (v,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        return v

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(buf):
            raise StoreFormatError(f"{path}: truncated checkpoint")
        out = buf[pos:pos + n]
        pos += n
        return out

    config = CcnConfig.from_dict(json.loads(take(u32()).decode("utf-8")))
    vocab_obj = json.loads(take(u32()).decode("utf-8"))
    vocab = DomainVocabulary(vocab_obj["domains"]) if vocab_obj is not None else None

    model = ConsistencyModel(config, vocab, seed=seed)
    params = model.parameters()
    buffers = model.buffers()

    n_arrays = u32()
    seen: set[str] = set()
    for _ in range(n_arrays):
        (nlen,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        name = take(nlen).decode("utf-8")
        kind, ndim = struct.unpack_from("<BI", buf, pos)
        pos += 5
        shape = struct.unpack_from(f"<{ndim}I", buf, pos)
        pos += 4 * ndim
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(take(count * 4), dtype="<f4").astype(np.float64).reshape(shape)
        target = params if kind == 0 else buffers
        if name not in target:
            raise StoreFormatError(f"{path}: unknown array {name!r} for this config")
        if tuple(target[name].shape if kind else target[name].shape) != tuple(shape):
            raise StoreFormatError(
                f"{path}: array {name!r} has shape {tuple(shape)}, model expects "
                f"{tuple(target[name].shape)}"
            )
        if kind == 0:
            params[name].value[...] = arr
        else:
            target[name][...] = arr
        seen.add(name)
    missing = (set(params) | set(buffers)) - seen
    if missing:
        raise StoreFormatError(f"{path}: checkpoint is missing {sorted(missing)[0]!r}")
    if pos != len(buf):
        raise StoreFormatError(f"{path}: {len(buf) - pos} trailing bytes")
    return model


def checkpoint_fingerprint(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def config_fingerprint(config: CcnConfig) -> str:
    raw = json.dumps(config.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(raw).hexdigest()
