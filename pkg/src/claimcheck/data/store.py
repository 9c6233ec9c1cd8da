"""Keyed binary store of precomputed embeddings (CCNSTOR1 format).

Layout, all integers little-endian::

    file     := magic[8] = "CCNSTOR1", u32 n_sections, section*
    section  := tag str16, u32 kind, u32 dim, u32 count, key-table, payload
    kind     := 0 (float rows) | 1 (string lists)
    key-table:= count * (key str16, u32 rows)      # rows = string count for kind 1
    payload  := kind 0: packed float32 rows, key-table order, rows*dim each
                kind 1: rows * str16 per key, key-table order
    str16    := u16 byte-length, utf-8 bytes

Keys are sorted per section and sections are written in a fixed order, so
a store's bytes are a pure function of its contents: write -> read ->
write round-trips bit-exactly. Floats live on disk as 32-bit and are
promoted to float64 in memory.

The standard sections and their widths (the backbone dimensions) are in
``SECTION_DIMS``; stores for reduced-width experiments may declare other
widths, the header always wins. Token matrices are capped at 150 rows.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import StoreFormatError

MAGIC = b"CCNSTOR1"

SECTION_DIMS = {
    "image_obj": 2048,
    "image_scene": 2048,
    "sentence": 768,
    "tokens": 768,
    "clip_image": 512,
    "clip_text": 512,
}
STRING_SECTIONS = ("image_labels", "caption_entities")
SECTION_ORDER = (
    "image_obj", "image_scene", "sentence", "tokens",
    "clip_image", "clip_text", "image_labels", "caption_entities",
)
MAX_TOKEN_ROWS = 150

_FLOAT_KIND = 0
_STRING_KIND = 1


class EmbeddingStore:
    """In-memory view of one store file; float data is float64."""

    def __init__(self, dims: dict[str, int] | None = None):
        self._dims = dict(SECTION_DIMS)
        if dims:
            self._dims.update(dims)
        self.float_sections: dict[str, dict[str, np.ndarray]] = {}
        self.string_sections: dict[str, dict[str, list[str]]] = {}

    # -- writing ---------------------------------------------------------

    def dim(self, section: str) -> int:
        try:
            return self._dims[section]
        except KeyError:
            raise StoreFormatError(f"unknown float section {section!r}") from None

    def add_vector(self, section: str, key: str, vec) -> None:
        arr = np.asarray(vec, dtype=np.float64).reshape(1, -1)
        self._add_rows(section, key, arr, max_rows=1)

    def add_tokens(self, key: str, mat) -> None:
        arr = np.asarray(mat, dtype=np.float64)
        if arr.ndim != 2:
            raise StoreFormatError(f"tokens[{key!r}]: expected a 2-d matrix")
        self._add_rows("tokens", key, arr, max_rows=MAX_TOKEN_ROWS)

    def _add_rows(self, section: str, key: str, arr: np.ndarray, max_rows: int) -> None:
        dim = self.dim(section)
        if arr.shape[1] != dim:
            raise StoreFormatError(
                f"{section}[{key!r}]: width {arr.shape[1]} != declared {dim}"
            )
        if not 1 <= arr.shape[0] <= max_rows:
            raise StoreFormatError(
                f"{section}[{key!r}]: {arr.shape[0]} rows outside 1..{max_rows}"
            )
        if not np.all(np.isfinite(arr)):
            raise StoreFormatError(f"{section}[{key!r}]: non-finite values")
        self.float_sections.setdefault(section, {})[key] = arr

    def add_strings(self, section: str, key: str, values: list[str]) -> None:
        if section not in STRING_SECTIONS:
            raise StoreFormatError(f"unknown string section {section!r}")
        self.string_sections.setdefault(section, {})[key] = [str(v) for v in values]

    # -- reading ---------------------------------------------------------

    def vector(self, section: str, key: str) -> np.ndarray:
        rows = self._rows(section, key)
        return rows[0]

    def tokens(self, key: str) -> np.ndarray:
        return self._rows("tokens", key)

    def _rows(self, section: str, key: str) -> np.ndarray:
        try:
            return self.float_sections[section][key]
        except KeyError:
            raise KeyError(f"store has no {section}[{key!r}]") from None

    def strings(self, section: str, key: str) -> list[str]:
        try:
            return self.string_sections[section][key]
        except KeyError:
            raise KeyError(f"store has no {section}[{key!r}]") from None

    def has(self, section: str, key: str) -> bool:
        if section in STRING_SECTIONS:
            return key in self.string_sections.get(section, {})
        return key in self.float_sections.get(section, {})

    def counts(self) -> dict[str, int]:
        out = {s: len(d) for s, d in self.float_sections.items()}
        out.update({s: len(d) for s, d in self.string_sections.items()})
        return out

    def validate_dims(self, expected: dict[str, int]) -> None:
        for section, dim in expected.items():
            if section in self.float_sections and self._dims.get(section) != dim:
                raise StoreFormatError(
                    f"section {section!r} has width {self._dims.get(section)}, expected {dim}"
                )

    # -- serialization ------------------------------------------------------

    def write(self, path: str | Path) -> None:
        chunks = [MAGIC]
        names = [s for s in SECTION_ORDER if self._nonempty(s)]
        extras = (set(self.float_sections) | set(self.string_sections)) - set(SECTION_ORDER)
        names += sorted(extras)
        chunks.append(struct.pack("<I", len(names)))
        for name in names:
            chunks.append(self._pack_section(name))
        Path(path).write_bytes(b"".join(chunks))

    def _nonempty(self, section: str) -> bool:
        return bool(self.float_sections.get(section) or self.string_sections.get(section))

    def _pack_section(self, name: str) -> bytes:
        out = [_pack_str(name)]
        if name in self.float_sections:
            data = self.float_sections[name]
            dim = self.dim(name)
            out.append(struct.pack("<III", _FLOAT_KIND, dim, len(data)))
            keys = sorted(data)
            for key in keys:
                out.append(_pack_str(key))
                out.append(struct.pack("<I", data[key].shape[0]))
            for key in keys:
                out.append(data[key].astype("<f4").tobytes(order="C"))
        else:
            data = self.string_sections[name]
            out.append(struct.pack("<III", _STRING_KIND, 0, len(data)))
            keys = sorted(data)
            for key in keys:
                out.append(_pack_str(key))
                out.append(struct.pack("<I", len(data[key])))
            for key in keys:
                for s in data[key]:
                    out.append(_pack_str(s))
        return b"".join(out)

    @classmethod
    def read(cls, path: str | Path) -> "EmbeddingStore":
        buf = Path(path).read_bytes()
        if buf[:8] != MAGIC:
            raise StoreFormatError(
                f"{path}: bad magic {buf[:8]!r}, expected {MAGIC.decode()}"
            )
        r = _Reader(buf, 8, str(path))
        n_sections = r.u32()
        dims: dict[str, int] = {}
        store = cls.__new__(cls)
        store.float_sections = {}
        store.string_sections = {}
        for _ in range(n_sections):
            tag = r.str16()
            kind, dim, count = r.u32(), r.u32(), r.u32()
            if kind == _FLOAT_KIND:
                keys = [(r.str16(), r.u32()) for _ in range(count)]
                section: dict[str, np.ndarray] = {}
                for key, rows in keys:
                    max_rows = MAX_TOKEN_ROWS if tag == "tokens" else 1
                    if not 1 <= rows <= max_rows:
                        raise StoreFormatError(
                            f"{path}: {tag}[{key!r}] declares {rows} rows (cap {max_rows})"
                        )
                    raw = r.take(rows * dim * 4)
                    arr = np.frombuffer(raw, dtype="<f4").astype(np.float64)
                    section[key] = arr.reshape(rows, dim)
                store.float_sections[tag] = section
                dims[tag] = dim
            elif kind == _STRING_KIND:
                keys = [(r.str16(), r.u32()) for _ in range(count)]
                ssec: dict[str, list[str]] = {}
                for key, n in keys:
                    ssec[key] = [r.str16() for _ in range(n)]
                store.string_sections[tag] = ssec
            else:
                raise StoreFormatError(f"{path}: unknown section kind {kind}")
        if r.pos != len(buf):
            raise StoreFormatError(f"{path}: {len(buf) - r.pos} trailing bytes")
        store._dims = dict(SECTION_DIMS)
        store._dims.update(dims)
        return store


class _Reader:
    def __init__(self, buf: bytes, pos: int, path: str):
        self.buf, self.pos, self.path = buf, pos, path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise StoreFormatError(f"{self.path}: truncated (wanted {n} more bytes)")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def str16(self) -> str:
        n = struct.unpack("<H", self.take(2))[0]
        return self.take(n).decode("utf-8")


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise StoreFormatError(f"string too long for str16: {len(raw)} bytes")
    return struct.pack("<H", len(raw)) + raw
