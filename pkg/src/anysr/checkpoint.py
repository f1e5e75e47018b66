"""Binary checkpoint format for the shared weight store.

Layout, all integers little-endian:

    magic   b"ANYSR1\\n"
    u32     tensor count
    per tensor:
        u16      name length, then the utf-8 name
        u8       dtype code (0 = float64, 1 = float32)
        u8       rank
        u32 * r  extents
    raw tensor payloads, C order, manifest order
    u32     config byte length, then key=value lines (utf-8)

Reading validates the magic and that the manifest-implied byte count matches
the file exactly. Writes are atomic: temp file in the target directory, then
rename.
"""

from __future__ import annotations

import os
import struct
import tempfile
from typing import Dict, Tuple

import numpy as np

from .backbone import BackboneConfig, SharedWeightStore
from .errors import DataError
from .numerics import Tensor

MAGIC = b"ANYSR1\n"

_DTYPE_CODES = {"float64": 0, "float32": 1}
_CODE_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<f4")}


def _config_text(cfg: BackboneConfig) -> str:
    lines = [
        f"c_in={cfg.c_in}",
        f"n_blocks={cfg.n_blocks}",
        f"kernel={cfg.kernel}",
        f"lambda={cfg.lam}",
        "widths=" + ",".join(repr(w) for w in cfg.widths),
        f"ase_mode={cfg.ase_mode}",
        f"ase_bias={'true' if cfg.ase_bias else 'false'}",
        f"hidden={cfg.hidden}",
        f"dtype={cfg.dtype}",
    ]
    return "\n".join(lines) + "\n"


def _config_from_text(text: str) -> BackboneConfig:
    kv: Dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"malformed checkpoint config line: {line!r}")
        key, value = line.split("=", 1)
        kv[key.strip()] = value.strip()
    try:
        return BackboneConfig(
            c_in=int(kv["c_in"]),
            n_blocks=int(kv["n_blocks"]),
            kernel=int(kv["kernel"]),
            lam=int(kv["lambda"]),
            widths=tuple(float(v) for v in kv["widths"].split(",")),
            ase_mode=kv["ase_mode"],
            ase_bias=kv["ase_bias"] == "true",
            hidden=int(kv["hidden"]),
            dtype=kv["dtype"],
        )
    except KeyError as missing:
        raise DataError(f"checkpoint config missing key {missing}") from None


def checkpoint_bytes(store: SharedWeightStore) -> bytes:
    chunks = [MAGIC, struct.pack("<I", len(store.tensors))]
    payloads = []
    for name, tensor in store.tensors.items():
        encoded = name.encode("utf-8")
        arr = tensor.data
        code = _DTYPE_CODES[store.config.dtype]
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<BB", code, arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        payloads.append(np.ascontiguousarray(arr, dtype=_CODE_DTYPES[code]).tobytes())
    chunks.extend(payloads)
    cfg_bytes = _config_text(store.config).encode("utf-8")
    chunks.append(struct.pack("<I", len(cfg_bytes)))
    chunks.append(cfg_bytes)
    return b"".join(chunks)


def save_checkpoint(store: SharedWeightStore, path: str) -> None:
    blob = checkpoint_bytes(store)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ckpt-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.blob):
            raise DataError("checkpoint truncated")
        out = self.blob[self.pos:self.pos + count]
        self.pos += count
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path: str) -> SharedWeightStore:
    try:
        with open(path, "rb") as handle:
            blob = handle.read()
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from None

    reader = _Reader(blob)
    if reader.take(len(MAGIC)) != MAGIC:
        raise DataError(f"{path}: bad magic, not a checkpoint")
    (count,) = reader.unpack("<I")
    manifest = []
    payload_len = 0
    for _ in range(count):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8")
        code, rank = reader.unpack("<BB")
        if code not in _CODE_DTYPES:
            raise DataError(f"{path}: unknown dtype code {code} for {name!r}")
        shape: Tuple[int, ...] = reader.unpack(f"<{rank}I") if rank else ()
        manifest.append((name, code, shape))
        payload_len += int(np.prod(shape, dtype=np.int64)) * _CODE_DTYPES[code].itemsize

    expected = reader.pos + payload_len + 4
    if len(blob) < expected:
        raise DataError(f"{path}: truncated payload region")

    tensors: Dict[str, Tensor] = {}
    for name, code, shape in manifest:
        dtype = _CODE_DTYPES[code]
        size = int(np.prod(shape, dtype=np.int64))
        raw = reader.take(size * dtype.itemsize)
        data = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
        if name in tensors:
            raise DataError(f"{path}: duplicate tensor name {name!r}")
        tensors[name] = Tensor(data, requires_grad=True)

    (cfg_len,) = reader.unpack("<I")
    cfg_text = reader.take(cfg_len).decode("utf-8")
    if reader.pos != len(blob):
        raise DataError(f"{path}: {len(blob) - reader.pos} trailing bytes")
    cfg = _config_from_text(cfg_text)
    try:
        return SharedWeightStore(cfg, tensors)
    except Exception as exc:
        raise DataError(f"{path}: checkpoint does not match its config: {exc}") from None
