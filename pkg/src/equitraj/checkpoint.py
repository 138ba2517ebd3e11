"""Self-describing checkpoint container.

Layout: an 8-byte magic string, a little-endian uint64 header length,
a UTF-8 JSON header (version, endianness, dtype, seed, flat config,
config hash, parameter manifest in order), then each parameter's raw
float64 little-endian C-order bytes. Writing is bit-deterministic for
identical parameters, config, and seed.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .config import Config, apply_overrides
from .errors import DataError
from .numerics import ParamStore

MAGIC = b"EQTRAJCK"
VERSION = 1


def save_checkpoint(path, store: ParamStore, config: Config, seed: int) -> None:
    manifest = [
        {"name": name, "shape": list(p.data.shape)} for name, p in store.items()
    ]
    header = {
        "version": VERSION,
        "endianness": "little",
        "dtype": "float64",
        "seed": seed,
        "config": {k: _jsonable(v) for k, v in config.to_flat().items()},
        "config_hash": config.hash(),
        "params": manifest,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for _, p in store.items():
            fh.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[ParamStore, Config, int]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MAGIC)] != MAGIC:
        raise DataError("not a checkpoint file (bad magic)", path=path, byte_offset=0)
    pos = len(MAGIC)
    (header_len,) = struct.unpack("<Q", blob[pos : pos + 8])
    pos += 8
    try:
        header = json.loads(blob[pos : pos + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"corrupt header: {exc}", path=path, byte_offset=pos) from None
    pos += header_len
    if header.get("version") != VERSION:
        raise DataError(
            f"unsupported checkpoint version {header.get('version')}", path=path
        )

    overrides = {k: _stringify(v) for k, v in header["config"].items()}
    config = apply_overrides(Config(), overrides)

    store = ParamStore()
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if pos + nbytes > len(blob):
            raise DataError(
                f"truncated parameter data for {entry['name']!r}",
                path=path,
                byte_offset=pos,
            )
        data = np.frombuffer(blob[pos : pos + nbytes], dtype="<f8").reshape(shape)
        store.add(entry["name"], data.astype(np.float64))
        pos += nbytes
    if pos != len(blob):
        raise DataError("trailing bytes after parameter data", path=path, byte_offset=pos)
    return store, config, int(header["seed"])


def _jsonable(v):
    return v


def _stringify(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)
