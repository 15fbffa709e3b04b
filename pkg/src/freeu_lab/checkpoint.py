"""Tensor container: a canonical-JSON header plus concatenated little-endian
float32 payload.  Serialization is canonical, so save -> load -> save is
byte-identical; all writes go through temp-file + rename."""

import json
import os
import tempfile

import numpy as np

from .errors import ConfigError

MAGIC = b"FREEULAB-CKPT v1\n"
FORMAT_VERSION = 1
CONCAT_ORDER = "backbone_first"


def _canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def dumps(tensors, meta=None):
    """Serialize a name -> float32-array map to container bytes."""
    meta = dict(meta or {})
    meta.setdefault("format_version", FORMAT_VERSION)
    meta.setdefault("concat_order", CONCAT_ORDER)
    index = []
    payload = bytearray()
    offset = 0
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        raw = arr.tobytes()
        index.append(
            {"name": name, "shape": list(arr.shape), "offset": offset, "length": len(raw)}
        )
        payload.extend(raw)
        offset += len(raw)
    header = _canonical_json({"meta": meta, "tensors": index})
    return MAGIC + f"{len(header)}\n".encode() + header + b"\n" + bytes(payload)


def loads(blob):
    """Parse container bytes; returns (tensors, meta)."""
    if not blob.startswith(MAGIC):
        raise ConfigError("not a tensor container (bad magic)")
    rest = blob[len(MAGIC):]
    nl = rest.index(b"\n")
    header_len = int(rest[:nl])
    header_start = nl + 1
    header = json.loads(rest[header_start:header_start + header_len])
    payload = rest[header_start + header_len + 1:]
    tensors = {}
    prev_end = 0
    for entry in header["tensors"]:
        off, length = entry["offset"], entry["length"]
        if off != prev_end:
            raise ConfigError(f"tensor {entry['name']!r}: non-contiguous offset {off}")
        prev_end = off + length
        raw = payload[off:off + length]
        if len(raw) != length:
            raise ConfigError(
                f"tensor {entry['name']!r}: payload truncated "
                f"({len(raw)} of {length} bytes)"
            )
        arr = np.frombuffer(raw, dtype="<f4")
        tensors[entry["name"]] = arr.reshape(entry["shape"]).copy()
    if prev_end != len(payload):
        raise ConfigError(
            f"payload length {len(payload)} != indexed total {prev_end}"
        )
    return tensors, header["meta"]


def atomic_write_bytes(path, blob):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


def save(path, tensors, meta=None):
    atomic_write_bytes(path, dumps(tensors, meta))


def load(path):
    if not os.path.exists(path):
        raise ConfigError(f"checkpoint not found: {path}")
    with open(path, "rb") as f:
        return loads(f.read())
