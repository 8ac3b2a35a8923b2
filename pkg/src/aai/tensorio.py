"""Binary tensor container, PPM image output, and checkpoint directory I/O.

Container layout (little-endian throughout):

    magic   4 bytes  b"AAIT"
    version u16      1
    dtype   u8       0 = float32, 1 = float64, 2 = int64
    ndim    u8
    shape   u32 * ndim
    payload row-major values

Round trips are bit-exact. All writes go through a temp file in the target
directory followed by an atomic rename, so readers never observe a partial
file.
"""

import hashlib
import json
import os
import struct
import tempfile

import numpy as np

MAGIC = b"AAIT"
VERSION = 1

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8"), 2: np.dtype("<i8")}
_CODE_FOR_DTYPE = {v: k for k, v in _DTYPE_CODES.items()}


class FormatError(ValueError):
    """Raised when a container or checkpoint file is malformed."""


def tensor_bytes(array: np.ndarray) -> bytes:
    """Serialize an array to container bytes."""
    array = np.asarray(array)
    dt = array.dtype.newbyteorder("<")
    if dt not in _CODE_FOR_DTYPE:
        raise ValueError(f"unsupported dtype {array.dtype}; use float32, float64 or int64")
    if np.issubdtype(array.dtype, np.floating) and not np.all(np.isfinite(array)):
        raise ValueError("refusing to serialize non-finite values")
    if array.ndim > 255:
        raise ValueError("too many dimensions")
    header = MAGIC + struct.pack("<HBB", VERSION, _CODE_FOR_DTYPE[dt], array.ndim)
    header += struct.pack(f"<{array.ndim}I", *array.shape)
    return header + np.ascontiguousarray(array, dtype=dt).tobytes()


def tensor_from_bytes(data: bytes, name: str = "<bytes>") -> np.ndarray:
    """Parse container bytes back into an array (bit-exact inverse of tensor_bytes)."""
    if len(data) < 8:
        raise FormatError(f"{name}: truncated header, got {len(data)} bytes")
    if data[:4] != MAGIC:
        raise FormatError(f"{name}: bad magic {data[:4]!r}, expected {MAGIC!r}")
    version, code, ndim = struct.unpack("<HBB", data[4:8])
    if version != VERSION:
        raise FormatError(f"{name}: unsupported version {version}")
    if code not in _DTYPE_CODES:
        raise FormatError(f"{name}: unknown dtype code {code}")
    offset = 8 + 4 * ndim
    if len(data) < offset:
        raise FormatError(f"{name}: truncated shape block at byte offset {len(data)}, "
                          f"expected {offset} header bytes")
    shape = struct.unpack(f"<{ndim}I", data[8:offset])
    dt = _DTYPE_CODES[code]
    count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
    expected = offset + count * dt.itemsize
    if len(data) != expected:
        raise FormatError(f"{name}: payload truncated at byte offset {len(data)}, "
                          f"expected {expected} bytes total")
    return np.frombuffer(data[offset:], dtype=dt).reshape(shape).copy()


def atomic_write_bytes(path, data: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_tensor(path, array: np.ndarray) -> None:
    atomic_write_bytes(path, tensor_bytes(array))


def load_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return tensor_from_bytes(fh.read(), name=os.fspath(path))


def tensor_checksum(array: np.ndarray) -> str:
    """SHA-256 over the serialized form; stable across processes."""
    return hashlib.sha256(tensor_bytes(array)).hexdigest()


def state_checksum(state: dict) -> str:
    """Checksum of an ordered {name: array} mapping."""
    h = hashlib.sha256()
    for name in sorted(state):
        h.update(name.encode())
        h.update(tensor_bytes(state[name]))
    return h.hexdigest()


def write_image(path, image: np.ndarray) -> None:
    """Write a [3, H, W] array with values in [-1, 1] as a binary PPM (P6).

    Values map through v -> round((v + 1) / 2 * 255) and clamp to [0, 255];
    round follows IEEE round-half-to-even.
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[0] != 3:
        raise ValueError(f"expected [3, H, W] image, got shape {image.shape}")
    if not np.all(np.isfinite(image)):
        raise ValueError("image contains non-finite values")
    _, h, w = image.shape
    scaled = np.clip(np.rint((image + 1.0) / 2.0 * 255.0), 0, 255).astype(np.uint8)
    payload = scaled.transpose(1, 2, 0).tobytes()  # interleave to RGB rows
    atomic_write_bytes(path, f"P6\n{w} {h}\n255\n".encode() + payload)


def read_image(path) -> np.ndarray:
    """Read a binary PPM back into a [3, H, W] array in [-1, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    if fields[0] != b"P6":
        raise FormatError(f"{path}: not a binary PPM")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval}")
    raw = np.frombuffer(data[pos:pos + 3 * w * h], dtype=np.uint8)
    if raw.size != 3 * w * h:
        raise FormatError(f"{path}: truncated pixel data")
    img = raw.reshape(h, w, 3).transpose(2, 0, 1).astype(np.float64)
    return img / 255.0 * 2.0 - 1.0


def write_json(path, obj) -> None:
    atomic_write_bytes(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode())


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def save_state_dir(directory, state: dict, manifest_extra: dict | None = None) -> None:
    """Write an ordered {name: array} mapping as one container file per array
    plus a manifest listing names, shapes and checksums."""
    os.makedirs(directory, exist_ok=True)
    entries = {}
    for name in sorted(state):
        arr = np.asarray(state[name])
        fname = name.replace("/", "__") + ".aai"
        save_tensor(os.path.join(directory, fname), arr)
        entries[name] = {
            "file": fname,
            "shape": list(arr.shape),
            "sha256": tensor_checksum(arr),
        }
    manifest = {"format": "aai-state", "version": 1, "tensors": entries}
    if manifest_extra:
        manifest.update(manifest_extra)
    write_json(os.path.join(directory, "manifest.json"), manifest)


def load_state_dir(directory) -> tuple[dict, dict]:
    """Inverse of save_state_dir; returns (state, manifest)."""
    manifest = read_json(os.path.join(directory, "manifest.json"))
    if manifest.get("format") != "aai-state":
        raise FormatError(f"{directory}: not a state directory")
    state = {}
    for name, entry in manifest["tensors"].items():
        state[name] = load_tensor(os.path.join(directory, entry["file"]))
    return state, manifest
