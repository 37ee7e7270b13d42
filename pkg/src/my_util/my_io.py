"""Binary codecs: PPM rasters, ILTF raw tensors and the ILTF+JSON weight container."""

import hashlib
import json
import struct
from pathlib import Path
from typing import Any

import numpy as np

from src.my_util.errors import DataFormatError

ILTF_MAGIC = b"ILTF"
CONTAINER_FORMAT = "ILTF-container"
CONTAINER_VERSION = 1


def encode_iltf(array: np.ndarray) -> bytes:
    array = np.asarray(array, dtype="<f8")
    header = ILTF_MAGIC + struct.pack(f"<I{array.ndim}I", array.ndim, *array.shape)
    return header + array.tobytes(order="C")


def decode_iltf(buf: bytes, offset: int = 0) -> tuple[np.ndarray, int]:
    """Decode one record at `offset`; returns the array and the offset just past it."""
    if buf[offset : offset + 4] != ILTF_MAGIC:
        raise DataFormatError("bad ILTF magic", offset=offset)
    pos = offset + 4
    if len(buf) < pos + 4:
        raise DataFormatError("truncated ILTF header", offset=pos, missing=pos + 4 - len(buf))
    (rank,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    if len(buf) < pos + 4 * rank:
        raise DataFormatError("truncated ILTF extents", offset=pos, missing=pos + 4 * rank - len(buf))
    shape = struct.unpack_from(f"<{rank}I", buf, pos)
    pos += 4 * rank
    nbytes = 8 * int(np.prod(shape, dtype=np.int64))
    if len(buf) < pos + nbytes:
        raise DataFormatError("truncated ILTF payload", offset=pos, missing=pos + nbytes - len(buf))
    array = np.frombuffer(buf, dtype="<f8", count=nbytes // 8, offset=pos).reshape(shape)
    return array.astype(np.float64), pos + nbytes


def write_iltf(path: str | Path, array: np.ndarray) -> None:
    Path(path).write_bytes(encode_iltf(array))


def read_iltf(path: str | Path) -> np.ndarray:
    buf = Path(path).read_bytes()
    array, end = decode_iltf(buf)
    if end != len(buf):
        raise DataFormatError("trailing bytes after ILTF record", offset=end)
    return array


def manifest_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_container(path: str | Path, tensors: dict[str, np.ndarray], meta: dict[str, Any] | None = None) -> None:
    """Concatenated ILTF records plus a JSON manifest (names, shapes, byte offsets, sha256)."""
    entries = []
    chunks = []
    offset = 0
    for name, array in tensors.items():
        record = encode_iltf(array)
        entries.append({"name": name, "shape": list(np.shape(array)), "offset": offset, "nbytes": len(record)})
        chunks.append(record)
        offset += len(record)
    payload = b"".join(chunks)
    manifest = {
        "format": CONTAINER_FORMAT,
        "version": CONTAINER_VERSION,
        "tensors": entries,
        "size": len(payload),
        "sha256": hashlib.sha256(payload).hexdigest(),
        "meta": meta or {},
    }
    Path(path).write_bytes(payload)
    manifest_path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_container(path: str | Path) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    try:
        manifest = json.loads(manifest_path(path).read_text())
    except json.JSONDecodeError as e:
        raise DataFormatError(f"unreadable container manifest: {e}") from e
    if manifest.get("format") != CONTAINER_FORMAT:
        raise DataFormatError(f"not an {CONTAINER_FORMAT} manifest: {manifest_path(path)}")
    buf = Path(path).read_bytes()
    expected = int(manifest["size"])
    if len(buf) < expected:
        raise DataFormatError(f"container {path} is truncated", offset=len(buf), missing=expected - len(buf))
    if len(buf) > expected:
        raise DataFormatError(f"container {path} has trailing bytes", offset=expected)
    if hashlib.sha256(buf).hexdigest() != manifest["sha256"]:
        raise DataFormatError(f"checksum mismatch in {path}")

    tensors = {}
    for entry in manifest["tensors"]:
        array, end = decode_iltf(buf, entry["offset"])
        if list(array.shape) != list(entry["shape"]):
            raise DataFormatError(
                f"tensor {entry['name']!r}: manifest shape {entry['shape']} != payload shape {list(array.shape)}",
                offset=entry["offset"],
            )
        if end - entry["offset"] != entry["nbytes"]:
            raise DataFormatError(f"tensor {entry['name']!r}: record length mismatch", offset=entry["offset"])
        tensors[entry["name"]] = array
    return tensors, manifest.get("meta", {})


def _read_ppm_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    while pos < len(buf):
        if buf[pos : pos + 1] == b"#":
            while pos < len(buf) and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif buf[pos : pos + 1].isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < len(buf) and not buf[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise DataFormatError("truncated PPM header", offset=pos)
    return buf[start:pos], pos


def read_ppm(path: str | Path) -> np.ndarray:
    """Binary P6 with maxval 255 -> H×W×3 float64 in [0,255]."""
    buf = Path(path).read_bytes()
    magic, pos = _read_ppm_token(buf, 0)
    if magic != b"P6":
        raise DataFormatError(f"{path}: not a binary PPM (magic {magic!r})", offset=0)
    fields = []
    for _ in range(3):
        token, pos = _read_ppm_token(buf, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise DataFormatError(f"{path}: bad PPM header field {token!r}", offset=pos) from None
    width, height, maxval = fields
    if maxval != 255:
        raise DataFormatError(f"{path}: maxval {maxval} unsupported, expected 255", offset=pos)
    pos += 1  # single whitespace byte before the raster
    need = width * height * 3
    if len(buf) < pos + need:
        raise DataFormatError(f"{path}: truncated raster", offset=len(buf), missing=pos + need - len(buf))
    raster = np.frombuffer(buf, dtype=np.uint8, count=need, offset=pos)
    return raster.reshape(height, width, 3).astype(np.float64)


def write_ppm(path: str | Path, pixels: np.ndarray) -> None:
    """Writes H×W×3 values clamped to [0,255] and rounded to bytes."""
    pixels = np.asarray(pixels, dtype=np.float64)
    height, width, _ = pixels.shape
    raster = np.rint(np.clip(pixels, 0.0, 255.0)).astype(np.uint8)
    Path(path).write_bytes(f"P6\n{width} {height}\n255\n".encode("ascii") + raster.tobytes())
