"""Minimal PNG reader/writer for the two formats the dataset uses.

Supports exactly 8-bit RGB (color images) and 16-bit grayscale (quantized
depth). Writing always uses filter type 0 and a fixed zlib level so that
regenerating a dataset with the same seed is byte-identical.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import ParseError

_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_ZLIB_LEVEL = 6


def _chunk(kind: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + kind
        + payload
        + struct.pack(">I", zlib.crc32(kind + payload) & 0xFFFFFFFF)
    )


def write_png(path: str | Path, image: np.ndarray) -> None:
    """Write `image` as PNG: uint8 (H, W, 3) or uint16 (H, W)."""
    image = np.asarray(image)
    if image.dtype == np.uint8 and image.ndim == 3 and image.shape[2] == 3:
        color_type, bit_depth = 2, 8
        raw_rows = image
    elif image.dtype == np.uint16 and image.ndim == 2:
        color_type, bit_depth = 0, 16
        raw_rows = image[:, :, None]
    else:
        raise ParseError(f"unsupported image for PNG write: {image.dtype} {image.shape}")

    height, width = image.shape[:2]
    # big-endian sample order per the PNG spec
    payload = raw_rows.astype(f">u{bit_depth // 8}").tobytes()
    stride = width * raw_rows.shape[2] * (bit_depth // 8)
    scanlines = b"".join(
        b"\x00" + payload[r * stride : (r + 1) * stride] for r in range(height)
    )

    ihdr = struct.pack(">IIBBBBB", width, height, bit_depth, color_type, 0, 0, 0)
    data = (
        _SIGNATURE
        + _chunk(b"IHDR", ihdr)
        + _chunk(b"IDAT", zlib.compress(scanlines, _ZLIB_LEVEL))
        + _chunk(b"IEND", b"")
    )
    Path(path).write_bytes(data)


def read_png(path: str | Path) -> np.ndarray:
    """Read a PNG written by :func:`write_png` (plus any filter types)."""
    blob = Path(path).read_bytes()
    if blob[:8] != _SIGNATURE:
        raise ParseError(f"not a PNG file: {path}")

    pos = 8
    ihdr = None
    idat = b""
    while pos + 8 <= len(blob):
        (length,) = struct.unpack(">I", blob[pos : pos + 4])
        kind = blob[pos + 4 : pos + 8]
        payload = blob[pos + 8 : pos + 8 + length]
        pos += 12 + length
        if kind == b"IHDR":
            ihdr = struct.unpack(">IIBBBBB", payload)
        elif kind == b"IDAT":
            idat += payload
        elif kind == b"IEND":
            break
    if ihdr is None:
        raise ParseError(f"missing IHDR chunk: {path}")

    width, height, bit_depth, color_type, _, _, interlace = ihdr
    if interlace != 0:
        raise ParseError("interlaced PNG not supported")
    if (color_type, bit_depth) == (2, 8):
        channels, itemsize = 3, 1
    elif (color_type, bit_depth) == (0, 16):
        channels, itemsize = 1, 2
    else:
        raise ParseError(f"unsupported PNG format: color={color_type} depth={bit_depth}")

    raw = zlib.decompress(idat)
    stride = width * channels * itemsize
    bpp = channels * itemsize
    out = np.empty((height, stride), dtype=np.uint8)
    prev = np.zeros(stride, dtype=np.uint8)
    for r in range(height):
        ftype = raw[r * (stride + 1)]
        line = np.frombuffer(raw, dtype=np.uint8, count=stride, offset=r * (stride + 1) + 1)
        out[r] = _unfilter(ftype, line, prev, bpp)
        prev = out[r]

    if channels == 3:
        return out.reshape(height, width, 3)
    return out.view(">u2").astype(np.uint16).reshape(height, width)


def _unfilter(ftype: int, line: np.ndarray, prev: np.ndarray, bpp: int) -> np.ndarray:
    if ftype == 0:
        return line.copy()
    cur = line.astype(np.int32)
    up = prev.astype(np.int32)
    out = np.zeros_like(cur)
    if ftype == 2:  # Up
        return ((cur + up) % 256).astype(np.uint8)
    for i in range(len(cur)):
        a = out[i - bpp] if i >= bpp else 0
        b = up[i]
        c = up[i - bpp] if i >= bpp else 0
        if ftype == 1:
            pred = a
        elif ftype == 3:
            pred = (a + b) // 2
        elif ftype == 4:
            p = a + b - c
            pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
            pred = a if (pa <= pb and pa <= pc) else (b if pb <= pc else c)
        else:
            raise ParseError(f"unknown PNG filter type {ftype}")
        out[i] = (cur[i] + pred) % 256
    return out.astype(np.uint8)
