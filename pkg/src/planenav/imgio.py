"""Binary PGM (P5) and PPM (P6) read/write for slices and overlays."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def write_pgm(path, img: np.ndarray) -> None:
    img = np.asarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError(f"PGM wants a 2D uint8 image, got {img.shape} {img.dtype}")
    h, w = img.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + img.tobytes())


def write_ppm(path, img: np.ndarray) -> None:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValueError(f"PPM wants an (h, w, 3) uint8 image, got {img.shape} {img.dtype}")
    h, w = img.shape[:2]
    Path(path).write_bytes(f"P6\n{w} {h}\n255\n".encode() + img.tobytes())


def _parse_netpbm_header(raw: bytes, magic: bytes):
    if not raw.startswith(magic):
        raise ValueError(f"bad magic, expected {magic!r}")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":  # comment line
            pos = raw.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(raw[start:pos]))
    return fields[0], fields[1], fields[2], pos + 1


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    w, h, maxval, offset = _parse_netpbm_header(raw, b"P5")
    if maxval != 255:
        raise ValueError(f"only maxval 255 supported, got {maxval}")
    data = np.frombuffer(raw[offset : offset + w * h], dtype=np.uint8)
    if data.size != w * h:
        raise ValueError("truncated PGM payload")
    return data.reshape(h, w).copy()
