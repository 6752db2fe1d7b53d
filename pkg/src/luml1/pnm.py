"""Image file I/O: binary PPM (P6, maxval 255) and the LUMF1 raw-float format.

PPM stores 8-bit RGB; bytes map to floats as b/255 on load, and floats are
clamped to [0, 1] and rounded to the nearest byte on save, so load/save
round-trips are bit-exact.

LUMF1 stores float pixels without 8-bit quantization. Layout: the ASCII
magic line ``LUMF1\\n``, an ASCII shape line ``H W C\\n``, then H*W*C
little-endian float32 values in row-major, channel-interleaved order.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import FormatError, InvalidInputError
from .image import Image, clamp01

_WHITESPACE = b" \t\r\n"

LUMF_MAGIC = b"LUMF1\n"


def load_image(path) -> Image:
    """Load a PPM (P6) or LUMF1 file, dispatching on the magic bytes."""
    with open(path, "rb") as fh:
        buf = fh.read()
    name = os.fspath(path)
    if buf.startswith(LUMF_MAGIC):
        return _load_lumf(buf, name)
    if buf[:2] == b"P6":
        return _load_ppm(buf, name)
    raise FormatError(f"{name}: unrecognized magic at byte 0 (expected 'P6' or 'LUMF1')")


def save_image(img: Image, path) -> None:
    """Save as PPM if the path ends in .ppm, as LUMF1 if it ends in .lumf."""
    name = os.fspath(path)
    if name.endswith(".ppm"):
        data = save_ppm_bytes(img)
    elif name.endswith(".lumf"):
        data = save_lumf_bytes(img)
    else:
        raise InvalidInputError(f"{name}: unsupported image extension (use .ppm or .lumf)")
    with open(path, "wb") as fh:
        fh.write(data)


def save_ppm_bytes(img: Image) -> bytes:
    """Encode a 3-channel image as binary PPM, clamping to [0, 1] first."""
    if img.channels != 3:
        raise InvalidInputError(f"PPM requires 3 channels, image has {img.channels}")
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    quantized = np.rint(clamp01(img).data * 255.0).astype(np.uint8)
    return header + quantized.tobytes()


def save_lumf_bytes(img: Image) -> bytes:
    header = LUMF_MAGIC + f"{img.height} {img.width} {img.channels}\n".encode("ascii")
    return header + img.data.astype("<f4").tobytes()


def _next_token(buf: bytes, pos: int, name: str) -> tuple[bytes, int, int]:
    """Skip whitespace and '#' comments; return (token, end, token_start)."""
    while pos < len(buf):
        c = buf[pos]
        if c in _WHITESPACE:
            pos += 1
        elif c == ord("#"):
            while pos < len(buf) and buf[pos] != ord("\n"):
                pos += 1
        else:
            break
    if pos >= len(buf):
        raise FormatError(f"{name}: unexpected end of header at byte {pos}")
    start = pos
    while pos < len(buf) and buf[pos] not in _WHITESPACE:
        pos += 1
    return buf[start:pos], pos, start


def _int_token(buf: bytes, pos: int, name: str, what: str) -> tuple[int, int]:
    tok, pos, start = _next_token(buf, pos, name)
    try:
        value = int(tok)
    except ValueError:
        raise FormatError(f"{name}: invalid {what} {tok!r} at byte {start}") from None
    if value < 0:
        raise FormatError(f"{name}: negative {what} at byte {start}")
    return value, pos


def _load_ppm(buf: bytes, name: str) -> Image:
    tok, pos, start = _next_token(buf, 0, name)
    if tok != b"P6":
        raise FormatError(f"{name}: expected magic 'P6' at byte {start}, found {tok!r}")
    width, pos = _int_token(buf, pos, name, "width")
    height, pos = _int_token(buf, pos, name, "height")
    maxval, pos = _int_token(buf, pos, name, "maxval")
    if width < 1 or height < 1:
        raise FormatError(f"{name}: zero-sized image in header")
    if maxval != 255:
        raise FormatError(f"{name}: unsupported maxval {maxval} before byte {pos} (only 255)")
    # exactly one whitespace byte separates the header from the payload
    if pos >= len(buf) or buf[pos] not in _WHITESPACE:
        raise FormatError(f"{name}: expected single whitespace after maxval at byte {pos}")
    pos += 1
    need = width * height * 3
    got = len(buf) - pos
    if got < need:
        raise FormatError(f"{name}: truncated pixel data at byte {pos}: need {need} bytes, found {got}")
    if got > need:
        raise FormatError(f"{name}: {got - need} unexpected trailing bytes at byte {pos + need}")
    raw = np.frombuffer(buf, dtype=np.uint8, count=need, offset=pos)
    return Image(raw.reshape(height, width, 3).astype(np.float64) / 255.0)


def _load_lumf(buf: bytes, name: str) -> Image:
    pos = len(LUMF_MAGIC)
    nl = buf.find(b"\n", pos)
    if nl < 0:
        raise FormatError(f"{name}: missing shape line at byte {pos}")
    parts = buf[pos:nl].split()
    if len(parts) != 3:
        raise FormatError(f"{name}: shape line at byte {pos} must be 'H W C'")
    try:
        h, w, c = (int(p) for p in parts)
    except ValueError:
        raise FormatError(f"{name}: non-integer shape at byte {pos}") from None
    if h < 1 or w < 1 or c not in (1, 3):
        raise FormatError(f"{name}: bad shape {h}x{w}x{c} at byte {pos}")
    pos = nl + 1
    need = h * w * c * 4
    got = len(buf) - pos
    if got < need:
        raise FormatError(f"{name}: truncated float payload at byte {pos}: need {need} bytes, found {got}")
    if got > need:
        raise FormatError(f"{name}: {got - need} unexpected trailing bytes at byte {pos + need}")
    arr = np.frombuffer(buf, dtype="<f4", count=h * w * c, offset=pos).astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{name}: non-finite pixel values in payload at byte {pos}")
    return Image(arr.reshape(h, w, c))
