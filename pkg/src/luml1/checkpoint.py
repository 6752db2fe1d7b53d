"""Checkpoint files for TinyNet parameters.

Layout:

* magic line ``LUMNET1\\n``
* ASCII line ``<n_layers> <residual_flag>\\n``
* one ASCII line ``<out_ch> <in_ch> <k>\\n`` per layer
* payload: per layer, kernels then bias, little-endian float32, C order
* trailer: 8-byte little-endian FNV-1a-64 checksum of the payload

The checksum guards against corrupted or truncated parameter data; loading
verifies it before any parameter is used.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import CorruptCheckpointError, FormatError
from .fnv import fnv1a64
from .net import ConvLayer, TinyNet

MAGIC = b"LUMNET1\n"


def checkpoint_bytes(net: TinyNet) -> bytes:
    header = MAGIC + f"{len(net.layers)} {int(net.residual_mode)}\n".encode("ascii")
    for layer in net.layers:
        header += f"{layer.out_ch} {layer.in_ch} {layer.k}\n".encode("ascii")
    payload = b"".join(
        layer.kernels.astype("<f4").tobytes() + layer.bias.astype("<f4").tobytes()
        for layer in net.layers
    )
    return header + payload + struct.pack("<Q", fnv1a64(payload))


def save_checkpoint(net: TinyNet, path) -> None:
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(net))


def load_checkpoint(path) -> TinyNet:
    with open(path, "rb") as fh:
        buf = fh.read()
    name = str(path)
    if not buf.startswith(MAGIC):
        raise FormatError(f"{name}: bad magic at byte 0 (expected LUMNET1)")
    pos = len(MAGIC)

    def read_line(what):
        nonlocal pos
        nl = buf.find(b"\n", pos)
        if nl < 0:
            raise FormatError(f"{name}: missing {what} line at byte {pos}")
        parts = buf[pos:nl].split()
        start = pos
        pos = nl + 1
        try:
            return [int(p) for p in parts], start
        except ValueError:
            raise FormatError(f"{name}: non-integer {what} at byte {start}") from None

    head, start = read_line("layer-count")
    if len(head) != 2 or head[0] < 1 or head[1] not in (0, 1):
        raise FormatError(f"{name}: bad layer-count line at byte {start}")
    n_layers, residual = head
    shapes = []
    for _ in range(n_layers):
        dims, start = read_line("layer-shape")
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise FormatError(f"{name}: bad layer-shape line at byte {start}")
        shapes.append(tuple(dims))
    counts = [o * i * k * k + o for o, i, k in shapes]
    need = 4 * sum(counts)
    if len(buf) - pos < need + 8:
        raise FormatError(
            f"{name}: truncated at byte {pos}: need {need + 8} payload+checksum bytes, "
            f"found {len(buf) - pos}"
        )
    if len(buf) - pos > need + 8:
        raise FormatError(f"{name}: unexpected trailing bytes at byte {pos + need + 8}")
    payload = buf[pos : pos + need]
    (stored,) = struct.unpack("<Q", buf[pos + need :])
    computed = fnv1a64(payload)
    if stored != computed:
        raise CorruptCheckpointError(
            f"{name}: checksum mismatch: stored {stored:#018x}, computed {computed:#018x}"
        )
    layers = []
    off = 0
    for (o, i, k), count in zip(shapes, counts):
        vals = np.frombuffer(payload, dtype="<f4", count=count, offset=off).astype(np.float64)
        off += 4 * count
        kern = vals[: o * i * k * k].reshape(o, i, k, k)
        layers.append(ConvLayer(kern, vals[o * i * k * k :]))
    return TinyNet(layers, residual_mode=bool(residual))


def stored_checksum(path) -> int:
    """Read the trailing checksum without validating the payload."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 8:
        raise FormatError(f"{path}: too short to hold a checksum")
    return struct.unpack("<Q", buf[-8:])[0]
