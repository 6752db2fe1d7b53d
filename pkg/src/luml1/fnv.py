"""64-bit FNV-1a hashing, used for checkpoint checksums and seed mixing."""

_OFFSET_BASIS = 0xCBF29CE484222325
_PRIME = 0x100000001B3
MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """Hash a byte string with 64-bit FNV-1a."""
    h = _OFFSET_BASIS
    for b in data:
        h ^= b
        h = (h * _PRIME) & MASK64
    return h
