
from luml1.image import Image
from luml1.rng import stream


def rand_image(seed: int, h: int = 8, w: int = 8, c: int = 3, tag: int = 99) -> Image:
    """Deterministic random image in [0, 1) for tests."""
    return Image(stream(seed, tag).random((h, w, c)))


def rand_pair(seed: int, h: int = 8, w: int = 8, c: int = 3):
    rng = stream(seed, 98)
    return Image(rng.random((h, w, c))), Image(rng.random((h, w, c)))
