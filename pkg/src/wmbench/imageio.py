"""8-bit PNG / PGM / PPM input and output.

Samples are quantized only here: ``round(sample * 255)`` on write and
``value / 255`` on read.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .image import ImageError, check_image

SUPPORTED_SUFFIXES = (".png", ".pgm", ".ppm", ".pnm")


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def from_uint8(data: np.ndarray) -> np.ndarray:
    return np.asarray(data, dtype=np.float64) / 255.0


def read_image(path) -> np.ndarray:
    path = Path(path)
    try:
        with PILImage.open(path) as im:
            im.load()
            if im.mode in ("L", "RGB"):
                arr = np.asarray(im)
            elif im.mode in ("1", "P", "LA", "I;16", "I"):
                arr = np.asarray(im.convert("L"))
            else:
                arr = np.asarray(im.convert("RGB"))
    except (OSError, ValueError) as exc:
        raise ImageError(f"{path}: unreadable image ({exc})") from exc
    if arr.dtype != np.uint8:
        raise ImageError(f"{path}: only 8-bit images are supported")
    return check_image(from_uint8(arr), str(path))


def write_image(path, img: np.ndarray) -> Path:
    """Write ``img`` as 8-bit PNG, or binary PGM/PPM for .pgm/.ppm/.pnm."""
    path = Path(path)
    img = check_image(img)
    data = to_uint8(img)
    suffix = path.suffix.lower()
    if suffix == ".png":
        PILImage.fromarray(data).save(path, format="PNG")
    elif suffix in (".pgm", ".ppm", ".pnm"):
        magic = b"P5" if data.ndim == 2 else b"P6"
        if suffix == ".pgm" and data.ndim == 3:
            raise ImageError(f"{path}: PGM cannot hold an RGB image")
        if suffix == ".ppm" and data.ndim == 2:
            data = np.repeat(data[..., None], 3, axis=2)
            magic = b"P6"
        h, w = data.shape[:2]
        with open(path, "wb") as fh:
            fh.write(magic + b"\n%d %d\n255\n" % (w, h))
            fh.write(np.ascontiguousarray(data).tobytes())
    else:
        raise ImageError(f"{path}: unsupported format {suffix!r}")
    return path
