"""Deterministic test corpora.

``natural_crops`` samples grayscale crops of the photographs bundled with
scikit-image; ``synthetic_scenes`` draws random 1/f fields with a few
shaded shapes and needs no data files.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import expit

from ._rng import rng, tag
from .image import LUMA_WEIGHTS

NATURAL_SOURCES = (
    "camera",
    "astronaut",
    "coffee",
    "chelsea",
    "rocket",
    "moon",
    "coins",
    "grass",
    "gravel",
    "brick",
    "clock",
    "cat",
    "immunohistochemistry",
    "hubble_deep_field",
    "page",
    "text",
    "retina",
)


@lru_cache(maxsize=None)
def _source(name: str) -> np.ndarray:
    from skimage import data

    a = np.asarray(getattr(data, name)(), dtype=np.float64) / 255.0
    if a.ndim == 3:
        a = a[..., :3] @ LUMA_WEIGHTS
    a.setflags(write=False)
    return a


def natural_crops(n: int = 100, size: int = 128, seed: int = 0) -> list[np.ndarray]:
    """``n`` grayscale ``size x size`` crops cycling over the bundled photos.

    Each crop covers a random square of side ``size * s`` (``s`` uniform in
    [1, 2], capped by the source) resampled to ``size`` with anti-aliasing.
    """
    from skimage.transform import resize

    g = rng(seed, tag("natural-crops"))
    out = []
    for i in range(n):
        src = _source(NATURAL_SOURCES[i % len(NATURAL_SOURCES)])
        h, w = src.shape
        s = min(float(g.uniform(1.0, 2.0)), min(h, w) / size)
        side = max(size, int(round(size * s)))
        y = int(g.integers(0, h - side + 1))
        x = int(g.integers(0, w - side + 1))
        crop = src[y : y + side, x : x + side]
        if side != size:
            crop = resize(crop, (size, size), order=1, anti_aliasing=True, mode="reflect")
        out.append(np.clip(crop, 0.0, 1.0))
    return out


def synthetic_scenes(n: int = 100, size: int = 128, seed: int = 0) -> list[np.ndarray]:
    """Random 1/f-amplitude fields plus a few soft-edged ellipses, in [0.05, 0.95]."""
    g = rng(seed, tag("synthetic-scenes"))
    fy = np.fft.fftfreq(size)[:, None]
    fx = np.fft.fftfreq(size)[None, :]
    f = np.sqrt(fx * fx + fy * fy)
    f[0, 0] = 1.0
    yy, xx = np.mgrid[0:size, 0:size] / size
    out = []
    for _ in range(n):
        spec = (g.normal(size=(size, size)) + 1j * g.normal(size=(size, size))) / f
        spec[0, 0] = 0.0
        field = np.fft.ifft2(spec).real
        field = (field - field.mean()) / (field.std() + 1e-12)
        img = 0.5 + 0.12 * field
        for _ in range(int(g.integers(2, 5))):
            cy, cx = g.uniform(0.15, 0.85, size=2)
            ry, rx = g.uniform(0.05, 0.3, size=2)
            d = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2
            mask = expit((1.0 - d) * 8.0)
            img = img * (1 - mask) + mask * g.uniform(0.1, 0.9)
        out.append(np.clip(img, 0.05, 0.95))
    return out
