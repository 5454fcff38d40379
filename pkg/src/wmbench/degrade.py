"""Degradation operators: pixel noise, Gaussian blur, JPEG-style
quantization and Gaussian noise in the latent space of a linear (PCA)
autoencoder.

Each operator clamps once, at the end.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import fft as sfft
from scipy.ndimage import convolve1d

from . import __version__
from ._rng import rng
from .image import (
    BlockDCT,
    check_image,
    clamp,
    dct8x8_blocks,
    frequency_grid,
    idct8x8_blocks,
    luma,
    with_luma,
)


class DegradationError(ValueError):
    """Invalid degradation parameters or geometry."""


# ----------------------------------------------------------------------------
# pixel noise


@dataclass(frozen=True)
class NoiseParams:
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise DegradationError(f"noise sigma must be finite and >= 0, got {self.sigma}")


def pixel_noise(shape, p: NoiseParams) -> np.ndarray:
    """The noise field ``add_pixel_noise`` would add for ``p``."""
    return rng(p.seed).normal(0.0, p.sigma, size=shape)


def add_pixel_noise(img, p: NoiseParams) -> np.ndarray:
    """Add i.i.d. N(0, sigma^2) to every sample, then clamp."""
    img = check_image(img)
    if p.sigma == 0:
        return img.copy()
    return clamp(img + pixel_noise(img.shape, p))


# ----------------------------------------------------------------------------
# Gaussian blur


@dataclass(frozen=True)
class BlurParams:
    """Gaussian blur of standard deviation ``sigma`` pixels.

    ``kernel_size`` defaults to ``6 * ceil(sigma) + 1``.
    """

    sigma: float
    kernel_size: int | None = None

    def __post_init__(self):
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise DegradationError(f"blur sigma must be finite and >= 0, got {self.sigma}")
        if self.kernel_size is None:
            object.__setattr__(self, "kernel_size", 6 * math.ceil(self.sigma) + 1)
        k = self.kernel_size
        if int(k) != k or k < 1 or k % 2 == 0:
            raise DegradationError(f"kernel_size must be a positive odd integer, got {k}")
        object.__setattr__(self, "kernel_size", int(k))

    def kernel1d(self) -> np.ndarray:
        """Sampled 1-D Gaussian, normalized to unit sum."""
        r = self.kernel_size // 2
        if self.sigma == 0 or r == 0:
            k = np.zeros(self.kernel_size)
            k[r] = 1.0
            return k
        x = np.arange(-r, r + 1, dtype=np.float64)
        g = np.exp(-(x * x) / (2.0 * self.sigma**2))
        return g / g.sum()

    def kernel2d(self) -> np.ndarray:
        k = self.kernel1d()
        return np.outer(k, k)


def transfer_function(p: BlurParams, shape: tuple[int, int]) -> np.ndarray:
    """Analytic H(u, v) = exp(-2 pi^2 sigma^2 (u^2 + v^2)) on the DFT grid.

    ``shape`` is ``(height, width)``; frequencies are k/M and l/N folded to
    [-1/2, 1/2). The result is real, positive and H[0, 0] == 1.
    """
    v, u = frequency_grid(*shape)
    return np.exp(-2.0 * np.pi**2 * p.sigma**2 * (u * u + v * v))


def suppression_ratio(p: BlurParams, shape: tuple[int, int]) -> np.ndarray:
    """Fraction of spectral energy that survives the blur, |H|^2."""
    return transfer_function(p, shape) ** 2


def _blur_channel_mirror(ch: np.ndarray, k: np.ndarray) -> np.ndarray:
    out = convolve1d(ch, k, axis=0, mode="reflect")
    return convolve1d(out, k, axis=1, mode="reflect")


def _blur_channel_periodic(ch: np.ndarray, p: BlurParams) -> np.ndarray:
    return sfft.ifft2(sfft.fft2(ch) * transfer_function(p, ch.shape)).real


def gaussian_blur(img, p: BlurParams, mode: str = "mirror", clip: bool = True) -> np.ndarray:
    """Gaussian blur, per channel.

    ``mode="mirror"``: separable convolution with the sampled kernel and
    half-sample symmetric padding. ``mode="periodic"``: circular convolution
    whose frequency response is exactly the analytic H on the DFT grid (the
    continuous Gaussian applied to the periodic band-limited interpolant).
    ``kernel_size`` only applies to the mirror mode.
    """
    img = check_image(img)
    h, w = img.shape[:2]
    if mode == "mirror":
        if p.kernel_size > 2 * min(h, w) + 1:
            raise DegradationError(
                f"kernel_size {p.kernel_size} too large for {h}x{w} image (max {2 * min(h, w) + 1})"
            )
        k = p.kernel1d()
        blur = lambda ch: _blur_channel_mirror(ch, k)  # noqa: E731
    elif mode == "periodic":
        blur = lambda ch: _blur_channel_periodic(ch, p)  # noqa: E731
    else:
        raise DegradationError(f"unknown blur mode {mode!r}")
    if img.ndim == 2:
        out = blur(img)
    else:
        out = np.stack([blur(img[..., c]) for c in range(img.shape[2])], axis=-1)
    return clamp(out) if clip else out


# ----------------------------------------------------------------------------
# JPEG-style quantization

STD_LUMA_TABLE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.int64,
)


@dataclass(frozen=True)
class JpegParams:
    quality: int = 75

    def __post_init__(self):
        q = self.quality
        if int(q) != q or not 1 <= q <= 100:
            raise DegradationError(f"JPEG quality must be an integer in [1, 100], got {q}")
        object.__setattr__(self, "quality", int(q))


def quant_table(quality: int) -> np.ndarray:
    """IJG-scaled standard luminance table."""
    JpegParams(quality)
    scale = 5000 // quality if quality < 50 else 200 - 2 * quality
    q = np.floor((STD_LUMA_TABLE * scale + 50) / 100)
    return np.clip(q, 1, 255).astype(np.int64)


def jpeg_cycle(img, p: JpegParams) -> np.ndarray:
    """Quantize and dequantize the luma 8x8 DCT coefficients.

    Works on the 8-bit scale with the usual level shift of 128. Entropy
    coding is lossless and omitted; chroma passes through.
    """
    img = check_image(img)
    table = quant_table(p.quality).astype(np.float64)
    y = luma(img)
    blocks = dct8x8_blocks(y * 255.0 - 128.0)
    q = np.round(blocks.coeffs / table) * table
    y2 = (idct8x8_blocks(BlockDCT(q, blocks.shape)) + 128.0) / 255.0
    return with_luma(img, y2)


# ----------------------------------------------------------------------------
# linear latent codec


@dataclass(frozen=True)
class LatentCodec:
    """PCA autoencoder: ``z = V^T (x - mean)``, ``x = mean + V z``.

    ``shape`` is the geometry of one encoded vector. A codec whose shape is
    smaller than the image is applied tile by tile (e.g. 8x8 patches).
    """

    mean: np.ndarray
    basis: np.ndarray
    shape: tuple[int, int]
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def d(self) -> int:
        return self.basis.shape[1]

    def encode_vectors(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) @ self.basis

    def decode_vectors(self, z: np.ndarray) -> np.ndarray:
        return self.mean + z @ self.basis.T

    def _tiles(self, channel: np.ndarray) -> np.ndarray:
        h, w = channel.shape
        th, tw = self.shape
        if (h, w) == (th, tw):
            return channel.reshape(1, -1)
        if h % th or w % tw:
            raise DegradationError(f"codec geometry {self.shape} does not tile image {channel.shape}")
        t = channel.reshape(h // th, th, w // tw, tw).transpose(0, 2, 1, 3)
        return t.reshape(-1, th * tw)

    def _untile(self, vecs: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
        h, w = shape
        th, tw = self.shape
        t = vecs.reshape(h // th, w // tw, th, tw).transpose(0, 2, 1, 3)
        return t.reshape(h, w)

    def encode(self, img) -> np.ndarray:
        """Latent codes, one row per tile."""
        return self.encode_vectors(self._tiles(luma(check_image(img))))

    def decode(self, z: np.ndarray, shape: tuple[int, int] | None = None) -> np.ndarray:
        """Luma image from latent codes (unclamped)."""
        z = np.atleast_2d(z)
        return self._untile(self.decode_vectors(z), shape or self.shape)

    def save(self, path) -> Path:
        """Flat little-endian record plus a JSON provenance sidecar."""
        path = Path(path)
        th, tw = self.shape
        header = struct.pack("<4sIIII", b"WMLC", 1, th, tw, self.d)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(self.mean, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(self.basis, dtype="<f8").tobytes())
        sidecar = path.with_name(path.name + ".json")
        meta = {"toolkit_version": __version__, "height": th, "width": tw, "d": self.d, **self.meta}
        sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "LatentCodec":
        path = Path(path)
        raw = path.read_bytes()
        magic, version, th, tw, d = struct.unpack_from("<4sIIII", raw, 0)
        if magic != b"WMLC" or version != 1:
            raise DegradationError(f"{path}: not a latent codec record")
        n = th * tw
        off = struct.calcsize("<4sIIII")
        expected = off + 8 * (n + n * d)
        if len(raw) != expected:
            raise DegradationError(f"{path}: truncated record ({len(raw)} of {expected} bytes)")
        mean = np.frombuffer(raw, dtype="<f8", count=n, offset=off).astype(np.float64)
        basis = np.frombuffer(raw, dtype="<f8", count=n * d, offset=off + 8 * n).reshape(n, d)
        meta = {}
        sidecar = path.with_name(path.name + ".json")
        if sidecar.exists():
            meta = json.loads(sidecar.read_text())
        return cls(mean=mean, basis=basis.astype(np.float64), shape=(th, tw), meta=meta)


def _corpus_vectors(corpus, patch: int | None) -> tuple[np.ndarray, tuple[int, int]]:
    chans = [luma(check_image(im)) for im in corpus]
    if not chans:
        raise DegradationError("empty corpus")
    if patch is None:
        shape = chans[0].shape
        if any(c.shape != shape for c in chans):
            raise DegradationError("corpus images must share one geometry")
        return np.stack([c.ravel() for c in chans]), shape
    shape = (patch, patch)
    vecs = []
    for c in chans:
        h, w = (c.shape[0] // patch) * patch, (c.shape[1] // patch) * patch
        t = c[:h, :w].reshape(h // patch, patch, w // patch, patch).transpose(0, 2, 1, 3)
        vecs.append(t.reshape(-1, patch * patch))
    return np.concatenate(vecs), shape


def fit_latent_codec(corpus, d: int, patch: int | None = None) -> LatentCodec:
    """Fit a rank-``d`` PCA codec.

    With ``patch=None`` every image is one vector; otherwise the corpus is
    cut into non-overlapping ``patch x patch`` tiles. Each basis column is
    signed so its largest-magnitude entry is positive.
    """
    x, shape = _corpus_vectors(corpus, patch)
    n, dim = x.shape
    if d < 1 or d > dim:
        raise DegradationError(f"latent dimension d={d} outside [1, {dim}]")
    if n < d:
        raise DegradationError(f"insufficient corpus: {n} vectors for d={d}")
    mean = x.mean(axis=0)
    _, s, vt = np.linalg.svd(x - mean, full_matrices=False)
    basis = vt[:d].T.copy()
    if basis.shape[1] < d:
        raise DegradationError(f"corpus rank too small for d={d}")
    idx = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[idx, np.arange(d)])
    signs[signs == 0] = 1.0
    basis *= signs
    total = float(np.sum(s**2))
    meta = {
        "corpus_vectors": int(n),
        "patch": patch,
        "explained_variance_ratio": float(np.sum(s[:d] ** 2) / total) if total > 0 else 1.0,
    }
    return LatentCodec(mean=mean, basis=basis, shape=shape, meta=meta)


def add_latent_noise(img, codec: LatentCodec, p: NoiseParams, clip: bool = True) -> np.ndarray:
    """``D(E(I) + eps)`` with ``eps ~ N(0, sigma^2 I_d)`` per tile, on luma."""
    img = check_image(img)
    y = luma(img)
    z = codec.encode_vectors(codec._tiles(y))
    if p.sigma > 0:
        z = z + rng(p.seed).normal(0.0, p.sigma, size=z.shape)
    y2 = codec.decode(z, y.shape)
    return with_luma(img, y2, clip=clip)
