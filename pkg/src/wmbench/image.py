"""Image containers, transforms and quality metrics.

Images are plain float64 numpy arrays with samples in [0, 1]: shape
``(height, width)`` for grayscale or ``(height, width, 3)`` for RGB. Row
index is y (N rows), column index is x (M columns).

The forward DFT is unnormalized and the inverse carries the 1/(MN) factor,
so white noise of variance s**2 has E|n_hat(u, v)|**2 = s**2 * M * N at
every bin.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


class ImageError(ValueError):
    """Invalid image data or incompatible image geometry."""


def check_image(img, name: str = "image") -> np.ndarray:
    """Validate and return ``img`` as a float64 array.

    Raises :class:`ImageError` for bad shapes, unsupported channel counts
    or non-finite samples.
    """
    a = np.asarray(img, dtype=np.float64)
    if a.ndim == 3 and a.shape[2] == 1:
        a = a[..., 0]
    if a.ndim not in (2, 3) or (a.ndim == 3 and a.shape[2] != 3):
        raise ImageError(f"{name}: expected (H, W) or (H, W, 3) array, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ImageError(f"{name}: empty image {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ImageError(f"{name}: non-finite samples")
    return a


def same_geometry(a: np.ndarray, b: np.ndarray, what: str = "images") -> None:
    if a.shape != b.shape:
        raise ImageError(f"{what} differ in geometry: {a.shape} vs {b.shape}")


def clamp(img: np.ndarray) -> np.ndarray:
    return np.clip(img, 0.0, 1.0)


def clamped_fraction(unclamped: np.ndarray) -> float:
    """Fraction of samples that fall outside [0, 1] before clamping."""
    return float(np.mean((unclamped < 0.0) | (unclamped > 1.0)))


def luma(img: np.ndarray) -> np.ndarray:
    """BT.601 luma of an RGB image; grayscale images are returned as is."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    return img @ LUMA_WEIGHTS


def with_luma(img: np.ndarray, new_luma: np.ndarray, clip: bool = True) -> np.ndarray:
    """Replace the luma of ``img`` keeping both chroma differences fixed.

    Adding the same offset to R, G and B moves Y by that offset and leaves
    Cb and Cr untouched, so for RGB the luma change is broadcast to all
    three channels.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        out = np.array(new_luma, dtype=np.float64)
    else:
        out = img + (new_luma - luma(img))[..., None]
    return clamp(out) if clip else out


# ----------------------------------------------------------------------------
# Fourier transform


def dft2(channel: np.ndarray) -> np.ndarray:
    """Unnormalized 2-D DFT of a single channel (any size)."""
    channel = np.asarray(channel)
    if channel.ndim != 2:
        raise ImageError(f"dft2 expects a single channel, got shape {channel.shape}")
    return sfft.fft2(channel)


def idft2(field: np.ndarray, real: bool = True) -> np.ndarray:
    """Inverse of :func:`dft2` (carries the 1/(MN) factor)."""
    out = sfft.ifft2(field)
    return out.real if real else out


def frequency_grid(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalized frequencies (v rows, u columns) folded to [-1/2, 1/2).

    Returned arrays broadcast to ``(height, width)``: ``v`` has shape
    ``(height, 1)`` and ``u`` has shape ``(1, width)``.
    """
    v = np.fft.fftfreq(height)[:, None]
    u = np.fft.fftfreq(width)[None, :]
    return v, u


def radial_frequency(height: int, width: int) -> np.ndarray:
    v, u = frequency_grid(height, width)
    return np.sqrt(u * u + v * v)


# ----------------------------------------------------------------------------
# 8x8 block DCT


@dataclass(frozen=True)
class BlockDCT:
    """Orthonormal type-II DCT coefficients of 8x8 blocks.

    ``coeffs`` has shape ``(blocks_y, blocks_x, 8, 8)``; ``shape`` is the
    original channel shape before mirror padding.
    """

    coeffs: np.ndarray
    shape: tuple[int, int]

    @property
    def padded_shape(self) -> tuple[int, int]:
        by, bx = self.coeffs.shape[:2]
        return by * 8, bx * 8


def _pad8(channel: np.ndarray) -> np.ndarray:
    h, w = channel.shape
    ph, pw = (-h) % 8, (-w) % 8
    if ph or pw:
        channel = np.pad(channel, ((0, ph), (0, pw)), mode="symmetric")
    return channel


def dct8x8_blocks(channel: np.ndarray) -> BlockDCT:
    channel = np.asarray(channel, dtype=np.float64)
    if channel.ndim != 2:
        raise ImageError(f"dct8x8_blocks expects a single channel, got shape {channel.shape}")
    padded = _pad8(channel)
    h, w = padded.shape
    blocks = padded.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3)
    coeffs = sfft.dctn(blocks, type=2, axes=(2, 3), norm="ortho")
    return BlockDCT(coeffs=coeffs, shape=channel.shape)


def idct8x8_blocks(blocks: BlockDCT) -> np.ndarray:
    """Invert :func:`dct8x8_blocks`, stripping any padding."""
    pix = sfft.idctn(blocks.coeffs, type=2, axes=(2, 3), norm="ortho")
    by, bx = pix.shape[:2]
    full = pix.transpose(0, 2, 1, 3).reshape(by * 8, bx * 8)
    h, w = blocks.shape
    return full[:h, :w]


# ----------------------------------------------------------------------------
# Quality metrics

SSIM_WINDOW = 8
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


def mse(a, b) -> float:
    a, b = check_image(a, "a"), check_image(b, "b")
    same_geometry(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB for peak 1; ``inf`` for identical images."""
    m = mse(a, b)
    if m == 0.0:
        return float("inf")
    return float(10.0 * np.log10(1.0 / m))


def _window_means(x: np.ndarray, k: int) -> np.ndarray:
    # mean over every k x k window, stride 1, valid positions only
    c = np.pad(np.cumsum(np.cumsum(x, axis=0), axis=1), ((1, 0), (1, 0)))
    s = c[k:, k:] - c[:-k, k:] - c[k:, :-k] + c[:-k, :-k]
    return s / (k * k)


def _ssim_channel(a: np.ndarray, b: np.ndarray) -> float:
    k = min(SSIM_WINDOW, a.shape[0], a.shape[1])
    mu_a, mu_b = _window_means(a, k), _window_means(b, k)
    var_a = _window_means(a * a, k) - mu_a**2
    var_b = _window_means(b * b, k) - mu_b**2
    cov = _window_means(a * b, k) - mu_a * mu_b
    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_a**2 + mu_b**2 + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


def ssim(a, b) -> float:
    """Mean SSIM over 8x8 windows at stride 1 (uniform weights, population
    statistics). RGB images average the per-channel scores."""
    a, b = check_image(a, "a"), check_image(b, "b")
    same_geometry(a, b)
    if a.ndim == 2:
        return _ssim_channel(a, b)
    return float(np.mean([_ssim_channel(a[..., c], b[..., c]) for c in range(a.shape[2])]))


@dataclass(frozen=True)
class QualityReport:
    psnr: float
    ssim: float
    mse: float


def quality(reference, test) -> QualityReport:
    return QualityReport(psnr=psnr(reference, test), ssim=ssim(reference, test), mse=mse(reference, test))
