"""Restoration operators solving ``argmin_x ||y - x||^2 + beta * Phi(x)``.

Gradients are forward differences with periodic boundary throughout, so the
Tikhonov problem diagonalizes in the DFT basis and the TV problem shares
its discretization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .degrade import BlurParams, transfer_function
from .image import check_image, clamp, frequency_grid
from .watermark import AdditivePattern, SpreadSpectrumKey, detect_additive, ss_statistics

REGULARIZERS = ("tikhonov-gradient", "total-variation")


class RestorationError(ValueError):
    """Invalid restoration parameters or an ill-posed inverse."""


@dataclass(frozen=True)
class RestorationParams:
    beta: float = 0.1
    regularizer: str = "total-variation"
    max_iters: int = 500
    tol: float = 1e-5
    wiener_nsr: float = 1e-3

    def __post_init__(self):
        if not self.beta >= 0:
            raise RestorationError(f"beta must be >= 0, got {self.beta}")
        if self.regularizer not in REGULARIZERS:
            raise RestorationError(f"unknown regularizer {self.regularizer!r}")
        if self.max_iters < 1 or not self.tol > 0:
            raise RestorationError("max_iters must be >= 1 and tol > 0")
        if not self.wiener_nsr >= 0:
            raise RestorationError(f"wiener_nsr must be >= 0, got {self.wiener_nsr}")


@dataclass(frozen=True, eq=False)
class RestorationResult:
    image: np.ndarray
    objective: float
    iterations: int
    converged: bool


def _channels(img: np.ndarray) -> list[np.ndarray]:
    return [img] if img.ndim == 2 else [img[..., c] for c in range(img.shape[2])]


def _merge(chans: list[np.ndarray], like: np.ndarray) -> np.ndarray:
    return chans[0] if like.ndim == 2 else np.stack(chans, axis=-1)


def grad(x: np.ndarray) -> np.ndarray:
    """Periodic forward differences, stacked as ``(d/dy, d/dx)``."""
    return np.stack([np.roll(x, -1, axis=0) - x, np.roll(x, -1, axis=1) - x])


def grad_adjoint(p: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`grad` (minus the divergence)."""
    return (np.roll(p[0], 1, axis=0) - p[0]) + (np.roll(p[1], 1, axis=1) - p[1])


def laplacian_eigenvalues(shape: tuple[int, int]) -> np.ndarray:
    """Eigenvalues of ``grad^T grad``: 4 sin^2(pi k/M) + 4 sin^2(pi l/N)."""
    v, u = frequency_grid(*shape)
    return 4.0 * np.sin(np.pi * u) ** 2 + 4.0 * np.sin(np.pi * v) ** 2


def total_variation(x: np.ndarray) -> float:
    g = grad(x)
    return float(np.sum(np.sqrt(g[0] ** 2 + g[1] ** 2)))


def gradient_energy(x: np.ndarray) -> float:
    g = grad(x)
    return float(np.sum(g * g))


def objective(x, y, beta: float, regularizer: str) -> float:
    """``||y - x||^2 + beta * Phi(x)``, summed over channels."""
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    phi = total_variation if regularizer == "total-variation" else gradient_energy
    return float(np.sum((y - x) ** 2)) + beta * sum(phi(c) for c in _channels(x))


def restore_tikhonov(y, p: RestorationParams) -> np.ndarray:
    """Exact minimizer of ``||y - x||^2 + beta ||grad x||^2``, then clamp."""
    y = check_image(y)
    if p.beta == 0:
        return y.copy()
    lam = laplacian_eigenvalues(y.shape[:2])
    chans = [sfft.ifft2(sfft.fft2(c) / (1.0 + p.beta * lam)).real for c in _channels(y)]
    return clamp(_merge(chans, y))


def _tv_channel(y: np.ndarray, lam: float, max_iters: int, tol: float) -> tuple[np.ndarray, int, bool]:
    # Fast gradient projection on the dual of  1/2||x - y||^2 + lam TV(x);
    # ||grad||^2 <= 8 gives the step 1/(8 lam).
    p = np.zeros((2,) + y.shape)
    q = p
    t = 1.0
    x = y
    step = 1.0 / (8.0 * lam)
    for it in range(1, max_iters + 1):
        g = q + step * grad(y - lam * grad_adjoint(q))
        norm = np.maximum(1.0, np.sqrt(g[0] ** 2 + g[1] ** 2))
        p_new = g / norm
        t_new = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        q = p_new + ((t - 1.0) / t_new) * (p_new - p)
        p, t = p_new, t_new
        x_new = y - lam * grad_adjoint(p)
        change = np.linalg.norm(x_new - x) / max(np.linalg.norm(x_new), 1e-30)
        x = x_new
        if change < tol:
            return x, it, True
    return x, max_iters, False


def restore_tv(y, p: RestorationParams) -> RestorationResult:
    """Approximate minimizer of ``||y - x||^2 + beta TV(x)`` (isotropic TV).

    The result is clamped to [0, 1], which can only lower the objective for
    data in [0, 1]; if the iterate still scores worse than ``x = y`` the
    input is returned instead. ``converged`` is False when the relative
    change never fell below ``tol`` within ``max_iters``.
    """
    y = check_image(y)
    if p.beta == 0:
        return RestorationResult(y.copy(), 0.0, 0, True)
    chans, iters, converged = [], 0, True
    for c in _channels(y):
        x, it, ok = _tv_channel(c, p.beta / 2.0, p.max_iters, p.tol)
        chans.append(x)
        iters = max(iters, it)
        converged = converged and ok
    x = clamp(_merge(chans, y))
    obj = objective(x, y, p.beta, "total-variation")
    trivial = objective(y, y, p.beta, "total-variation")
    if obj > trivial:
        x, obj = y.copy(), trivial
    return RestorationResult(x, obj, iters, converged)


def restore(y, p: RestorationParams) -> np.ndarray:
    """Dispatch on ``p.regularizer``; returns the restored image."""
    if p.regularizer == "tikhonov-gradient":
        return restore_tikhonov(y, p)
    return restore_tv(y, p).image


def _symmetric_extend(c: np.ndarray) -> np.ndarray:
    e = np.concatenate([c, c[::-1]], axis=0)
    return np.concatenate([e, e[:, ::-1]], axis=1)


def wiener_deconvolve(y, blur: BlurParams, p: RestorationParams, boundary: str = "periodic") -> np.ndarray:
    """``X = Y H* / (|H|^2 + K)`` with the analytic Gaussian ``H``, then clamp.

    ``boundary="mirror"`` deconvolves the half-sample symmetric extension,
    which matches a mirror-padded spatial blur.
    """
    y = check_image(y)
    if boundary not in ("periodic", "mirror"):
        raise RestorationError(f"unknown boundary {boundary!r}")
    h, w = y.shape[:2]
    ext = (2 * h, 2 * w) if boundary == "mirror" else (h, w)
    H = transfer_function(blur, ext)
    K = p.wiener_nsr
    if K == 0 and np.min(np.abs(H)) < 1e-12:
        raise RestorationError(
            f"wiener_nsr=0 with |H| down to {np.min(np.abs(H)):.3g}: inverse filter would blow up"
        )
    filt = H / (H * H + K)
    out = []
    for c in _channels(y):
        src = _symmetric_extend(c) if boundary == "mirror" else c
        x = sfft.ifft2(sfft.fft2(src) * filt).real
        out.append(x[:h, :w])
    return clamp(_merge(out, y))


# ----------------------------------------------------------------------------
# evaluation-side scoring of the removal objective


def residual_watermark_energy(candidate, key, original=None) -> float:
    """Squared detector correlation of ``candidate`` under the true key.

    ``key`` is an :class:`AdditivePattern` (blind or, with ``original``,
    informed correlation) or a :class:`SpreadSpectrumKey` (normalized chip
    correlation). This needs the secret key and is an evaluation tool only.
    """
    if isinstance(key, AdditivePattern):
        return detect_additive(candidate, key, original=original).correlation ** 2
    if isinstance(key, SpreadSpectrumKey):
        return ss_statistics(candidate, key)[1] ** 2
    raise TypeError(f"unsupported extractor key {type(key).__name__}")


def removal_objective(candidate, clean, key, lam: float = 1.0) -> float:
    """``||I' - I||^2 + lam * ||E(I')||^2`` with the clean image known."""
    candidate, clean = check_image(candidate), check_image(clean)
    return float(np.sum((candidate - clean) ** 2)) + lam * residual_watermark_energy(candidate, key)
