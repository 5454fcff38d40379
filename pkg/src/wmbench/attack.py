"""Degrade-then-restore attack pipelines, ``x' = R(D(x))``.

A pipeline is an ordered tuple of :class:`Stage` objects, each naming an
operator and its parameters. Randomized stages draw from a seed derived
from the pipeline seed and the stage index, so appending a stage never
changes what earlier stages do.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ._rng import derive_seed, rng
from .degrade import (
    BlurParams,
    JpegParams,
    LatentCodec,
    NoiseParams,
    add_latent_noise,
    add_pixel_noise,
    fit_latent_codec,
    gaussian_blur,
    jpeg_cycle,
)
from .image import check_image, clamp
from .restore import RestorationParams, restore_tikhonov, restore_tv, wiener_deconvolve


class AttackError(RuntimeError):
    """A pipeline stage failed; ``stage_index`` says which one."""

    def __init__(self, message: str, stage_index: int | None = None, op: str | None = None):
        super().__init__(message)
        self.stage_index = stage_index
        self.op = op


def _identity(img, seed):
    return img.copy()


def _noise(sigma: float):
    NoiseParams(sigma)
    return lambda img, seed: add_pixel_noise(img, NoiseParams(sigma, seed))


def _blur(sigma: float, kernel_size: int | None = None, mode: str = "mirror"):
    p = BlurParams(sigma, kernel_size)
    if mode not in ("mirror", "periodic"):
        raise ValueError(f"unknown blur mode {mode!r}")
    return lambda img, seed: gaussian_blur(img, p, mode=mode)


def _jpeg(quality: int):
    p = JpegParams(quality)
    return lambda img, seed: jpeg_cycle(img, p)


def _latent_noise(sigma: float, d: int = 32, patch: int = 8, codec: str | None = None):
    NoiseParams(sigma)
    loaded = LatentCodec.load(codec) if codec else None
    if loaded is None and not 1 <= d <= patch * patch:
        raise ValueError(f"latent dimension d={d} outside [1, {patch * patch}]")

    def run(img, seed):
        # without a stored codec, fit the patch codec on the input itself
        c = loaded or fit_latent_codec([img], d, patch=patch)
        return add_latent_noise(img, c, NoiseParams(sigma, seed))

    return run


def _tikhonov(beta: float):
    p = RestorationParams(beta=beta, regularizer="tikhonov-gradient")
    return lambda img, seed: restore_tikhonov(img, p)


def _tv(beta: float, max_iters: int = 500, tol: float = 1e-5):
    p = RestorationParams(beta=beta, regularizer="total-variation", max_iters=max_iters, tol=tol)
    return lambda img, seed: restore_tv(img, p).image


def _wiener(sigma: float, nsr: float = 1e-3, kernel_size: int | None = None, boundary: str = "mirror"):
    blur = BlurParams(sigma, kernel_size)
    p = RestorationParams(wiener_nsr=nsr)
    if boundary not in ("mirror", "periodic"):
        raise ValueError(f"unknown boundary {boundary!r}")
    return lambda img, seed: wiener_deconvolve(img, blur, p, boundary=boundary)


# op name -> (factory, kind)
OPERATORS: dict[str, tuple[Callable[..., Callable], str]] = {
    "identity": (lambda: _identity, "degrade"),
    "noise": (_noise, "degrade"),
    "blur": (_blur, "degrade"),
    "jpeg": (_jpeg, "degrade"),
    "latent-noise": (_latent_noise, "degrade"),
    "tikhonov": (_tikhonov, "restore"),
    "tv": (_tv, "restore"),
    "wiener": (_wiener, "restore"),
}


@dataclass(frozen=True)
class Stage:
    op: str
    params: tuple[tuple[str, Any], ...] = ()
    _fn: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.params, dict):
            object.__setattr__(self, "params", tuple(sorted(self.params.items())))
        if self.op not in OPERATORS:
            raise ValueError(f"unknown operator {self.op!r}; known: {sorted(OPERATORS)}")
        try:
            fn = OPERATORS[self.op][0](**dict(self.params))
        except TypeError as exc:
            raise ValueError(f"operator {self.op!r}: bad parameters ({exc})") from None
        object.__setattr__(self, "_fn", fn)

    def __reduce__(self):
        return (Stage, (self.op, self.params))

    @classmethod
    def of(cls, op: str, **params) -> "Stage":
        return cls(op, tuple(sorted(params.items())))

    @property
    def kind(self) -> str:
        return OPERATORS[self.op][1]

    def apply(self, img: np.ndarray, seed: int) -> np.ndarray:
        return self._fn(img, seed)

    def describe(self) -> str:
        args = ",".join(f"{k}={v}" for k, v in self.params)
        return f"{self.op}({args})"


@dataclass(frozen=True)
class AttackPipeline:
    name: str
    stages: tuple[Stage, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ValueError(f"pipeline {self.name!r} needs at least one stage")

    def with_seed(self, seed: int) -> "AttackPipeline":
        return AttackPipeline(self.name, self.stages, seed)

    def stage_seed(self, index: int) -> int:
        return derive_seed(self.seed, index)

    def describe(self) -> str:
        return " -> ".join(s.describe() for s in self.stages)


def run_stage(img, pipe: AttackPipeline, index: int) -> np.ndarray:
    stage = pipe.stages[index]
    try:
        return stage.apply(img, pipe.stage_seed(index))
    except Exception as exc:
        raise AttackError(
            f"pipeline {pipe.name!r} stage {index} ({stage.op}): {exc}", stage_index=index, op=stage.op
        ) from exc


def run_attack(img, pipe: AttackPipeline) -> np.ndarray:
    """Apply the stages in order; the output is clamped to [0, 1]."""
    out = check_image(img)
    for i in range(len(pipe.stages)):
        out = run_stage(out, pipe, i)
    return clamp(out)


def builtin_pipelines(seed: int = 0) -> list[AttackPipeline]:
    """Classical stand-ins for the learned denoise, JPEG-artifact and deblur
    restorers, plus latent-space noise through a patch PCA autoencoder."""
    return [
        AttackPipeline("denoise-attack", (Stage.of("noise", sigma=0.05), Stage.of("tv", beta=0.1)), seed),
        AttackPipeline("jpeg-ar-attack", (Stage.of("jpeg", quality=30), Stage.of("tv", beta=0.05)), seed),
        AttackPipeline(
            "deblur-attack",
            (
                Stage.of("blur", sigma=15.0, kernel_size=71),
                Stage.of("wiener", sigma=15.0, kernel_size=71, nsr=1e-3),
            ),
            seed,
        ),
        AttackPipeline("latent-attack", (Stage.of("latent-noise", sigma=0.1, d=32, patch=8),), seed),
    ]


def distortion_pipelines(seed: int = 0) -> list[AttackPipeline]:
    """Common non-malicious distortions: noise, blur and JPEG."""
    return [
        AttackPipeline("gaussian-noise", (Stage.of("noise", sigma=0.02),), seed),
        AttackPipeline("gaussian-blur", (Stage.of("blur", sigma=1.0),), seed),
        AttackPipeline("jpeg-75", (Stage.of("jpeg", quality=75),), seed),
    ]


def identity_pipeline(seed: int = 0) -> AttackPipeline:
    return AttackPipeline("none", (Stage.of("identity"),), seed)


BUILTIN_NAMES = frozenset(
    p.name for p in builtin_pipelines() + distortion_pipelines() + [identity_pipeline()]
)


def get_pipeline(name: str, seed: int = 0) -> AttackPipeline:
    for p in builtin_pipelines(seed) + distortion_pipelines(seed) + [identity_pipeline(seed)]:
        if p.name == name:
            return p
    raise KeyError(f"no builtin pipeline named {name!r}; known: {sorted(BUILTIN_NAMES)}")


@dataclass(frozen=True)
class DegradationPrior:
    """Fixed parametric family of degradations with parameter ranges.

    ``sample`` picks one family member uniformly and draws its parameter
    uniformly from the configured range (JPEG quality as an integer).
    """

    noise_sigma: tuple[float, float] = (0.02, 0.08)
    blur_sigma: tuple[float, float] = (1.0, 4.0)
    jpeg_quality: tuple[int, int] = (20, 60)
    latent_sigma: tuple[float, float] = (0.05, 0.15)
    families: tuple[str, ...] = ("noise", "blur", "jpeg", "latent-noise")

    def sample(self, seed: int) -> Stage:
        g = rng(seed)
        fam = self.families[int(g.integers(len(self.families)))]
        if fam == "noise":
            return Stage.of("noise", sigma=float(g.uniform(*self.noise_sigma)))
        if fam == "blur":
            return Stage.of("blur", sigma=float(g.uniform(*self.blur_sigma)))
        if fam == "jpeg":
            lo, hi = self.jpeg_quality
            return Stage.of("jpeg", quality=int(g.integers(lo, hi + 1)))
        if fam == "latent-noise":
            return Stage.of("latent-noise", sigma=float(g.uniform(*self.latent_sigma)))
        raise ValueError(f"unknown degradation family {fam!r}")
