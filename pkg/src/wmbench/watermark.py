"""Watermark codecs: the targets the attacks act on.

Two classical codecs cover the two regimes of interest:

* an additive spatial codec ``luma + alpha * W`` whose pattern ``W`` is a
  zero-mean, unit-RMS pseudo-random field carrying a payload (fragile to
  low-pass filtering), and
* a multi-bit spread-spectrum codec on mid-band 8x8 DCT coefficients with
  redundant chips per bit (robust to JPEG and mild noise).

Both report bit accuracy, the fraction of payload bits recovered.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import uniform_filter

from ._rng import rng, tag
from .image import (
    BlockDCT,
    ImageError,
    check_image,
    clamped_fraction,
    dct8x8_blocks,
    idct8x8_blocks,
    luma,
    same_geometry,
    with_luma,
)

DEFAULT_ADDITIVE_THRESHOLD = 0.1
DEFAULT_SS_THRESHOLD = 0.75


class CapacityError(ValueError):
    """Image too small to carry the requested payload."""


@dataclass(frozen=True, eq=False)
class DetectionResult:
    bit_accuracy: float
    correlation: float
    decision: bool
    threshold: float
    bits: np.ndarray = field(repr=False)


def payload_from_seed(seed: int, n_bits: int = 64) -> tuple[int, ...]:
    return tuple(int(b) for b in rng(seed, tag("payload")).integers(0, 2, size=n_bits))


def _bit_accuracy(decoded: np.ndarray, payload) -> float:
    return float(np.mean(decoded == np.asarray(payload)))


# ----------------------------------------------------------------------------
# additive spatial codec


@dataclass(frozen=True, eq=False)
class AdditivePattern:
    """Zero-mean, unit-RMS pattern ``W`` and its embedding strength.

    Pixel ``i`` belongs to bit ``bit_index[i]`` and carries the pseudo-random
    sign ``chips[i]``; before normalization ``W = chips * (2 b - 1)``.
    """

    pattern: np.ndarray
    strength: float
    payload: tuple[int, ...]
    chips: np.ndarray = field(repr=False)
    bit_index: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 0 <= self.strength <= 0.2:
            raise ValueError(f"strength must lie in [0, 0.2], got {self.strength}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.pattern.shape


def make_additive_pattern(shape, seed: int, payload=64, strength: float = 0.02) -> AdditivePattern:
    """Build the keyed pattern for an image of luma shape ``(h, w)``.

    ``payload`` is either a bit sequence or a bit count (bits then derived
    from ``seed``).
    """
    h, w = shape
    if isinstance(payload, int):
        payload = payload_from_seed(seed, payload)
    payload = tuple(int(b) for b in payload)
    n = len(payload)
    if n < 1 or n > h * w:
        raise CapacityError(f"payload of {n} bits does not fit {h}x{w} pixels")
    g = rng(seed, tag("additive"))
    chips = g.choice(np.array([-1.0, 1.0]), size=(h, w))
    bit_index = (g.permutation(h * w) % n).reshape(h, w)
    raw = chips * (2.0 * np.asarray(payload, dtype=np.float64)[bit_index] - 1.0)
    raw = raw - raw.mean()
    pattern = raw / np.sqrt(np.mean(raw * raw))
    pattern.setflags(write=False)
    return AdditivePattern(pattern, float(strength), payload, chips, bit_index)


def embed_additive(img, wm: AdditivePattern, info: dict | None = None) -> np.ndarray:
    """``luma' = clamp(luma + strength * W)``; chroma differences unchanged."""
    img = check_image(img)
    y = luma(img)
    if y.shape != wm.shape:
        raise ImageError(f"pattern {wm.shape} does not match image luma {y.shape}")
    if wm.strength == 0:
        return img.copy()
    raw = with_luma(img, y + wm.strength * wm.pattern, clip=False)
    if info is not None:
        info["clamped_fraction"] = clamped_fraction(raw)
    return np.clip(raw, 0.0, 1.0)


def highpass(channel: np.ndarray) -> np.ndarray:
    """Channel minus its 3x3 box-blurred copy (mirror boundary)."""
    return channel - uniform_filter(channel, size=3, mode="reflect")


def _normalized_correlation(a: np.ndarray, b: np.ndarray) -> float:
    na = math.sqrt(float(np.sum(a * a)))
    nb = math.sqrt(float(np.sum(b * b)))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.sum(a * b) / (na * nb))


def detect_additive(
    img, wm: AdditivePattern, original=None, threshold: float = DEFAULT_ADDITIVE_THRESHOLD
) -> DetectionResult:
    """Correlate the image residual with ``W``.

    Blind mode uses the high-pass residual of the luma; informed mode
    (``original`` given) uses ``luma - original_luma``. Each bit is the sign
    of its pixels' residual correlated against their chip signs.
    """
    img = check_image(img)
    y = luma(img)
    if y.shape != wm.shape:
        raise ImageError(f"pattern {wm.shape} does not match image luma {y.shape}")
    if original is None:
        residual = highpass(y)
    else:
        original = check_image(original, "original")
        same_geometry(img, original)
        residual = y - luma(original)
    corr = _normalized_correlation(residual, wm.pattern)
    n = len(wm.payload)
    sums = np.bincount(wm.bit_index.ravel(), weights=(residual * wm.chips).ravel(), minlength=n)
    bits = (sums > 0).astype(np.int64)
    return DetectionResult(_bit_accuracy(bits, wm.payload), corr, corr >= threshold, threshold, bits)


# ----------------------------------------------------------------------------
# spread-spectrum 8x8 DCT codec


def mid_band(lo: int = 3, hi: int = 6) -> tuple[tuple[int, int], ...]:
    return tuple((u, v) for u in range(8) for v in range(8) if lo <= u + v <= hi)


@dataclass(frozen=True)
class SpreadSpectrumKey:
    """Seed, payload and modulation settings of the spread-spectrum codec.

    ``gamma`` is in 8-bit orthonormal-DCT units (coefficients of
    ``255 * luma``). With ``host_rejection`` the embedder cancels the host
    image's projection onto each bit's carrier, so the detector only sees
    attack noise.
    """

    seed: int
    payload: tuple[int, ...]
    gamma: float = 4.0
    chips_per_bit: int = 16
    band_lo: int = 3
    band_hi: int = 6
    host_rejection: bool = True
    passes: int = 4

    def __post_init__(self):
        object.__setattr__(self, "payload", tuple(int(b) for b in self.payload))
        if len(self.payload) < 1 or any(b not in (0, 1) for b in self.payload):
            raise ValueError("payload must be a non-empty bit sequence")
        if self.gamma < 0 or self.chips_per_bit < 1 or self.passes < 1:
            raise ValueError("gamma must be >= 0, chips_per_bit and passes >= 1")
        if not 1 <= self.band_lo <= self.band_hi <= 14:
            raise ValueError(f"band {self.band_lo}..{self.band_hi} must exclude DC and fit in 8x8")

    @classmethod
    def from_seed(cls, seed: int, n_bits: int = 64, **kw) -> "SpreadSpectrumKey":
        return cls(seed=seed, payload=payload_from_seed(seed, n_bits), **kw)

    @property
    def band(self) -> tuple[tuple[int, int], ...]:
        return mid_band(self.band_lo, self.band_hi)

    @property
    def n_bits(self) -> int:
        return len(self.payload)

    # text record --------------------------------------------------------

    def dumps(self) -> str:
        return "".join(
            [
                "# wmbench spread-spectrum key v1\n",
                f"seed = {self.seed}\n",
                f"gamma = {self.gamma!r}\n",
                f"chips_per_bit = {self.chips_per_bit}\n",
                f"bits = {self.n_bits}\n",
                f"payload = {_bits_to_hex(self.payload)}\n",
                f"band = {self.band_lo}..{self.band_hi}\n",
                f"host_rejection = {str(self.host_rejection).lower()}\n",
                f"passes = {self.passes}\n",
            ]
        )

    @classmethod
    def loads(cls, text: str) -> "SpreadSpectrumKey":
        rec = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            m = re.fullmatch(r"([a-z_]+)\s*=\s*(\S+)", line)
            if not m:
                raise ValueError(f"key record line {lineno}: cannot parse {line!r}")
            rec[m.group(1)] = m.group(2)
        known = {"seed", "gamma", "chips_per_bit", "bits", "payload", "band", "host_rejection", "passes"}
        unknown = set(rec) - known
        if unknown:
            raise ValueError(f"key record: unknown fields {sorted(unknown)}")
        try:
            lo, hi = (int(x) for x in rec["band"].split(".."))
            return cls(
                seed=int(rec["seed"]),
                payload=_hex_to_bits(rec["payload"], int(rec["bits"])),
                gamma=float(rec["gamma"]),
                chips_per_bit=int(rec["chips_per_bit"]),
                band_lo=lo,
                band_hi=hi,
                host_rejection=rec.get("host_rejection", "true") == "true",
                passes=int(rec.get("passes", 4)),
            )
        except KeyError as exc:
            raise ValueError(f"key record: missing field {exc.args[0]!r}") from None

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.dumps())
        return path

    @classmethod
    def load(cls, path) -> "SpreadSpectrumKey":
        return cls.loads(Path(path).read_text())


def _bits_to_hex(bits) -> str:
    n = len(bits)
    padded = list(bits) + [0] * ((-n) % 8)
    return bytes(np.packbits(np.array(padded, dtype=np.uint8))).hex()


def _hex_to_bits(text: str, n: int) -> tuple[int, ...]:
    raw = np.unpackbits(np.frombuffer(bytes.fromhex(text), dtype=np.uint8))
    if raw.size < n:
        raise ValueError(f"payload hex holds {raw.size} bits, need {n}")
    return tuple(int(b) for b in raw[:n])


@dataclass(frozen=True, eq=False)
class _Carriers:
    by: np.ndarray
    bx: np.ndarray
    u: np.ndarray
    v: np.ndarray
    signs: np.ndarray  # shape (n_bits, chips_per_bit)
    region: tuple[int, int]  # full-block area used


def _carriers(shape: tuple[int, int], key: SpreadSpectrumKey) -> _Carriers:
    h, w = shape
    nby, nbx = h // 8, w // 8
    band = np.array(key.band)
    available = nby * nbx * len(band)
    required = key.n_bits * key.chips_per_bit
    if required > available:
        raise CapacityError(
            f"capacity insufficient: {required} chips required, {available} available "
            f"in {nby}x{nbx} full 8x8 blocks of a {h}x{w} image"
        )
    g = rng(key.seed, tag("ss-carriers"))
    pos = g.permutation(available)[:required]
    signs = g.choice(np.array([-1.0, 1.0]), size=required).reshape(key.n_bits, key.chips_per_bit)
    blk, ci = np.divmod(pos, len(band))
    by, bx = np.divmod(blk, nbx)
    return _Carriers(by, bx, band[ci, 0], band[ci, 1], signs, (nby * 8, nbx * 8))


def _chip_values(y: np.ndarray, car: _Carriers) -> tuple[BlockDCT, np.ndarray]:
    rh, rw = car.region
    blocks = dct8x8_blocks(255.0 * y[:rh, :rw])
    vals = blocks.coeffs[car.by, car.bx, car.u, car.v]
    return blocks, vals.reshape(car.signs.shape)


def embed_ss(img, key: SpreadSpectrumKey, info: dict | None = None) -> np.ndarray:
    """Modulate each payload bit onto its chips: ``coeff += s * (gamma (2b - 1) - h)``.

    ``h`` is the host's mean chip correlation for the bit when host
    rejection is on (zero otherwise). With host rejection the step is
    repeated ``key.passes`` times so that clamping losses are re-corrected.
    """
    img = check_image(img)
    car = _carriers(luma(img).shape, key)
    if key.gamma == 0:
        if info is not None:
            info["clamped_fraction"] = 0.0
        return img.copy()
    target = key.gamma * (2.0 * np.asarray(key.payload, dtype=np.float64) - 1.0)
    passes = key.passes if key.host_rejection else 1
    out = img
    raw = img
    for _ in range(passes):
        y = luma(out)
        blocks, vals = _chip_values(y, car)
        host = np.mean(vals * car.signs, axis=1) if key.host_rejection else 0.0
        delta = (target - host)[:, None] * car.signs
        coeffs = blocks.coeffs.copy()
        np.add.at(coeffs, (car.by, car.bx, car.u, car.v), delta.ravel())
        rh, rw = car.region
        y2 = y.copy()
        y2[:rh, :rw] = idct8x8_blocks(BlockDCT(coeffs, blocks.shape)) / 255.0
        raw = with_luma(out, y2, clip=False)
        out = np.clip(raw, 0.0, 1.0)
    if info is not None:
        info["clamped_fraction"] = clamped_fraction(raw)
    return out


def ss_statistics(img, key: SpreadSpectrumKey) -> tuple[np.ndarray, float]:
    """Per-bit chip sums and the normalized correlation with the expected
    chip pattern ``s * (2b - 1)``."""
    img = check_image(img)
    car = _carriers(luma(img).shape, key)
    _, vals = _chip_values(luma(img), car)
    prod = vals * car.signs
    sums = prod.sum(axis=1)
    expected = 2.0 * np.asarray(key.payload, dtype=np.float64) - 1.0
    energy = float(np.sum(vals * vals))
    corr = 0.0 if energy == 0 else float(np.sum(sums * expected) / math.sqrt(energy * vals.size))
    return sums, corr


def extract_ss(img, key: SpreadSpectrumKey, threshold: float = DEFAULT_SS_THRESHOLD) -> DetectionResult:
    """Blind extraction: each bit is the sign of its chip correlation."""
    sums, corr = ss_statistics(img, key)
    bits = (sums > 0).astype(np.int64)
    acc = _bit_accuracy(bits, key.payload)
    return DetectionResult(acc, corr, acc >= threshold, threshold, bits)


# ----------------------------------------------------------------------------
# seed-driven codec front ends used by the harness


@dataclass(frozen=True)
class AdditiveCodec:
    strength: float = 0.02
    n_bits: int = 64
    threshold: float = DEFAULT_ADDITIVE_THRESHOLD
    name: str = "additive"

    def key(self, seed: int, shape) -> AdditivePattern:
        return make_additive_pattern(shape, seed, self.n_bits, self.strength)

    def embed(self, img, seed: int, info: dict | None = None) -> np.ndarray:
        img = check_image(img)
        return embed_additive(img, self.key(seed, img.shape[:2]), info)

    def detect(self, img, seed: int) -> DetectionResult:
        img = check_image(img)
        return detect_additive(img, self.key(seed, img.shape[:2]), threshold=self.threshold)


@dataclass(frozen=True)
class SpreadSpectrumCodec:
    gamma: float = 4.0
    n_bits: int = 64
    chips_per_bit: int = 16
    threshold: float = DEFAULT_SS_THRESHOLD
    host_rejection: bool = True
    name: str = "spread-spectrum"

    def key(self, seed: int, shape=None) -> SpreadSpectrumKey:
        return SpreadSpectrumKey.from_seed(
            seed,
            self.n_bits,
            gamma=self.gamma,
            chips_per_bit=self.chips_per_bit,
            host_rejection=self.host_rejection,
        )

    def embed(self, img, seed: int, info: dict | None = None) -> np.ndarray:
        return embed_ss(img, self.key(seed), info)

    def detect(self, img, seed: int) -> DetectionResult:
        return extract_ss(img, self.key(seed), threshold=self.threshold)
