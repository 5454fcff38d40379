"""Frequency-domain diagnostics: pixel-noise energy law, blur suppression
of a watermark's spectrum, and radial band energy profiles."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from ._rng import derive_seed
from .degrade import BlurParams, NoiseParams, pixel_noise, suppression_ratio
from .image import check_image, dft2, luma, radial_frequency, same_geometry
from .svg import line_plot

MAX_RADIUS = math.sqrt(2.0) / 2.0
DEFAULT_BANDS = 8


def band_edges(n_bands: int = DEFAULT_BANDS) -> np.ndarray:
    """Equal-width radial edges covering [0, sqrt(2)/2]."""
    return np.linspace(0.0, MAX_RADIUS, n_bands + 1)


def band_index(shape: tuple[int, int], edges: np.ndarray) -> np.ndarray:
    """Band of every DFT bin; DC falls in band 0, the corner in the last."""
    r = radial_frequency(*shape)
    idx = np.searchsorted(edges, r, side="right") - 1
    return np.clip(idx, 0, len(edges) - 2)


def watermark_spectrum(clean, marked) -> np.ndarray:
    """DFT of the luma difference ``marked - clean`` (alpha * W_hat for an
    unclamped additive embed)."""
    clean, marked = check_image(clean, "clean"), check_image(marked, "marked")
    same_geometry(clean, marked)
    return dft2(luma(marked) - luma(clean))


@dataclass
class BandEnergyReport:
    edges: np.ndarray
    bins: np.ndarray
    reference_energy: np.ndarray
    attacked_energy: np.ndarray
    predicted: np.ndarray | None = None
    predicted_weighted: np.ndarray | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def measured(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.reference_energy > 0, self.attacked_energy / self.reference_energy, np.nan)

    @property
    def populated(self) -> np.ndarray:
        return self.bins > 0

    def total_reference_energy(self) -> float:
        return float(np.sum(self.reference_energy))

    def rows(self) -> list[dict]:
        out = []
        measured = self.measured
        for b in range(len(self.bins)):
            if not self.bins[b]:
                continue
            pred = None if self.predicted is None else float(self.predicted[b])
            m = float(measured[b])
            out.append(
                {
                    "band": b,
                    "r_lo": float(self.edges[b]),
                    "r_hi": float(self.edges[b + 1]),
                    "bins": int(self.bins[b]),
                    "reference_energy": float(self.reference_energy[b]),
                    "attacked_energy": float(self.attacked_energy[b]),
                    "measured": m,
                    "predicted": pred,
                    "ratio": (m / pred) if pred else None,
                }
            )
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["band", "r_lo", "r_hi", "bins", "reference_energy", "attacked_energy", "measured", "predicted", "ratio"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in self.rows():
            w.writerow(["" if row[c] is None else (f"{row[c]:.10g}" if isinstance(row[c], float) else row[c]) for c in cols])
        return buf.getvalue()

    def to_svg(self, title: str = "watermark energy surviving per radial band") -> str:
        centers = [(self.edges[b] + self.edges[b + 1]) / 2 for b in range(len(self.bins)) if self.bins[b]]
        keep = self.bins > 0
        series = {"measured": (centers, list(self.measured[keep]))}
        if self.predicted is not None:
            series["predicted |H|^2"] = (centers, list(self.predicted[keep]))
        return line_plot(series, title=title, xlabel="radial frequency (cycles/pixel)", ylabel="surviving energy ratio", logy=True)

    def write(self, out_dir, stem: str = "spectrum") -> list[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = [out_dir / f"{stem}.csv", out_dir / f"{stem}.svg"]
        paths[0].write_text(self.to_csv())
        paths[1].write_text(self.to_svg())
        return paths


def _band_sums(values: np.ndarray, idx: np.ndarray, n: int) -> np.ndarray:
    return np.bincount(idx.ravel(), weights=values.ravel(), minlength=n)[:n]


def suppression_profile(
    clean, marked, attacked, edges=None, blur: BlurParams | None = None, attacked_clean=None
) -> BandEnergyReport:
    """Per radial band, the share of the watermark's spectral energy that
    survives the attack: E(attacked - clean) / E(marked - clean).

    With ``blur`` the analytic |H|^2 is averaged per band, both plainly and
    weighted by the watermark's own spectral energy.

    An attack also changes the host, which pollutes ``attacked - clean``
    unless the host is flat. Passing ``attacked_clean`` (the same attack
    applied to ``clean``) measures ``attacked - attacked_clean`` instead,
    which isolates the attacked watermark for any linear attack.
    """
    clean = check_image(clean, "clean")
    for other, name in ((marked, "marked"), (attacked, "attacked")):
        same_geometry(clean, check_image(other, name))
    edges = band_edges() if edges is None else np.asarray(edges, dtype=np.float64)
    n = len(edges) - 1
    ref = np.abs(watermark_spectrum(clean, marked)) ** 2
    if attacked_clean is None:
        att = np.abs(watermark_spectrum(clean, attacked)) ** 2
    else:
        same_geometry(clean, check_image(attacked_clean, "attacked_clean"))
        att = np.abs(watermark_spectrum(attacked_clean, attacked)) ** 2
    idx = band_index(ref.shape, edges)
    bins = np.bincount(idx.ravel(), minlength=n)[:n]
    rep = BandEnergyReport(edges, bins, _band_sums(ref, idx, n), _band_sums(att, idx, n))
    for b in np.flatnonzero(bins == 0):
        rep.notes.append(f"band {b} holds no frequency bins; skipped")
    if blur is not None:
        h2 = suppression_ratio(blur, ref.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            rep.predicted = np.where(bins > 0, _band_sums(h2, idx, n) / np.maximum(bins, 1), np.nan)
            rep.predicted_weighted = np.where(
                rep.reference_energy > 0, _band_sums(h2 * ref, idx, n) / rep.reference_energy, np.nan
            )
    return rep


def predicted_profile(blur: BlurParams, shape: tuple[int, int], edges=None) -> np.ndarray:
    """Band-averaged |H|^2 for ``blur`` on a DFT grid of ``shape``."""
    edges = band_edges() if edges is None else np.asarray(edges)
    n = len(edges) - 1
    idx = band_index(shape, edges)
    bins = np.bincount(idx.ravel(), minlength=n)[:n]
    h2 = suppression_ratio(blur, shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(bins > 0, _band_sums(h2, idx, n) / np.maximum(bins, 1), np.nan)


@dataclass
class NoiseEnergyReport:
    sigma: float
    shape: tuple[int, int]
    trials: int
    per_bin_mean: np.ndarray
    target: float
    grand_mean: float
    relative_error: float
    max_z: float
    passed: bool


def noise_energy_check(sigma: float, shape: tuple[int, int], trials: int = 200, seed: int = 0, rel_tol: float = 0.02, z_max: float = 6.0) -> NoiseEnergyReport:
    """Monte-Carlo check of E|n_hat(u, v)|^2 = sigma^2 M N at every bin.

    Passes iff the grand mean is within ``rel_tol`` of the target and no
    bin's mean strays more than ``z_max`` standard errors (Exp(1) spread at
    complex bins, chi-square(1) at self-conjugate ones).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    h, w = shape
    target = sigma * sigma * h * w
    acc = np.zeros(shape)
    for t in range(trials):
        n = pixel_noise(shape, NoiseParams(sigma, derive_seed(seed, t)))
        acc += np.abs(sfft.fft2(n)) ** 2
    mean = acc / trials
    grand = float(mean.mean())
    if target == 0:
        return NoiseEnergyReport(sigma, shape, trials, mean, 0.0, grand, 0.0, 0.0, bool(np.all(mean == 0)))
    ky = np.arange(h)[:, None]
    kx = np.arange(w)[None, :]
    self_conj = ((2 * ky) % h == 0) & ((2 * kx) % w == 0)
    se = target * np.where(self_conj, math.sqrt(2.0), 1.0) / math.sqrt(trials)
    max_z = float(np.max(np.abs(mean - target) / se))
    rel = abs(grand - target) / target
    return NoiseEnergyReport(sigma, shape, trials, mean, target, grand, rel, max_z, rel <= rel_tol and max_z <= z_max)


def noise_band_profile(report: NoiseEnergyReport, edges=None) -> tuple[np.ndarray, np.ndarray]:
    """Mean per-bin noise energy in each radial band, normalized by sigma^2 MN
    (flat at 1 for white noise), and the bin counts."""
    edges = band_edges() if edges is None else np.asarray(edges)
    n = len(edges) - 1
    idx = band_index(report.shape, edges)
    bins = np.bincount(idx.ravel(), minlength=n)[:n]
    sums = _band_sums(report.per_bin_mean, idx, n)
    with np.errstate(divide="ignore", invalid="ignore"):
        prof = np.where(bins > 0, sums / np.maximum(bins, 1), np.nan) / (report.target or 1.0)
    return prof, bins
