"""Experiment runners: the robustness grid and the protection-ratio study.

Per-image work is independent and may run in worker processes; results
come back in image order and are reduced in that order, so reports do not
depend on the worker count.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from .._rng import derive_seed, rng, tag
from ..attack import AttackPipeline, run_attack
from ..corpus import natural_crops, synthetic_scenes
from ..image import ImageError, psnr, ssim
from ..imageio import SUPPORTED_SUFFIXES, read_image
from .config import ExperimentConfig, marked_count

log = logging.getLogger(__name__)

SUBSTITUTION_NOTE = (
    "Rows vary the watermark codec; watermarks are detected directly on the attacked images, "
    "no generative model is trained on them."
)


class DatasetError(RuntimeError):
    """No usable images."""


@dataclass
class Dataset:
    name: str
    images: list[np.ndarray]
    files: list[str]
    warnings: list[str] = field(default_factory=list)


def _center_resize(img: np.ndarray, size: int) -> np.ndarray:
    from skimage.transform import resize

    h, w = img.shape[:2]
    s = min(h, w)
    y0, x0 = (h - s) // 2, (w - s) // 2
    img = img[y0 : y0 + s, x0 : x0 + s]
    if s != size:
        shape = (size, size) + img.shape[2:]
        img = resize(img, shape, order=1, anti_aliasing=s > size, mode="reflect")
    return np.clip(img, 0.0, 1.0)


def ingest_dataset(path, size: int | None = None) -> Dataset:
    """Read every PNG/PGM/PPM file of ``path`` in lexicographic order.

    Unreadable files become warnings; only an empty result is an error.
    With ``size`` every image is center-cropped to a square and resized.
    """
    path = Path(path)
    if not path.is_dir():
        raise DatasetError(f"{path}: not a directory")
    images, files, warnings = [], [], []
    for f in sorted(p for p in path.iterdir() if p.is_file()):
        if f.suffix.lower() not in SUPPORTED_SUFFIXES:
            continue
        try:
            img = read_image(f)
        except ImageError as exc:
            warnings.append(str(exc))
            log.warning("skipping %s", exc)
            continue
        images.append(_center_resize(img, size) if size else img)
        files.append(f.name)
    if not images:
        raise DatasetError(f"{path}: no valid images")
    return Dataset(path.name, images, files, warnings)


def load_datasets(cfg: ExperimentConfig) -> list[Dataset]:
    if cfg.datasets:
        return [ingest_dataset(p, cfg.image_size) for p in cfg.datasets]
    size = cfg.image_size or 128
    make = natural_crops if cfg.corpus == "natural" else synthetic_scenes
    imgs = make(cfg.corpus_size, size, cfg.seed)
    return [Dataset(f"{cfg.corpus}-{cfg.corpus_size}x{size}", imgs, [f"{i:04d}" for i in range(len(imgs))])]


# ----------------------------------------------------------------------------
# per-image work


def owner_seed(seed: int, codec_name: str) -> int:
    return derive_seed(seed, tag("owner-key:" + codec_name))


def attack_seed(seed: int, image_index: int) -> int:
    return derive_seed(seed, tag("attack"), image_index)


@dataclass
class _Job:
    index: int
    image: np.ndarray
    codecs: list
    pipelines: list[AttackPipeline]
    seed: int
    with_unmarked: bool
    metrics: tuple[str, ...]


def _measure(clean, attacked, metrics) -> tuple[float, float]:
    p = psnr(clean, attacked) if "psnr" in metrics else math.nan
    s = ssim(clean, attacked) if "ssim" in metrics else math.nan
    return p, s


def _image_work(job: _Job) -> dict:
    """Outcomes of one image for every (codec, attack) cell."""
    out = {}
    for codec in job.codecs:
        key_seed = owner_seed(job.seed, codec.name)
        info: dict = {}
        t0 = time.perf_counter()
        marked = codec.embed(job.image, key_seed, info)
        embed_time = time.perf_counter() - t0
        for pipe in job.pipelines:
            t0 = time.perf_counter()
            p = pipe.with_seed(attack_seed(job.seed, job.index))
            att = run_attack(marked, p)
            det = codec.detect(att, key_seed)
            q = _measure(job.image, att, job.metrics)
            rec = {
                "acc_m": det.bit_accuracy,
                "dec_m": float(det.decision),
                "psnr_m": q[0],
                "ssim_m": q[1],
                "clamped": info.get("clamped_fraction", 0.0),
            }
            if job.with_unmarked:
                att_u = run_attack(job.image, p)
                det_u = codec.detect(att_u, key_seed)
                qu = _measure(job.image, att_u, job.metrics)
                rec.update(acc_u=det_u.bit_accuracy, dec_u=float(det_u.decision), psnr_u=qu[0], ssim_u=qu[1])
            rec["time"] = time.perf_counter() - t0 + embed_time / len(job.pipelines)
            out[(codec.name, pipe.name)] = rec
    return out


def _run_jobs(jobs: list[_Job], workers: int) -> list[dict]:
    if workers <= 1 or len(jobs) <= 1:
        return [_image_work(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_image_work, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


# ----------------------------------------------------------------------------
# reports


@dataclass
class ExperimentReport:
    kind: str
    rows: list[dict]
    provenance: dict
    timings: dict = field(default_factory=dict)

    def row(self, codec: str, attack: str, ratio: float = 1.0) -> dict:
        for r in self.rows:
            if r["codec"] == codec and r["attack"] == attack and math.isclose(r["ratio"], ratio):
                return r
        raise KeyError((codec, attack, ratio))


def _mean(values) -> float:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0 or np.all(np.isnan(v)):
        return math.nan
    if np.any(np.isposinf(v)):
        return math.inf
    return float(np.mean(v))


def _se(values) -> float:
    v = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        return math.nan
    return float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0


def _aggregate(groups: list[list[float]], how: str) -> tuple[float, float]:
    """Mean and standard error over images, micro or macro across datasets."""
    groups = [g for g in groups if len(g)]
    if not groups:
        return math.nan, math.nan
    if how == "micro" or len(groups) == 1:
        flat = [x for g in groups for x in g]
        return _mean(flat), _se(flat)
    means = [_mean(g) for g in groups]
    return _mean(means), math.sqrt(sum(_se(g) ** 2 for g in groups)) / len(groups)


def _provenance(cfg: ExperimentConfig, datasets: list[Dataset], pipelines, codecs, kind: str) -> dict:
    return {
        "kind": kind,
        "toolkit_version": __version__,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "aggregation": cfg.aggregation,
        "datasets": [{"name": d.name, "n_images": len(d.images), "warnings": d.warnings} for d in datasets],
        "codecs": [repr(c) for c in codecs],
        "attacks": {p.name: p.describe() for p in pipelines},
        "note": SUBSTITUTION_NOTE,
    }


def _collect(cfg, kind):
    datasets = load_datasets(cfg)
    codecs = cfg.build_codecs()
    pipelines = cfg.build_pipelines()
    images = [(di, img) for di, d in enumerate(datasets) for img in d.images]
    metrics = tuple(cfg.metrics)
    jobs = [
        _Job(i, img, codecs, pipelines, cfg.seed, kind == "mix", metrics) for i, (_, img) in enumerate(images)
    ]
    t0 = time.perf_counter()
    results = _run_jobs(jobs, cfg.workers)
    total = time.perf_counter() - t0
    ds_of = [di for di, _ in images]
    return datasets, codecs, pipelines, results, ds_of, total


def _by_dataset(values, ds_of, n_ds, select=None):
    groups = [[] for _ in range(n_ds)]
    for i, v in enumerate(values):
        if select is None or select[i]:
            groups[ds_of[i]].append(v)
    return groups


def run_robustness_grid(cfg: ExperimentConfig) -> ExperimentReport:
    """Every codec against every configured attack, all images watermarked."""
    datasets, codecs, pipelines, results, ds_of, total = _collect(cfg, "grid")
    n = len(results)
    rows, timings = [], {"total_seconds": total}
    for codec in codecs:
        for pipe in pipelines:
            recs = [r[(codec.name, pipe.name)] for r in results]
            g = lambda k: _by_dataset([r[k] for r in recs], ds_of, len(datasets))  # noqa: E731
            acc, se = _aggregate(g("acc_m"), cfg.aggregation)
            rows.append(
                {
                    "codec": codec.name,
                    "attack": pipe.name,
                    "ratio": 1.0,
                    "n_images": n,
                    "n_marked": n,
                    "acc": acc,
                    "acc_marked": acc,
                    "acc_unmarked": math.nan,
                    "acc_se": se,
                    "mixture_prediction": acc,
                    "detect_rate": _aggregate(g("dec_m"), cfg.aggregation)[0],
                    "psnr": _aggregate(g("psnr_m"), cfg.aggregation)[0],
                    "ssim": _aggregate(g("ssim_m"), cfg.aggregation)[0],
                    "clamped_fraction": _aggregate(g("clamped"), cfg.aggregation)[0],
                }
            )
            timings[f"{codec.name}/{pipe.name}"] = float(sum(r["time"] for r in recs))
    return ExperimentReport("grid", rows, _provenance(cfg, datasets, pipelines, codecs, "grid"), timings)


def mixing_selection(n: int, ratio: float, seed: int) -> np.ndarray:
    """Boolean mask of the ``ceil(ratio * n)`` watermarked images.

    One seeded shuffle serves every ratio, so larger ratios watermark a
    superset of the images chosen for smaller ones.
    """
    order = rng(seed, tag("mixing")).permutation(n)
    mask = np.zeros(n, dtype=bool)
    mask[order[: marked_count(ratio, n)]] = True
    return mask


def run_mixing_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Watermark a ``ratio`` share of the dataset, attack everything, and
    detect on everything, for each configured ratio."""
    datasets, codecs, pipelines, results, ds_of, total = _collect(cfg, "mix")
    n = len(results)
    rows, timings = [], {"total_seconds": total}
    for codec in codecs:
        for pipe in pipelines:
            recs = [r[(codec.name, pipe.name)] for r in results]
            timings[f"{codec.name}/{pipe.name}"] = float(sum(r["time"] for r in recs))
            for ratio in cfg.ratios:
                mask = mixing_selection(n, ratio, cfg.seed)
                k = int(mask.sum())
                if k != marked_count(ratio, n):
                    raise AssertionError("mixing selection size mismatch")

                def pick(field_m, field_u):
                    return [recs[i][field_m] if mask[i] else recs[i][field_u] for i in range(n)]

                groups = lambda vals, sel=None: _by_dataset(vals, ds_of, len(datasets), sel)  # noqa: E731
                acc, se = _aggregate(groups(pick("acc_m", "acc_u")), cfg.aggregation)
                acc_m = _aggregate(groups([r["acc_m"] for r in recs], mask), cfg.aggregation)[0]
                acc_u = _aggregate(groups([r["acc_u"] for r in recs], ~mask), cfg.aggregation)[0]
                pred = ratio * acc_m + (1.0 - ratio) * 0.5
                clamped = _aggregate(groups([r["clamped"] for r in recs], mask), cfg.aggregation)[0]
                rows.append(
                    {
                        "codec": codec.name,
                        "attack": pipe.name,
                        "ratio": float(ratio),
                        "n_images": n,
                        "n_marked": k,
                        "acc": acc,
                        "acc_marked": acc_m,
                        "acc_unmarked": acc_u,
                        "acc_se": se,
                        "mixture_prediction": pred,
                        "detect_rate": _aggregate(groups(pick("dec_m", "dec_u")), cfg.aggregation)[0],
                        # image quality of the watermarked share only (unmarked + none is exact)
                        "psnr": _aggregate(groups([r["psnr_m"] for r in recs], mask), cfg.aggregation)[0],
                        "ssim": _aggregate(groups([r["ssim_m"] for r in recs], mask), cfg.aggregation)[0],
                        "clamped_fraction": clamped,
                    }
                )
    return ExperimentReport("mix", rows, _provenance(cfg, datasets, pipelines, codecs, "mix"), timings)
