"""The eight acceptance criteria, at their stated tolerances.

Each test prints one PASS/FAIL line (also collected in the terminal summary).
"""
import dataclasses
import time

import numpy as np
import pytest

from wmbench._rng import rng
from wmbench.corpus import natural_crops
from wmbench.degrade import BlurParams, fit_latent_codec, gaussian_blur, suppression_ratio
from wmbench.harness import ExperimentConfig, run_mixing_experiment, run_robustness_grid, to_csv
from wmbench.image import dft2
from wmbench.restore import RestorationParams, restore_tikhonov, restore_tv, wiener_deconvolve
from wmbench.spectral import noise_energy_check
from wmbench.watermark import embed_additive, make_additive_pattern


@pytest.fixture(scope="module")
def full_grid():
    # default configuration: 100 natural 128x128 crops, both codecs, 7 cells
    cfg = ExperimentConfig(workers=1)
    t0 = time.perf_counter()
    report = run_robustness_grid(cfg)
    return report, time.perf_counter() - t0


def test_noise_spectral_law(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for sigma in (0.02, 0.05, 0.1):
        for shape in ((64, 64), (17, 23)):
            worst = max(worst, noise_energy_check(sigma, shape, trials=200, seed=1).relative_error)
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.02 and elapsed < 10
    verdict("[1] noise energy sigma^2 MN", ok, f"worst grand-mean error {worst:.4%} (<= 2%), {elapsed:.2f} s (< 10 s)")
    assert ok


def test_blur_suppression_law(verdict):
    t0 = time.perf_counter()
    img = natural_crops(1, 128, seed=3)[0] * 0.8 + 0.1
    marked = embed_additive(img, make_additive_pattern(img.shape, 7, strength=0.02))
    ref = np.abs(dft2(marked - img)) ** 2
    worst = 0.0
    for sigma in (1.0, 2.0, 4.0):
        blur = BlurParams(sigma)
        attacked = gaussian_blur(marked, blur, mode="periodic") - gaussian_blur(img, blur, mode="periodic")
        h2 = suppression_ratio(blur, img.shape)
        # the ratio is undefined where the watermark itself has no energy (its DC bin)
        mask = (np.sqrt(h2) > 0.01) & (ref > 1e-12 * ref.max())
        rel = np.abs(np.abs(dft2(attacked))[mask] ** 2 / ref[mask] - h2[mask]) / h2[mask]
        worst = max(worst, float(rel.max()))
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.05 and elapsed < 10
    verdict("[2] blur attenuation |H|^2", ok, f"worst per-bin relative error {worst:.2e} (<= 5%), {elapsed:.2f} s")
    assert ok


def test_latent_noise_energy_law(verdict):
    t0 = time.perf_counter()
    corpus = natural_crops(100, 32, seed=4)
    errs = []
    for d in (8, 32):
        codec = fit_latent_codec(corpus, d)
        g = rng(99, d)
        z = codec.encode(corpus[0])
        base = codec.decode_vectors(z)
        energies = [np.sum((codec.decode_vectors(z + g.normal(0, 0.1, z.shape)) - base) ** 2) for _ in range(1000)]
        errs.append(abs(np.mean(energies) - 0.01 * d) / (0.01 * d))
    elapsed = time.perf_counter() - t0
    ok = max(errs) <= 0.02 and elapsed < 30
    verdict("[3] latent noise sigma^2 d", ok, f"relative errors d=8 {errs[0]:.4%}, d=32 {errs[1]:.4%} (<= 2%), {elapsed:.2f} s")
    assert ok


def _dense_tikhonov(y, beta):
    h, w = y.shape

    def diff(n):
        m = -np.eye(n)
        m[np.arange(n), (np.arange(n) + 1) % n] += 1
        return m

    dy, dx = np.kron(diff(h), np.eye(w)), np.kron(np.eye(h), diff(w))
    a = np.eye(h * w) + beta * (dy.T @ dy + dx.T @ dx)
    return np.clip(np.linalg.solve(a, y.ravel()).reshape(h, w), 0, 1)


def test_restoration_optimality(verdict):
    g = rng(5)
    tik = 0.0
    for shape in ((4, 4), (8, 13), (16, 16), (31, 17), (32, 32)):
        for beta in (0.05, 0.5, 4.0):
            y = g.random(shape)
            got = restore_tikhonov(y, RestorationParams(beta=beta, regularizer="tikhonov-gradient"))
            tik = max(tik, float(np.max(np.abs(got - _dense_tikhonov(y, beta)))))
    tv = 0.0
    for img in natural_crops(4, 48, seed=6):
        y = np.clip(img + g.normal(0, 0.05, img.shape), 0, 1)
        run = restore_tv(y, RestorationParams(beta=0.1))
        oracle = restore_tv(y, RestorationParams(beta=0.1, max_iters=5000, tol=1e-14))
        tv = max(tv, run.objective / oracle.objective - 1)
    x = natural_crops(1, 32, seed=8)[0]
    blur = BlurParams(1.0)
    inv = wiener_deconvolve(gaussian_blur(x, blur, mode="periodic", clip=False), blur, RestorationParams(wiener_nsr=0.0))
    wien = float(np.max(np.abs(inv - x)))
    ok = tik <= 1e-8 and tv <= 0.01 and wien <= 1e-6
    verdict(
        "[4] restoration optimality",
        ok,
        f"Tikhonov vs dense {tik:.1e} (<= 1e-8); TV excess {tv:.3%} (<= 1%); Wiener K=0 {wien:.1e} (<= 1e-6)",
    )
    assert ok


def test_attack_pattern_reproduction(verdict, full_grid):
    report, _ = full_grid
    ss_jpeg = report.row("spread-spectrum", "jpeg-75")["acc"]
    ss_noise = report.row("spread-spectrum", "gaussian-noise")["acc"]
    deblur = report.row("additive", "deblur-attack")
    parts = {
        "SS Acc JPEG-75 >= 0.95": ss_jpeg >= 0.95,
        "SS Acc noise 0.02 >= 0.95": ss_noise >= 0.95,
        "additive Acc deblur in [0.45, 0.55]": 0.45 <= deblur["acc"] <= 0.55,
        "deblur PSNR >= 25 dB": deblur["psnr"] >= 25.0,
    }
    ok = all(parts.values())
    verdict(
        "[5] attack pattern",
        ok,
        f"SS jpeg-75 {ss_jpeg:.4f}, SS noise {ss_noise:.4f}, additive deblur Acc {deblur['acc']:.4f}, "
        f"deblur PSNR {deblur['psnr']:.2f} dB; failing: {[k for k, v in parts.items() if not v] or 'none'}",
    )
    assert ok


def test_mixing_law(verdict):
    cfg = ExperimentConfig(attacks=["none", "jpeg-75"], ratios=[0.2, 0.4, 0.6, 0.8])
    report = run_mixing_experiment(cfg)
    worst, monotone = 0.0, True
    for codec in ("spread-spectrum", "additive"):
        for attack in cfg.attacks:
            rows = [report.row(codec, attack, p) for p in cfg.ratios]
            accs = [r["acc"] for r in rows]
            monotone &= all(b > a for a, b in zip(accs, accs[1:]))
            for r in rows:
                worst = max(worst, abs(r["acc"] - r["mixture_prediction"]) / r["acc_se"])
    ok = worst <= 3.0 and monotone
    verdict("[6] mixing law", ok, f"max |Acc - prediction| = {worst:.2f} SE (<= 3), monotone in p: {monotone}")
    assert ok


def test_determinism(verdict):
    cfg = ExperimentConfig(corpus_size=20, seed=17)
    first = to_csv(run_robustness_grid(cfg))
    again = to_csv(run_robustness_grid(cfg))
    parallel = to_csv(run_robustness_grid(dataclasses.replace(cfg, workers=2)))
    ok = first == again == parallel
    verdict("[7] determinism", ok, f"repeat identical: {first == again}, 2 workers identical: {first == parallel}")
    assert ok


def test_performance_envelope(verdict, full_grid):
    report, elapsed = full_grid
    ok = len(report.rows) == 14 and report.rows[0]["n_images"] == 100 and elapsed < 300
    verdict("[8] performance", ok, f"2 codecs x 7 cells x 100 images single-threaded in {elapsed:.1f} s (< 300 s)")
    assert ok
