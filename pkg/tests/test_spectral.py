import numpy as np
import pytest

from wmbench.degrade import BlurParams, gaussian_blur, suppression_ratio
from wmbench.image import dft2
from wmbench.spectral import (
    band_edges,
    band_index,
    noise_band_profile,
    noise_energy_check,
    predicted_profile,
    suppression_profile,
    watermark_spectrum,
)
from wmbench.watermark import embed_additive, make_additive_pattern


def test_band_index_covers_every_bin():
    edges = band_edges(8)
    idx = band_index((17, 23), edges)
    assert idx[0, 0] == 0
    assert idx.min() == 0 and idx.max() <= 7
    r = np.hypot(np.fft.fftfreq(17)[:, None], np.fft.fftfreq(23)[None, :])
    for b in range(8):
        sel = idx == b
        assert np.all(r[sel] >= edges[b] - 1e-15)


def test_noise_check_small_run():
    rep = noise_energy_check(0.1, (16, 12), trials=300, seed=3)
    assert rep.target == pytest.approx(0.01 * 192)
    assert rep.relative_error < 0.03 and rep.passed
    prof, bins = noise_band_profile(rep)
    assert bins.sum() == 192
    assert np.nanmax(np.abs(prof[bins > 20] - 1)) < 0.15


def test_noise_check_zero_sigma_and_validation():
    assert noise_energy_check(0.0, (4, 4), trials=3).passed
    with pytest.raises(ValueError):
        noise_energy_check(0.1, (4, 4), trials=0)


def test_identity_attack_keeps_all_energy(photos):
    img = photos[0]
    marked = embed_additive(img, make_additive_pattern(img.shape, 1, strength=0.01))
    rep = suppression_profile(img, marked, marked)
    np.testing.assert_allclose(rep.measured[rep.populated], 1.0)


def test_periodic_blur_profile_matches_weighted_prediction():
    img = np.full((64, 64), 0.5)
    marked = embed_additive(img, make_additive_pattern(img.shape, 4, strength=0.02))
    blur = BlurParams(1.5)
    attacked = gaussian_blur(marked, blur, mode="periodic", clip=False)
    rep = suppression_profile(img, marked, attacked, blur=blur)
    np.testing.assert_allclose(rep.measured, rep.predicted_weighted, rtol=1e-6, atol=1e-20)
    # per bin the surviving energy is exactly |H|^2
    ref = np.abs(watermark_spectrum(img, marked)) ** 2
    att = np.abs(dft2(attacked - img)) ** 2
    h2 = suppression_ratio(blur, img.shape)
    mask = (ref > 1e-9 * ref.max()) & (h2 > 1e-4)
    np.testing.assert_allclose(att[mask] / ref[mask], h2[mask], rtol=1e-8)


def test_predicted_profile_is_decreasing():
    p = predicted_profile(BlurParams(2.0), (64, 64))
    assert p[0] > 0.5 and np.all(np.diff(p) < 0)


def test_report_outputs(tmp_path, photos):
    img = photos[1]
    marked = embed_additive(img, make_additive_pattern(img.shape, 1))
    rep = suppression_profile(img, marked, gaussian_blur(marked, BlurParams(1.0)), blur=BlurParams(1.0))
    csv_path, svg_path = rep.write(tmp_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("band,r_lo") and len(lines) == 1 + int(rep.populated.sum())
    assert svg_path.read_text().startswith("<svg")
    assert rep.to_csv() == csv_path.read_text()


def test_empty_bands_are_noted():
    img = np.full((4, 4), 0.5)
    rep = suppression_profile(img, img + 0.01, img, edges=np.linspace(0, 0.71, 40))
    assert rep.notes and not rep.populated.all()


def test_flat_host_blur_profile_tracks_band_average():
    # the plain band average ignores per-bin |W|^2 scatter, so this needs
    # enough bins per band (64x64 scatters by up to ~25%)
    img = np.full((256, 256), 0.5)
    marked = embed_additive(img, make_additive_pattern(img.shape, 8, strength=0.02))
    blur = BlurParams(2.0)
    rep = suppression_profile(img, marked, gaussian_blur(marked, blur, mode="periodic"), blur=blur)
    ok = rep.populated & (rep.predicted > 1e-12)
    np.testing.assert_allclose(rep.measured[ok], rep.predicted[ok], rtol=0.10)


def test_attacked_clean_reference_isolates_watermark(photos):
    img = photos[3] * 0.8 + 0.1
    marked = embed_additive(img, make_additive_pattern(img.shape, 2))
    blur = BlurParams(1.0)
    att, att_clean = (gaussian_blur(x, blur, mode="periodic") for x in (marked, img))
    rep = suppression_profile(img, marked, att, blur=blur, attacked_clean=att_clean)
    np.testing.assert_allclose(rep.measured, rep.predicted_weighted, rtol=1e-6)
    naive = suppression_profile(img, marked, att, blur=blur)
    assert naive.measured[-1] > 10 * rep.measured[-1]


def test_reference_energy_obeys_parseval(photos):
    img = photos[0]
    marked = embed_additive(img, make_additive_pattern(img.shape, 5))
    rep = suppression_profile(img, marked, marked)
    total = img.size * np.sum((marked - img) ** 2)
    assert rep.total_reference_energy() == pytest.approx(total, rel=1e-6)
