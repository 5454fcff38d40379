import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wmbench.degrade import JpegParams, jpeg_cycle
from wmbench.image import ImageError, dct8x8_blocks, luma
from wmbench.watermark import (
    AdditiveCodec,
    CapacityError,
    SpreadSpectrumCodec,
    SpreadSpectrumKey,
    detect_additive,
    embed_additive,
    embed_ss,
    extract_ss,
    make_additive_pattern,
    mid_band,
    payload_from_seed,
    ss_statistics,
)

# additive codec -------------------------------------------------------------


def test_pattern_is_zero_mean_unit_rms():
    wm = make_additive_pattern((33, 40), seed=3)
    assert abs(wm.pattern.mean()) < 1e-12
    assert np.sqrt(np.mean(wm.pattern**2)) == pytest.approx(1.0, abs=1e-12)
    assert len(wm.payload) == 64


def test_informed_detection_is_exact_without_clamping():
    img = np.full((64, 64), 0.5)
    wm = make_additive_pattern(img.shape, seed=1, strength=0.05)
    res = detect_additive(embed_additive(img, wm), wm, original=img)
    assert res.correlation == pytest.approx(1.0, abs=1e-12)
    assert res.bit_accuracy == 1.0 and res.decision


def test_blind_correlation_on_flat_host():
    # residual = W - box3(W); for i.i.d. +-1 chips E[r W] = 8/9 and E[r^2] = 8/9,
    # so the normalized correlation is sqrt(8/9).
    img = np.full((128, 128), 0.5)
    wm = make_additive_pattern(img.shape, seed=2, strength=0.05)
    res = detect_additive(embed_additive(img, wm), wm)
    assert res.correlation == pytest.approx(math.sqrt(8 / 9), abs=0.01)
    assert res.bit_accuracy == 1.0


def test_additive_recovers_payload_on_photos(photos):
    codec = AdditiveCodec()
    for i, img in enumerate(photos):
        assert codec.detect(codec.embed(img, 100 + i), 100 + i).bit_accuracy >= 0.95


def test_additive_validation():
    with pytest.raises(ValueError):
        make_additive_pattern((8, 8), 0, strength=0.3)
    with pytest.raises(CapacityError):
        make_additive_pattern((4, 4), 0, payload=17)
    wm = make_additive_pattern((8, 8), 0)
    with pytest.raises(ImageError):
        embed_additive(np.zeros((8, 9)), wm)
    with pytest.raises(ImageError):
        detect_additive(np.zeros((8, 8)), wm, original=np.zeros((8, 8, 3)))


def test_zero_strength_is_identity(gen):
    img = gen.random((8, 8))
    np.testing.assert_array_equal(embed_additive(img, make_additive_pattern((8, 8), 0, strength=0.0)), img)


def test_additive_clamped_fraction_reported():
    img = np.ones((16, 16))
    info = {}
    embed_additive(img, make_additive_pattern(img.shape, 0, strength=0.1), info)
    assert 0.3 < info["clamped_fraction"] < 0.7


# spread-spectrum codec -----------------------------------------------------


def test_mid_band_has_22_coefficients():
    band = mid_band()
    assert len(band) == 22
    assert all(3 <= u + v <= 6 for u, v in band)


def test_ss_round_trip_on_photos(photos):
    for i, img in enumerate(photos):
        key = SpreadSpectrumKey.from_seed(i)
        out = embed_ss(img, key)
        res = extract_ss(out, key)
        assert res.bit_accuracy == 1.0 and res.decision
        assert np.all((out >= 0) & (out <= 1))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**64 - 1))
def test_ss_round_trip_any_key(seed):
    img = np.linspace(0.2, 0.8, 64 * 64).reshape(64, 64)
    key = SpreadSpectrumKey.from_seed(seed)
    assert extract_ss(embed_ss(img, key), key).bit_accuracy == 1.0


def test_ss_chip_sums_hit_target_without_clamping():
    img = np.full((64, 64), 0.5)
    key = SpreadSpectrumKey.from_seed(5, gamma=3.0)
    sums, _ = ss_statistics(embed_ss(img, key), key)
    expected = 3.0 * 16 * (2 * np.asarray(key.payload) - 1)
    np.testing.assert_allclose(sums, expected, atol=1e-9)


def test_ss_changes_only_band_coefficients():
    img = np.random.default_rng(0).uniform(0.3, 0.7, size=(64, 64))
    key = SpreadSpectrumKey.from_seed(1)
    d = dct8x8_blocks(luma(embed_ss(img, key)) - img).coeffs
    mask = np.zeros((8, 8), bool)
    for u, v in mid_band():
        mask[u, v] = True
    assert np.max(np.abs(d[..., ~mask])) < 1e-12


def test_ss_survives_jpeg75(photos):
    accs = []
    for i, img in enumerate(photos):
        key = SpreadSpectrumKey.from_seed(i)
        accs.append(extract_ss(jpeg_cycle(embed_ss(img, key), JpegParams(75)), key).bit_accuracy)
    assert np.mean(accs) >= 0.95


def test_ss_rgb_keeps_chroma(gen):
    rgb = gen.uniform(0.3, 0.7, size=(32, 32, 3))
    key = SpreadSpectrumKey.from_seed(2, n_bits=16)
    out = embed_ss(rgb, key)
    np.testing.assert_allclose(out - out.mean(axis=2, keepdims=True), rgb - rgb.mean(axis=2, keepdims=True), atol=1e-12)
    assert extract_ss(out, key).bit_accuracy == 1.0


def test_ss_gamma_zero_is_identity(gen):
    img = gen.random((32, 32))
    np.testing.assert_array_equal(embed_ss(img, SpreadSpectrumKey.from_seed(0, n_bits=8, gamma=0.0)), img)


def test_ss_capacity_error_names_numbers():
    with pytest.raises(CapacityError, match="1024 chips required, 352 available"):
        embed_ss(np.zeros((35, 33)), SpreadSpectrumKey.from_seed(0))


def test_wrong_key_is_near_chance(photos):
    # 256 bits keep the binomial spread (sd 1/32) well inside [0.4, 0.6]
    img = np.kron(photos[0], np.ones((2, 2)))
    key = SpreadSpectrumKey.from_seed(1, n_bits=256)
    marked = embed_ss(img, key)
    accs = [extract_ss(marked, SpreadSpectrumKey.from_seed(s, n_bits=256)).bit_accuracy for s in range(2, 102)]
    assert sum(0.4 <= a <= 0.6 for a in accs) >= 99


def test_key_record_round_trip(tmp_path):
    key = SpreadSpectrumKey.from_seed(2**63 + 5, n_bits=13, gamma=2.5)
    assert SpreadSpectrumKey.load(key.save(tmp_path / "k.txt")) == key
    text = key.dumps()
    bits = "".join(map(str, key.payload)) + "000"
    assert f"payload = {int(bits, 2):04x}" in text
    with pytest.raises(ValueError, match="unknown"):
        SpreadSpectrumKey.loads(text + "colour = red\n")
    with pytest.raises(ValueError, match="missing"):
        SpreadSpectrumKey.loads("seed = 1\n")


def test_payload_is_seeded():
    assert payload_from_seed(4) == payload_from_seed(4)
    assert payload_from_seed(4) != payload_from_seed(5)


def test_codec_front_ends_agree_with_functions(photos):
    img = photos[1]
    c = SpreadSpectrumCodec()
    np.testing.assert_array_equal(c.embed(img, 9), embed_ss(img, SpreadSpectrumKey.from_seed(9)))


def test_additive_psnr_matches_strength():
    # no clamping: mse = alpha^2 * mean(W^2) = alpha^2, so PSNR = -20 log10(alpha)
    from wmbench.image import psnr

    img = np.full((64, 64), 0.5)
    out = embed_additive(img, make_additive_pattern(img.shape, 0, strength=0.02))
    assert psnr(img, out) == pytest.approx(-20 * math.log10(0.02), abs=1e-9)
    assert psnr(img, out) == pytest.approx(33.98, abs=0.01)
