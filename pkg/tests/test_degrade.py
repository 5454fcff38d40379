import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wmbench.degrade import (
    STD_LUMA_TABLE,
    BlurParams,
    DegradationError,
    JpegParams,
    LatentCodec,
    NoiseParams,
    add_latent_noise,
    add_pixel_noise,
    fit_latent_codec,
    gaussian_blur,
    jpeg_cycle,
    pixel_noise,
    quant_table,
    transfer_function,
)
from wmbench.image import dft2


def dct_matrix(n=8):
    k, i = np.arange(n)[:, None], np.arange(n)[None, :]
    c = np.sqrt(2 / n) * np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    c[0] /= np.sqrt(2)
    return c


# pixel noise ----------------------------------------------------------------


def test_noise_is_seeded_and_clamped(gen):
    img = gen.random((16, 16))
    a = add_pixel_noise(img, NoiseParams(0.3, seed=9))
    b = add_pixel_noise(img, NoiseParams(0.3, seed=9))
    c = add_pixel_noise(img, NoiseParams(0.3, seed=10))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.min() >= 0 and a.max() <= 1


def test_zero_noise_is_identity(gen):
    img = gen.random((5, 7, 3))
    np.testing.assert_array_equal(add_pixel_noise(img, NoiseParams(0.0)), img)


def test_noise_moments():
    n = pixel_noise((256, 256), NoiseParams(0.05, seed=1))
    assert abs(n.mean()) < 4 * 0.05 / 256
    assert n.std() == pytest.approx(0.05, rel=0.02)


@pytest.mark.parametrize("sigma", [-0.1, math.nan, math.inf])
def test_noise_rejects_bad_sigma(sigma):
    with pytest.raises(DegradationError):
        NoiseParams(sigma)


# blur -----------------------------------------------------------------------


def test_blur_kernel_defaults_and_validation():
    assert BlurParams(1.0).kernel_size == 7
    assert BlurParams(2.5).kernel_size == 19
    k = BlurParams(2.0).kernel1d()
    assert k.sum() == pytest.approx(1.0) and np.allclose(k, k[::-1])
    for bad in (4, 0, -3, 2.5):
        with pytest.raises(DegradationError):
            BlurParams(1.0, bad)


def test_mirror_blur_matches_direct_convolution(gen):
    img = gen.random((12, 15))
    p = BlurParams(1.3, 7)
    k2 = p.kernel2d()
    pad = np.pad(img, 3, mode="symmetric")
    ref = np.zeros_like(img)
    for i in range(12):
        for j in range(15):
            ref[i, j] = np.sum(pad[i : i + 7, j : j + 7] * k2[::-1, ::-1])
    np.testing.assert_allclose(gaussian_blur(img, p, clip=False), ref, atol=1e-12)


def test_periodic_blur_multiplies_spectrum_by_h(gen):
    img = gen.random((20, 24))
    p = BlurParams(1.5)
    out = gaussian_blur(img, p, mode="periodic", clip=False)
    np.testing.assert_allclose(dft2(out), dft2(img) * transfer_function(p, img.shape), atol=1e-9)


def test_transfer_function_values():
    h = transfer_function(BlurParams(2.0), (8, 16))
    assert h[0, 0] == 1.0
    # u = 1/4 on the column axis
    assert h[0, 4] == pytest.approx(math.exp(-2 * math.pi**2 * 4 * (1 / 16)))
    assert np.all(h > 0)


def test_blur_preserves_constants_and_rgb():
    img = np.full((10, 10, 3), 0.4)
    for mode in ("mirror", "periodic"):
        np.testing.assert_allclose(gaussian_blur(img, BlurParams(2.0), mode=mode), img, atol=1e-12)


def test_blur_rejects_oversized_kernel_and_mode():
    with pytest.raises(DegradationError):
        gaussian_blur(np.zeros((4, 4)), BlurParams(15.0, 71))
    with pytest.raises(DegradationError):
        gaussian_blur(np.zeros((4, 4)), BlurParams(1.0), mode="wrap")


# jpeg -----------------------------------------------------------------------


def test_quant_table_scaling():
    np.testing.assert_array_equal(quant_table(50), STD_LUMA_TABLE)
    np.testing.assert_array_equal(quant_table(100), np.ones((8, 8)))
    # quality 10 -> scale 500
    np.testing.assert_array_equal(quant_table(10), np.clip(np.floor((STD_LUMA_TABLE * 500 + 50) / 100), 1, 255))
    assert quant_table(75)[0, 0] == 8  # floor((16 * 50 + 50) / 100)
    for q in (0, 101):
        with pytest.raises(DegradationError):
            JpegParams(q)


def test_jpeg_cycle_matches_manual_quantization(gen):
    img = gen.uniform(0.2, 0.8, size=(16, 8))
    c, q = dct_matrix(), quant_table(40)
    ref = np.zeros_like(img)
    for by in range(2):
        blk = img[8 * by : 8 * by + 8] * 255 - 128
        coef = np.round(c @ blk @ c.T / q) * q
        ref[8 * by : 8 * by + 8] = (c.T @ coef @ c + 128) / 255
    np.testing.assert_allclose(jpeg_cycle(img, JpegParams(40)), np.clip(ref, 0, 1), atol=1e-12)


def test_jpeg_quality_orders_error(photos):
    img = photos[0]
    errs = [np.mean((jpeg_cycle(img, JpegParams(q)) - img) ** 2) for q in (10, 50, 95)]
    assert errs[0] > errs[1] > errs[2]


def test_jpeg_keeps_chroma(gen):
    rgb = gen.uniform(0.3, 0.7, size=(8, 8, 3))
    out = jpeg_cycle(rgb, JpegParams(50))
    np.testing.assert_allclose(out - out.mean(axis=2, keepdims=True), rgb - rgb.mean(axis=2, keepdims=True), atol=1e-12)


# latent codec ---------------------------------------------------------------


def test_pca_basis_matches_covariance_eigenvectors(scenes):
    codec = fit_latent_codec(scenes, 4, patch=8)
    x = np.concatenate([s.reshape(8, 8, 8, 8).transpose(0, 2, 1, 3).reshape(-1, 64) for s in scenes])
    w, v = np.linalg.eigh(np.cov(x, rowvar=False))
    top = v[:, ::-1][:, :4]
    for k in range(4):
        col = top[:, k] * np.sign(top[np.argmax(np.abs(top[:, k])), k])
        np.testing.assert_allclose(codec.basis[:, k], col, atol=1e-8)
    np.testing.assert_allclose(codec.basis.T @ codec.basis, np.eye(4), atol=1e-12)


def test_full_rank_codec_is_lossless(photos):
    codec = fit_latent_codec(photos, 64, patch=8)
    img = photos[3]
    np.testing.assert_allclose(codec.decode(codec.encode(img), img.shape), img, atol=1e-10)


def test_codec_save_load_round_trip(tmp_path, scenes):
    codec = fit_latent_codec(scenes, 5)
    p = codec.save(tmp_path / "c.wmlc")
    assert (tmp_path / "c.wmlc.json").exists()
    back = LatentCodec.load(p)
    np.testing.assert_array_equal(back.basis, codec.basis)
    np.testing.assert_array_equal(back.mean, codec.mean)
    assert back.shape == codec.shape and back.meta["d"] == 5
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(DegradationError):
        LatentCodec.load(p)


def test_codec_fit_errors(scenes):
    with pytest.raises(DegradationError):
        fit_latent_codec(scenes, 0)
    with pytest.raises(DegradationError):
        fit_latent_codec(scenes[:3], 5)
    with pytest.raises(DegradationError):
        fit_latent_codec([], 2)
    codec = fit_latent_codec(scenes, 3, patch=8)
    with pytest.raises(DegradationError):
        codec.encode(np.zeros((12, 12)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**63 - 1))
def test_latent_noise_deterministic_and_in_range(seed):
    img = np.linspace(0, 1, 256).reshape(16, 16)
    codec = fit_latent_codec([img, img.T, 1 - img], 2, patch=8)
    a = add_latent_noise(img, codec, NoiseParams(0.2, seed))
    np.testing.assert_array_equal(a, add_latent_noise(img, codec, NoiseParams(0.2, seed)))
    assert a.min() >= 0 and a.max() <= 1


def test_latent_noise_zero_sigma_is_projection(photos):
    codec = fit_latent_codec(photos, 64, patch=8)
    out = add_latent_noise(photos[0], codec, NoiseParams(0.0), clip=False)
    np.testing.assert_allclose(out, photos[0], atol=1e-10)


def test_latent_noise_energy_is_sigma2_d_with_many_draws(scenes):
    # decoder differences are V eps with orthonormal V, so the energy is chi-square(d) sigma^2
    codec = fit_latent_codec(scenes, 6, patch=8)
    z = codec.encode(scenes[0])[:1]
    base = codec.decode_vectors(z)
    eps = np.random.default_rng(0).normal(0, 0.1, size=(100_000, 6))
    diff = codec.decode_vectors(z + eps) - base
    assert np.mean(np.sum(diff**2, axis=1)) == pytest.approx(0.01 * 6, rel=0.005)
