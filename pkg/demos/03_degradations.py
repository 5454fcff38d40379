# # Degradations and their spectral laws
#
# Pixel noise adds sigma^2 MN of energy to every DFT bin on average. A
# Gaussian blur multiplies every bin by H(u, v) = exp(-2 pi^2 sigma^2 (u^2 + v^2)).
# Latent noise through an orthonormal PCA decoder adds sigma^2 d of pixel energy.

# %%
import numpy as np

from wmbench.corpus import natural_crops
from wmbench.degrade import (
    BlurParams,
    JpegParams,
    NoiseParams,
    add_latent_noise,
    fit_latent_codec,
    gaussian_blur,
    jpeg_cycle,
)
from wmbench.image import psnr
from wmbench.spectral import noise_energy_check, predicted_profile

for sigma in (0.02, 0.05, 0.1):
    rep = noise_energy_check(sigma, (64, 64), trials=200)
    print(f"sigma={sigma}: grand mean / target = {rep.grand_mean / rep.target:.4f}")

# %%
print("band-averaged |H|^2, sigma=2:", np.round(predicted_profile(BlurParams(2.0), (128, 128)), 4))

imgs = natural_crops(20, 64, seed=2)
img = imgs[0]
for q in (10, 50, 90):
    print(f"JPEG q={q}: PSNR {psnr(img, jpeg_cycle(img, JpegParams(q))):.2f} dB")
print("mirror blur sigma=1:", round(psnr(img, gaussian_blur(img, BlurParams(1.0))), 2), "dB")

# %%
codec = fit_latent_codec(imgs, 16, patch=8)
print("explained variance:", round(codec.meta["explained_variance_ratio"], 4))
print("latent noise sigma=0.1:", round(psnr(img, add_latent_noise(img, codec, NoiseParams(0.1, seed=3))), 2), "dB")
