# # Restoration as regularized least squares
#
# Tikhonov smoothing has a closed form in the Fourier domain, TV denoising is
# solved iteratively, and Wiener deconvolution inverts a known Gaussian blur.

# %%
import numpy as np

from wmbench.corpus import natural_crops
from wmbench.degrade import BlurParams, NoiseParams, add_pixel_noise, gaussian_blur
from wmbench.image import psnr
from wmbench.restore import RestorationParams, restore_tikhonov, restore_tv, wiener_deconvolve

clean = natural_crops(1, 128, seed=4)[0]
noisy = add_pixel_noise(clean, NoiseParams(0.05, seed=1))
print("noisy:", round(psnr(clean, noisy), 2), "dB")
tik = restore_tikhonov(noisy, RestorationParams(beta=0.5, regularizer="tikhonov-gradient"))
print("Tikhonov:", round(psnr(clean, tik), 2), "dB")
tv = restore_tv(noisy, RestorationParams(beta=0.1))
print(f"TV: {psnr(clean, tv.image):.2f} dB after {tv.iterations} iterations (converged={tv.converged})")

# %%
blur = BlurParams(2.0)
blurred = gaussian_blur(clean, blur)
for k in (1e-2, 1e-3, 1e-4):
    out = wiener_deconvolve(blurred, blur, RestorationParams(wiener_nsr=k), boundary="mirror")
    print(f"Wiener K={k:g}: {psnr(clean, out):.2f} dB (blurred {psnr(clean, blurred):.2f} dB)")
