# # Image core: Fourier, block DCT and quality metrics
#
# Images are float64 arrays in [0, 1], shaped (H, W) or (H, W, 3).
# The DFT is unnormalized, so Parseval reads sum|X|^2 = MN sum|x|^2.

# %%
import numpy as np

from wmbench.corpus import natural_crops
from wmbench.image import dct8x8_blocks, dft2, idct8x8_blocks, psnr, quality

img = natural_crops(1, 128, seed=0)[0]
X = dft2(img)
print("Parseval:", np.sum(np.abs(X) ** 2), "vs", img.size * np.sum(img**2))

# %% [markdown]
# The 8x8 block DCT is orthonormal. A constant block has DC = 8c and nothing else.

# %%
blocks = dct8x8_blocks(np.full((8, 8), 0.25))
print("DC of a constant 0.25 block:", blocks.coeffs[0, 0, 0, 0])
odd = img[:61, :45]
print("round trip error on a 61x45 crop:", np.max(np.abs(idct8x8_blocks(dct8x8_blocks(odd)) - odd)))

# %% [markdown]
# PSNR uses peak 1. Two pixels differing by sqrt(0.02) give MSE 0.01, hence 20 dB.

# %%
print("two-pixel PSNR:", psnr(np.zeros((1, 2)), np.array([[0.0, 0.02**0.5]])))
noisy = np.clip(img + np.random.default_rng(0).normal(0, 0.05, img.shape), 0, 1)
print(quality(img, noisy))
