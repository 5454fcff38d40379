# # Where the watermark energy goes
#
# Per radial band we compare the watermark's energy before and after an
# attack. The blur also changes the host, so the reference for the attacked
# watermark is the blurred clean image. The measured ratio then follows the
# predicted |H|^2.
# The CSV and SVG land in demos/out/.

# %%
from pathlib import Path

from wmbench.corpus import natural_crops
from wmbench.degrade import BlurParams, gaussian_blur
from wmbench.spectral import suppression_profile
from wmbench.watermark import embed_additive, make_additive_pattern

out = Path(__file__).with_name("out")
img = natural_crops(1, 128, seed=6)[0] * 0.8 + 0.1
marked = embed_additive(img, make_additive_pattern(img.shape, 3))
blur = BlurParams(2.0)
attacked = gaussian_blur(marked, blur, mode="periodic")
rep = suppression_profile(img, marked, attacked, blur=blur, attacked_clean=gaussian_blur(img, blur, mode="periodic"))
for row in rep.rows():
    print(f"band {row['band']}: measured {row['measured']:.3e}  predicted {row['predicted']:.3e}")
print([str(p) for p in rep.write(out, "blur_sigma2")])
