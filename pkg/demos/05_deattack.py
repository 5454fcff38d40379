# # Degrade-then-restore attacks
#
# Each builtin pipeline first destroys detail (noise, JPEG, a heavy blur or
# latent noise) and then restores a plausible image. The table shows how
# much of each payload survives and how close the result stays to the clean
# image.

# %%
from wmbench.attack import BUILTIN_NAMES, get_pipeline, run_attack
from wmbench.corpus import natural_crops
from wmbench.image import psnr
from wmbench.watermark import AdditiveCodec, SpreadSpectrumCodec

img = natural_crops(1, 128, seed=5)[0]
codecs = [SpreadSpectrumCodec(), AdditiveCodec()]
marked = {c.name: c.embed(img, 7) for c in codecs}

print(f"{'attack':16s}" + "".join(f"{c.name:>18s}" for c in codecs) + "   PSNR to clean")
for name in sorted(BUILTIN_NAMES):
    pipe = get_pipeline(name, seed=1)
    row = []
    for c in codecs:
        attacked = run_attack(marked[c.name], pipe)
        row.append(c.detect(attacked, 7).bit_accuracy)
    print(f"{name:16s}" + "".join(f"{a:18.3f}" for a in row) + f"   {psnr(img, attacked):.2f} dB")
print()
print(get_pipeline("deblur-attack").describe())
