# # Robustness grid and protection-ratio study
#
# The harness runs every codec against every attack and, for the mixing
# study, watermarks only a share p of the images. Aggregate accuracy should
# then follow p * Acc_marked + (1 - p) * 0.5. The same thing is available as
# `wmbench bench` and `wmbench mix`.

# %%
from pathlib import Path

from wmbench.harness import ExperimentConfig, emit_report, run_mixing_experiment, run_robustness_grid

out = Path(__file__).with_name("out")
cfg = ExperimentConfig(corpus_size=20, attacks=["none", "jpeg-75", "denoise-attack", "deblur-attack"])

grid = run_robustness_grid(cfg)
for r in grid.rows:
    print(f"{r['codec']:16s} {r['attack']:15s} Acc {r['acc']:.3f}  PSNR {r['psnr']:.2f}")
emit_report(grid, out / "grid")

# %%
mix = run_mixing_experiment(cfg)
for r in mix.rows:
    if r["attack"] == "none":
        print(f"{r['codec']:16s} p={r['ratio']:.1f}  Acc {r['acc']:.3f}  predicted {r['mixture_prediction']:.3f}")
emit_report(mix, out / "mix")
