"""Command line front end.

Failures exit nonzero and print one JSON object on stderr with an
``error`` category (config, dataset, image, attack, capacity, io, internal).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .attack import AttackError, get_pipeline, run_attack
from .degrade import BlurParams, DegradationError
from .harness import (
    ConfigError,
    DatasetError,
    ExperimentConfig,
    ReportError,
    emit_report,
    load_config,
    run_mixing_experiment,
    run_robustness_grid,
)
from .image import ImageError, psnr
from .imageio import read_image, write_image
from .spectral import noise_band_profile, noise_energy_check, suppression_profile
from .svg import line_plot
from .watermark import (
    CapacityError,
    SpreadSpectrumKey,
    detect_additive,
    embed_additive,
    embed_ss,
    extract_ss,
    make_additive_pattern,
)

EXIT_CODES = {"internal": 1, "config": 3, "dataset": 4, "image": 5, "attack": 6, "capacity": 7, "io": 8}


class CliError(Exception):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


def _formats(args) -> list[str]:
    return args.format or ["csv", "md", "svg"]


def _load_cfg(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.format:
        changes["formats"] = args.format
    return dataclasses.replace(cfg, **changes) if changes else cfg


def _ss_key(args, default_bits: int = 64) -> SpreadSpectrumKey:
    if getattr(args, "key", None):
        return SpreadSpectrumKey.load(args.key)
    return SpreadSpectrumKey.from_seed(args.seed or 0, args.bits or default_bits, gamma=args.gamma)


def cmd_embed(args) -> dict:
    img = read_image(args.input)
    info: dict = {}
    if args.codec == "additive":
        wm = make_additive_pattern(img.shape[:2], args.seed or 0, args.bits or 64, args.strength)
        out = embed_additive(img, wm, info)
    else:
        key = _ss_key(args)
        out = embed_ss(img, key, info)
        if args.key_out:
            key.save(args.key_out)
    write_image(args.out, out)
    return {"output": str(args.out), "psnr": psnr(img, out), "clamped_fraction": info.get("clamped_fraction", 0.0)}


def cmd_attack(args) -> dict:
    img = read_image(args.input)
    seed = args.seed or 0
    pipe = None
    if args.config:
        cfg = load_config(args.config)
        for p in cfg.build_pipelines():
            if p.name == args.pipeline:
                pipe = p.with_seed(seed)
    if pipe is None:
        try:
            pipe = get_pipeline(args.pipeline, seed)
        except KeyError as exc:
            raise CliError("config", str(exc.args[0])) from None
    out = run_attack(img, pipe)
    write_image(args.out, out)
    return {"output": str(args.out), "pipeline": pipe.describe(), "psnr": psnr(img, out)}


def cmd_detect(args) -> dict:
    img = read_image(args.input)
    if args.codec == "additive":
        wm = make_additive_pattern(img.shape[:2], args.seed or 0, args.bits or 64, args.strength)
        original = read_image(args.original) if args.original else None
        res = detect_additive(img, wm, original=original, threshold=args.threshold or 0.1)
    else:
        res = extract_ss(img, _ss_key(args), threshold=args.threshold or 0.75)
    return {
        "bit_accuracy": res.bit_accuracy,
        "correlation": res.correlation,
        "decision": "present" if res.decision else "absent",
        "threshold": res.threshold,
        "bits": "".join(str(int(b)) for b in res.bits),
    }


def cmd_analyze_spectrum(args) -> dict:
    out = Path(args.out)
    formats = _formats(args)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError("io", str(exc)) from None
    edges = np.linspace(0.0, np.sqrt(2) / 2, args.bands + 1)
    if args.noise_sigma is not None:
        h, w = (int(x) for x in args.size.lower().split("x"))
        rep = noise_energy_check(args.noise_sigma, (h, w), args.trials, args.seed or 0)
        prof, bins = noise_band_profile(rep, edges)
        centers = (edges[:-1] + edges[1:]) / 2
        keep = bins > 0
        if "csv" in formats:
            lines = ["band,r_lo,r_hi,bins,normalized_energy"]
            lines += [f"{b},{edges[b]:.10g},{edges[b + 1]:.10g},{bins[b]},{prof[b]:.10g}" for b in np.flatnonzero(keep)]
            (out / "noise_spectrum.csv").write_text("\n".join(lines) + "\n")
        if "svg" in formats:
            svg = line_plot(
                {"measured": (list(centers[keep]), list(prof[keep])), "sigma^2 MN law": (list(centers[keep]), [1.0] * int(keep.sum()))},
                title="pixel-noise energy per radial band / (sigma^2 MN)",
                xlabel="radial frequency",
                ylabel="normalized energy",
            )
            (out / "noise_spectrum.svg").write_text(svg)
        return {"target": rep.target, "grand_mean": rep.grand_mean, "relative_error": rep.relative_error, "max_z": rep.max_z, "passed": rep.passed}
    if not (args.clean and args.marked and args.attacked):
        raise CliError("config", "give --clean/--marked/--attacked, or --noise-sigma")
    clean, marked, attacked = (read_image(p) for p in (args.clean, args.marked, args.attacked))
    attacked_clean = read_image(args.attacked_clean) if args.attacked_clean else None
    blur = BlurParams(args.blur_sigma) if args.blur_sigma else None
    rep = suppression_profile(clean, marked, attacked, edges, blur, attacked_clean)
    if "csv" in formats:
        (out / "spectrum.csv").write_text(rep.to_csv())
    if "svg" in formats:
        (out / "spectrum.svg").write_text(rep.to_svg())
    return {"bands": rep.rows(), "notes": rep.notes}


def _cmd_experiment(args, runner) -> dict:
    cfg = _load_cfg(args)
    report = runner(cfg)
    out = args.out or cfg.output
    paths = emit_report(report, out, cfg.formats)
    return {"files": [str(p) for p in paths], "config_hash": report.provenance["config_hash"], "rows": len(report.rows)}


def cmd_bench(args) -> dict:
    return _cmd_experiment(args, run_robustness_grid)


def cmd_mix(args) -> dict:
    return _cmd_experiment(args, run_mixing_experiment)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file (TOML)")
    common.add_argument("--seed", type=int, help="64-bit seed (key seed / experiment seed)")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--workers", type=int, help="worker processes for the harness")
    common.add_argument("--format", action="append", choices=["csv", "md", "svg"], help="report format (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    codec = argparse.ArgumentParser(add_help=False)
    codec.add_argument("--codec", choices=["spread-spectrum", "additive"], default="spread-spectrum")
    codec.add_argument("--bits", type=int, help="payload length (default 64)")
    codec.add_argument("--gamma", type=float, default=4.0, help="spread-spectrum chip strength")
    codec.add_argument("--strength", type=float, default=0.02, help="additive strength alpha")
    codec.add_argument("--key", help="spread-spectrum key record to use")

    p = argparse.ArgumentParser(prog="wmbench", description="Watermark robustness toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("embed", parents=[common, codec], help="embed a watermark into an image")
    e.add_argument("--input", required=True)
    e.add_argument("--key-out", help="write the spread-spectrum key record here")
    e.set_defaults(func=cmd_embed, need_out=True)

    a = sub.add_parser("attack", parents=[common], help="run an attack pipeline on an image")
    a.add_argument("--input", required=True)
    a.add_argument("--pipeline", required=True, help="builtin name or a [[pipeline]] of --config")
    a.set_defaults(func=cmd_attack, need_out=True)

    d = sub.add_parser("detect", parents=[common, codec], help="detect a watermark")
    d.add_argument("--input", required=True)
    d.add_argument("--original", help="original image for informed additive detection")
    d.add_argument("--threshold", type=float)
    d.set_defaults(func=cmd_detect, need_out=False)

    s = sub.add_parser("analyze-spectrum", parents=[common], help="band-wise spectral diagnostics")
    s.add_argument("--clean")
    s.add_argument("--marked")
    s.add_argument("--attacked")
    s.add_argument("--attacked-clean", help="the same attack applied to --clean (isolates the watermark)")
    s.add_argument("--blur-sigma", type=float, help="emit predicted |H|^2 for this blur")
    s.add_argument("--bands", type=int, default=8)
    s.add_argument("--noise-sigma", type=float, help="run the pixel-noise energy check instead")
    s.add_argument("--size", default="64x64", help="HxW for the noise check")
    s.add_argument("--trials", type=int, default=200)
    s.set_defaults(func=cmd_analyze_spectrum, need_out=True)

    b = sub.add_parser("bench", parents=[common], help="codec x attack robustness grid")
    b.set_defaults(func=cmd_bench, need_out=False)
    m = sub.add_parser("mix", parents=[common], help="protection-ratio (mixing) study")
    m.set_defaults(func=cmd_mix, need_out=False)
    return p


def _category(exc: Exception) -> str:
    for types, cat in (
        ((ConfigError,), "config"),
        ((DatasetError,), "dataset"),
        ((CapacityError,), "capacity"),
        ((AttackError, DegradationError), "attack"),
        ((ImageError,), "image"),
        ((ReportError, OSError), "io"),
    ):
        if isinstance(exc, types):
            return cat
    return "internal"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.need_out and not args.out:
        parser.error(f"{args.command}: --out is required")
    try:
        result = args.func(args)
    except CliError as exc:
        cat, msg = exc.category, str(exc)
    except Exception as exc:  # noqa: BLE001
        cat, msg = _category(exc), str(exc)
        if cat == "internal":
            logging.exception("unexpected failure")
    else:
        print(json.dumps(result, indent=2, default=float))
        return 0
    print(json.dumps({"error": cat, "message": msg}), file=sys.stderr)
    return EXIT_CODES[cat]


if __name__ == "__main__":
    sys.exit(main())
