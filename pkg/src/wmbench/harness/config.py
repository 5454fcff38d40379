"""Experiment configuration files.

One TOML file per experiment::

    [experiment]
    seed = 7
    corpus = "natural"          # or dataset = "images/" / datasets = [...]
    corpus_size = 100
    image_size = 128
    attacks = ["none", "jpeg-75", "deblur-attack"]
    ratios = [0.2, 0.4, 0.6, 0.8]
    formats = ["csv", "md", "svg"]

    [[codec]]
    kind = "spread-spectrum"
    gamma = 4.0

    [[pipeline]]
    name = "noisy-tv"
    stages = [{op = "noise", sigma = 0.03}, {op = "tv", beta = 0.1}]

Unknown keys anywhere are errors.
"""
from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..attack import BUILTIN_NAMES, AttackPipeline, Stage, get_pipeline
from ..watermark import AdditiveCodec, SpreadSpectrumCodec


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


DEFAULT_RATIOS = (0.2, 0.4, 0.6, 0.8)
DEFAULT_GRID = ("none", "gaussian-noise", "gaussian-blur", "jpeg-75", "denoise-attack", "jpeg-ar-attack", "deblur-attack")
FORMATS = ("csv", "md", "svg")

EXPERIMENT_KEYS = {
    "name", "seed", "dataset", "datasets", "corpus", "corpus_size", "image_size", "attacks",
    "ratios", "output", "formats", "workers", "aggregation", "metrics",
}
CODEC_KEYS = {
    "additive": {"kind", "strength", "bits", "threshold"},
    "spread-spectrum": {"kind", "gamma", "bits", "chips_per_bit", "threshold", "host_rejection"},
}
PIPELINE_KEYS = {"name", "stages"}


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    seed: int = 0
    datasets: list[str] = field(default_factory=list)
    corpus: str | None = "natural"
    corpus_size: int = 100
    image_size: int | None = 128
    codecs: list[dict] = field(default_factory=lambda: [{"kind": "spread-spectrum"}, {"kind": "additive"}])
    attacks: list[str] = field(default_factory=lambda: list(DEFAULT_GRID))
    pipelines: list[dict] = field(default_factory=list)
    ratios: list[float] = field(default_factory=lambda: list(DEFAULT_RATIOS))
    output: str = "out"
    formats: list[str] = field(default_factory=lambda: list(FORMATS))
    workers: int = 1
    aggregation: str = "micro"
    metrics: list[str] = field(default_factory=lambda: ["acc", "psnr", "ssim"])

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.datasets and not self.corpus:
            raise ConfigError("no dataset: set `dataset`, `datasets` or `corpus`")
        if self.corpus not in (None, "natural", "synthetic"):
            raise ConfigError(f"unknown corpus {self.corpus!r} (natural | synthetic)")
        if self.corpus_size < 1:
            raise ConfigError("corpus_size must be >= 1")
        if self.image_size is not None and self.image_size < 8:
            raise ConfigError("image_size must be >= 8")
        for r in self.ratios:
            if not (isinstance(r, (int, float)) and 0 < r <= 1):
                raise ConfigError(f"protection ratio {r!r} outside (0, 1]")
        for f in self.formats:
            if f not in FORMATS:
                raise ConfigError(f"unknown format {f!r}; choose from {FORMATS}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.aggregation not in ("micro", "macro"):
            raise ConfigError("aggregation must be 'micro' or 'macro'")
        for m in self.metrics:
            if m not in ("acc", "psnr", "ssim"):
                raise ConfigError(f"unknown metric {m!r}")
        if not self.codecs:
            raise ConfigError("at least one [[codec]] is required")
        self.build_codecs()
        self.build_pipelines()

    # builders -----------------------------------------------------------

    def build_codecs(self):
        out = []
        for entry in self.codecs:
            kind = entry.get("kind")
            if kind not in CODEC_KEYS:
                raise ConfigError(f"unknown codec kind {kind!r}; choose from {sorted(CODEC_KEYS)}")
            extra = set(entry) - CODEC_KEYS[kind]
            if extra:
                raise ConfigError(f"codec {kind!r}: unknown keys {sorted(extra)}")
            kw = {k: v for k, v in entry.items() if k != "kind"}
            if "bits" in kw:
                kw["n_bits"] = kw.pop("bits")
            try:
                out.append(AdditiveCodec(**kw) if kind == "additive" else SpreadSpectrumCodec(**kw))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"codec {kind!r}: {exc}") from None
        names = [c.name for c in out]
        if len(set(names)) != len(names):
            raise ConfigError("codecs must be distinct kinds")
        return out

    def build_pipelines(self) -> list[AttackPipeline]:
        custom = {}
        for entry in self.pipelines:
            extra = set(entry) - PIPELINE_KEYS
            if extra:
                raise ConfigError(f"pipeline: unknown keys {sorted(extra)}")
            name = entry.get("name")
            if not name or name in BUILTIN_NAMES:
                raise ConfigError(f"pipeline name {name!r} missing or reserved")
            stages = []
            for i, st in enumerate(entry.get("stages", [])):
                st = dict(st)
                op = st.pop("op", None)
                try:
                    stages.append(Stage(op, tuple(sorted(st.items()))))
                except ValueError as exc:
                    raise ConfigError(f"pipeline {name!r} stage {i}: {exc}") from None
            try:
                custom[name] = AttackPipeline(name, tuple(stages), self.seed)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        out = []
        for name in self.attacks:
            if name in custom:
                out.append(custom[name])
            elif name in BUILTIN_NAMES:
                out.append(get_pipeline(name, self.seed))
            else:
                raise ConfigError(f"attack {name!r} is neither builtin nor defined in [[pipeline]]")
        if len(set(self.attacks)) != len(self.attacks):
            raise ConfigError("attack list has duplicates")
        return out

    # provenance ---------------------------------------------------------

    def canonical(self) -> dict:
        d = asdict(self)
        d.pop("output")
        d.pop("workers")
        d.pop("formats")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _check_keys(table: dict, allowed: set, where: str) -> None:
    extra = set(table) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from None
    _check_keys(raw, {"experiment", "codec", "pipeline"}, "config")
    exp = dict(raw.get("experiment", {}))
    _check_keys(exp, EXPERIMENT_KEYS, "[experiment]")
    kw: dict = {}
    if "dataset" in exp and "datasets" in exp:
        raise ConfigError("[experiment]: give `dataset` or `datasets`, not both")
    datasets = exp.pop("datasets", None) or ([exp.pop("dataset")] if "dataset" in exp else [])
    if base_dir is not None:
        datasets = [str((base_dir / d).resolve()) if not Path(d).is_absolute() else d for d in datasets]
    if datasets:
        if "corpus" in exp:
            raise ConfigError("[experiment]: give a dataset or a corpus, not both")
        kw["datasets"] = datasets
        kw["corpus"] = None
    kw.update(exp)
    if "codec" in raw:
        kw["codecs"] = [dict(c) for c in raw["codec"]]
    if "pipeline" in raw:
        kw["pipelines"] = [dict(p) for p in raw["pipeline"]]
    try:
        return ExperimentConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, base_dir=path.parent)


def marked_count(ratio: float, n: int) -> int:
    """``ceil(ratio * n)`` without float overshoot (0.6 * 100 -> 60)."""
    return min(n, math.ceil(round(ratio * n, 9)))

