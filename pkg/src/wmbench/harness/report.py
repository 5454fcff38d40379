"""CSV / markdown / SVG emission for experiment reports.

CSV, markdown and SVG bytes depend only on the report rows and
provenance. Wall-clock timings go to a separate ``timing.json``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from ..svg import line_plot
from .runner import ExperimentReport

COLUMNS = (
    "codec",
    "attack",
    "ratio",
    "n_images",
    "n_marked",
    "acc",
    "acc_marked",
    "acc_unmarked",
    "acc_se",
    "mixture_prediction",
    "detect_rate",
    "psnr",
    "ssim",
    "clamped_fraction",
)


class ReportError(OSError):
    """Report output could not be written."""


def _cell(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.6f}"
    return str(v)


def to_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in report.rows:
        w.writerow([_cell(row[c]) for c in COLUMNS])
    return buf.getvalue()


def to_markdown(report: ExperimentReport) -> str:
    prov = report.provenance
    cols = ("codec", "attack", "ratio", "n_images", "n_marked", "acc", "acc_se", "detect_rate", "psnr", "ssim")
    lines = [
        f"# {report.kind} report",
        "",
        f"- config hash: `{prov.get('config_hash', '')}`",
        f"- seed: {prov.get('seed', '')}",
        f"- toolkit version: {prov.get('toolkit_version', '')}",
        f"- aggregation: {prov.get('aggregation', '')}",
        f"- {prov.get('note', '')}",
        "",
        "| " + " | ".join(cols) + " |",
        "|" + "|".join("---" for _ in cols) + "|",
    ]
    for row in report.rows:
        lines.append("| " + " | ".join(_cell(row[c]) for c in cols) + " |")
    attacks = prov.get("attacks", {})
    if attacks:
        lines += ["", "## attacks", ""]
        lines += [f"- `{name}`: {desc}" for name, desc in attacks.items()]
    return "\n".join(lines) + "\n"


def to_svgs(report: ExperimentReport) -> dict[str, str]:
    """One accuracy curve file per codec."""
    out = {}
    codecs = list(dict.fromkeys(r["codec"] for r in report.rows))
    for codec in codecs:
        rows = [r for r in report.rows if r["codec"] == codec]
        if report.kind == "mix":
            series = {}
            for r in rows:
                xs, ys = series.setdefault(r["attack"], ([], []))
                xs.append(r["ratio"])
                ys.append(r["acc"])
            series["mixture law (no attack)"] = (
                sorted({r["ratio"] for r in rows}),
                [x + (1 - x) * 0.5 for x in sorted({r["ratio"] for r in rows})],
            )
            svg = line_plot(series, title=f"{codec}: Acc vs protection ratio", xlabel="protection ratio", ylabel="Acc", ylim=(0.4, 1.0))
        else:
            attacks = [r["attack"] for r in rows]
            xs = list(range(len(rows)))
            svg = line_plot(
                {"Acc": (xs, [r["acc"] for r in rows])},
                title=f"{codec}: Acc per attack",
                xlabel="attack",
                ylabel="Acc",
                xticklabels=attacks,
                ylim=(0.4, 1.0),
            )
        out[f"{report.kind}_{codec}.svg"] = svg
    return out


def emit_report(report: ExperimentReport, out_dir, formats=("csv", "md", "svg")) -> list[Path]:
    """Write the requested formats plus ``provenance.json`` and ``timing.json``."""
    if not report.rows:
        raise ReportError("report has no rows")
    out_dir = Path(out_dir)
    files: dict[str, str] = {}
    if "csv" in formats:
        files[f"{report.kind}.csv"] = to_csv(report)
    if "md" in formats:
        files[f"{report.kind}.md"] = to_markdown(report)
    if "svg" in formats:
        files.update(to_svgs(report))
    files["provenance.json"] = json.dumps(report.provenance, indent=2, sort_keys=True) + "\n"
    files["timing.json"] = json.dumps(report.timings, indent=2, sort_keys=True) + "\n"
    paths = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            p = out_dir / name
            with open(p, "w", newline="") as fh:
                fh.write(text)
            paths.append(p)
    except OSError as exc:
        raise ReportError(f"cannot write report to {out_dir}: {exc}") from exc
    return paths
