"""Static figure panels from simulator sweep/trajectory/sensitivity outputs.

Panels are deterministic: fixed figure geometry and fonts, colors keyed by
word id, and (for SVG) a fixed hash salt.  Each render can emit a sidecar
report with the pixel geometry of the axes and the word-id transitions it
drew, for downstream pixel-level checks.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import PlotInputError, load_json, load_samples, load_sweep, require_column

FIGSIZE = (6.4, 4.2)
DPI = 110

matplotlib.rcParams.update({
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "saltplots",
})

PANELS = ("sweep-outcome", "trajectory-fan", "sensitivity-error")


def word_color(word_id: int):
    return matplotlib.colormaps["tab10"](word_id % 10)


def _save(fig, output):
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    # SVG embeds a creation date unless suppressed; PNG carries none
    metadata = {"Date": None} if output.suffix == ".svg" else None
    fig.savefig(output, metadata=metadata)  # figure dpi fixed at creation
    plt.close(fig)


def _axes_report(fig, ax):
    fig.canvas.draw()
    bbox = ax.get_window_extent(fig.canvas.get_renderer())
    return {
        "axes_bbox_px": [bbox.x0, bbox.y0, bbox.x1, bbox.y1],
        "figure_px": [fig.bbox.width, fig.bbox.height],
        "xlim": list(ax.get_xlim()),
        "ylim": list(ax.get_ylim()),
    }


def render_sweep_outcome(job: dict) -> dict:
    """Outcome coordinate vs swept initial coordinate, colored by word id."""
    data = load_sweep(job["sweep_csv"])
    outcome = job.get("outcome", "q_1")
    y = require_column(data.columns, outcome, data.path)
    legend = {}
    if job.get("words_json"):
        words = load_json(job["words_json"]).get("words", [])
        legend = {w["id"]: w.get("modes", []) for w in words}
    admissible = data.columns.get("admissible")

    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    for wid in sorted(set(data.word_ids.tolist())):
        sel = data.word_ids == wid
        marker = "o"
        if admissible is not None and not np.all(admissible[sel] > 0):
            marker = "x"
        label = f"word {wid}"
        if wid in legend:
            label += " " + "-".join(str(m) for m in legend[wid])
        ax.plot(data.values[sel], y[sel], marker, ms=3.5, color=word_color(wid),
                label=label, linestyle="none")
    transitions = []
    for k in range(1, len(data.word_ids)):
        if data.word_ids[k] != data.word_ids[k - 1]:
            boundary = 0.5 * (data.values[k - 1] + data.values[k])
            ax.axvline(boundary, color="0.6", lw=0.8, ls="--")
            transitions.append({
                "row": int(k),
                "value_before": float(data.values[k - 1]),
                "value_after": float(data.values[k]),
                "from_id": int(data.word_ids[k - 1]),
                "to_id": int(data.word_ids[k]),
            })
    ax.set_xlabel("initial condition (swept coordinate)")
    ax.set_ylabel(outcome + " at horizon")
    # legend outside the axes so data pixels stay unobstructed
    fig.legend(loc="lower center", ncol=3, fontsize=8, frameon=False)
    fig.tight_layout(rect=(0.0, 0.09, 1.0, 1.0))
    report = _axes_report(fig, ax)
    report.update({
        "panel": "sweep-outcome",
        "outcome": outcome,
        "n_points": int(len(data.values)),
        "word_transitions": transitions,
        "word_colors": {
            str(wid): list(word_color(wid))
            for wid in sorted(set(data.word_ids.tolist()))
        },
    })
    _save(fig, job["output"])
    return report


def render_trajectory_fan(job: dict) -> dict:
    """Overlay of trajectories, one color per distinct word across the runs."""
    runs = job.get("runs")
    if not runs:
        raise PlotInputError("trajectory-fan job needs a non-empty 'runs' list")
    xname = job.get("x", "t")
    yname = job.get("y", "q_1")
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    word_ids: dict = {}
    for run in runs:
        samples = load_samples(run["samples_csv"])
        x = require_column(samples.columns, xname, samples.path)
        y = require_column(samples.columns, yname, samples.path)
        key = None
        if run.get("word_json"):
            word = load_json(run["word_json"])["word"]
            key = (tuple(word["modes"]),
                   tuple(e["kind"] for e in word.get("events", [])))
        else:
            key = tuple(samples.modes.tolist())
        if key not in word_ids:
            word_ids[key] = len(word_ids)
        wid = word_ids[key]
        ax.plot(x, y, color=word_color(wid), lw=1.2)
    ax.set_xlabel(xname)
    ax.set_ylabel(yname)
    fig.tight_layout()
    report = _axes_report(fig, ax)
    report.update({
        "panel": "trajectory-fan",
        "n_runs": len(runs),
        "n_words": len(word_ids),
    })
    _save(fig, job["output"])
    return report


def render_sensitivity_error(job: dict) -> dict:
    """Finite-difference agreement per sensitivity report, log scale."""
    reports = job.get("reports")
    if not reports:
        raise PlotInputError("sensitivity-error job needs a non-empty 'reports' list")
    errors, labels, passed = [], [], []
    for path in reports:
        rep = load_json(path)
        try:
            errors.append(max(rep["finite_difference"]["max_rel_error"], 1e-300))
            passed.append(bool(rep["word_independence"]["passed"]))
        except KeyError as exc:
            raise PlotInputError(f"{path}: missing report key {exc}") from exc
        labels.append(rep.get("model", Path(path).stem))
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    colors = ["tab:green" if ok else "tab:red" for ok in passed]
    ax.bar(range(len(errors)), errors, color=colors)
    ax.set_yscale("log")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("max relative error vs finite differences")
    fig.tight_layout()
    report = _axes_report(fig, ax)
    report.update({
        "panel": "sensitivity-error",
        "errors": errors,
        "word_independence_passed": passed,
    })
    _save(fig, job["output"])
    return report


def render(job: dict) -> dict:
    """Render one panel job; returns (and optionally writes) the sidecar report."""
    panel = job.get("panel")
    if panel not in PANELS:
        raise PlotInputError(f"unknown panel {panel!r}; expected one of {PANELS}")
    if "output" not in job:
        raise PlotInputError("job needs an 'output' image path")
    renderer = {
        "sweep-outcome": render_sweep_outcome,
        "trajectory-fan": render_trajectory_fan,
        "sensitivity-error": render_sensitivity_error,
    }[panel]
    report = renderer(job)
    report["output"] = str(job["output"])
    if job.get("report"):
        Path(job["report"]).write_text(json.dumps(report, indent=2) + "\n")
    return report
