"""Figure rendering and aggregate table generation.

Every command that writes delimited output also renders the matching
matplotlib figures next to it: THW traces for campaigns, box plots for
the threshold sweep, and a trace grid for the impact analysis. The
aggregate generator mirrors the resiliency-table layout (one column
block per attack, one row per THW bucket).
"""

from __future__ import annotations

import json
from dataclasses import asdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .evaluation import (DetectionMetrics, RunLog, SweepCell, ThwBuckets,
                         THW_ABOVE, THW_BELOW, sweep_quantiles)

IDEAL_BAND_COLOR = "#2a9d8f"


def thw_trace_figure(logs: dict[str, RunLog], path, title: str | None = None) -> None:
    """THW over time for one or more runs of the same campaign."""
    fig, ax = plt.subplots(figsize=(9, 4))
    for label, log in logs.items():
        ax.plot(log.t, log.thw, label=label, linewidth=0.9)
    ax.axhline(THW_BELOW, color=IDEAL_BAND_COLOR, linestyle="--", linewidth=0.8)
    ax.axhline(THW_ABOVE, color=IDEAL_BAND_COLOR, linestyle="--", linewidth=0.8)
    any_log = next(iter(logs.values()))
    window = any_log.attack_window()
    if window:
        ax.axvspan(window[0], window[1], color="0.92", zorder=0)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("time headway [s]")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def detection_trace_figure(log: RunLog, path, title: str | None = None) -> None:
    """Controller response vs prediction, with flagged steps marked."""
    fig, axes = plt.subplots(2, 1, figsize=(9, 5), sharex=True)
    axes[0].plot(log.t, log.a_e_cacc, label="controller", linewidth=0.8)
    axes[0].plot(log.t, log.a_e_pred, label="predicted", linewidth=0.8)
    axes[0].set_ylabel("accel [m/s$^2$]")
    axes[0].legend(loc="best", fontsize=8)
    dev = np.abs(log.a_e_cacc - log.a_e_pred)
    axes[1].plot(log.t, dev, linewidth=0.8, color="0.3")
    flagged = log.anomaly_flag
    axes[1].plot(log.t[flagged], dev[flagged], ".", markersize=2, color="#e76f51",
                 label="flagged")
    axes[1].set_ylabel("|deviation|")
    axes[1].set_xlabel("time [s]")
    axes[1].legend(loc="best", fontsize=8)
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def sweep_boxplot_figure(cells: list[SweepCell], metric: str, path) -> None:
    """Distribution of one detection metric across environments per threshold."""
    frame = pd.DataFrame([c.__dict__ for c in cells])
    thresholds = sorted(frame["threshold"].unique())
    data = [frame.loc[frame["threshold"] == t, metric].dropna().to_numpy()
            for t in thresholds]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.boxplot(data, tick_labels=[f"{t:.2f}" for t in thresholds])
    ax.set_xlabel("anomaly threshold [m/s$^2$]")
    ax.set_ylabel(metric.replace("_", " "))
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def impact_grid_figure(results, path) -> None:
    """Small-multiple THW traces for the impact-analysis attack grid."""
    n = len(results)
    cols = 3
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(12, 2.4 * rows),
                             sharex=True, squeeze=False)
    for ax, res in zip(axes.ravel(), results):
        ax.plot(res.log.t, res.log.thw, linewidth=0.7)
        ax.axhline(THW_BELOW, color=IDEAL_BAND_COLOR, linestyle="--", linewidth=0.6)
        ax.axhline(THW_ABOVE, color=IDEAL_BAND_COLOR, linestyle="--", linewidth=0.6)
        ax.set_title(res.name, fontsize=8)
    for ax in axes.ravel()[n:]:
        ax.set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


# --- tables ------------------------------------------------------------------

def buckets_row(buckets: ThwBuckets) -> dict:
    return {
        "thw_below_pct": round(buckets.frac_below, 2),
        "thw_ideal_pct": round(buckets.frac_ideal, 2),
        "thw_above_pct": round(buckets.frac_above, 2),
        "max_thw_s": round(buckets.max_thw, 3),
        "collision": buckets.collision,
    }


def campaign_report(buckets: ThwBuckets, metrics: DetectionMetrics | None,
                    log: RunLog) -> dict:
    """The JSON summary written next to each run log."""
    out = {
        "thw_buckets": buckets_row(buckets),
        "collision": log.collided,
        "collision_step": log.collision_step,
        "max_thw": round(buckets.max_thw, 6),
        "window": log.attack_window(),
        "steps": len(log),
    }
    if metrics is not None:
        out["detection_metrics"] = asdict(metrics)
    return out


def resiliency_table(results: dict[str, dict[str, ThwBuckets]]) -> pd.DataFrame:
    """Attack x mode grid of bucket percentages, one row per measure."""
    columns = {}
    for attack_name, per_mode in results.items():
        for mode, buckets in per_mode.items():
            columns[(attack_name, mode)] = [
                f"{buckets.frac_below:.2f}%",
                f"{buckets.frac_ideal:.2f}%",
                f"{buckets.frac_above:.2f}%",
                f"{buckets.max_thw:.2f}",
                "Yes" if buckets.collision else "No",
            ]
    index = ["THW < 0.55s", "THW 0.55-0.75s", "THW > 0.75s", "Max THW", "Collision"]
    frame = pd.DataFrame(columns, index=index)
    frame.columns = pd.MultiIndex.from_tuples(frame.columns, names=["attack", "mode"])
    return frame


def _markdown_table(frame: pd.DataFrame) -> str:
    headers = [""] + [" / ".join(map(str, c)) if isinstance(c, tuple) else str(c)
                      for c in frame.columns]
    lines = ["| " + " | ".join(headers) + " |",
             "|" + "|".join("---" for _ in headers) + "|"]
    for idx, row in frame.iterrows():
        cells = [str(idx)] + [str(v) for v in row]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def write_table(frame: pd.DataFrame, csv_path, md_path=None) -> None:
    frame.to_csv(csv_path, lineterminator="\n")
    if md_path is not None:
        with open(md_path, "w") as fh:
            fh.write(_markdown_table(frame))


def write_json(payload, path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
