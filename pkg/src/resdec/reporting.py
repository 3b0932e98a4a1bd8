"""Result writers: delimited/JSON files plus figure rendering.

CSV output is byte-stable for deterministic payloads: fixed column order,
LF line endings, `repr`-formatted floats, booleans as 0/1.  Figures render
through the Agg backend straight to PNG files next to the delimited output;
they visualize, never compute.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = [
    "format_cell",
    "write_csv",
    "write_json",
    "figure_path_for",
    "render_accuracy_bars",
    "render_sweep",
    "render_offset_accuracy",
    "render_jsd_profile",
    "render_bench",
]


def format_cell(value) -> str:
    """One CSV cell: floats via repr (shortest round-trip), bools as 0/1."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


def write_csv(path, header, rows) -> None:
    """Write rows under a header with LF endings and no trailing spaces."""
    lines = [",".join(header)]
    lines.extend(",".join(format_cell(cell) for cell in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_json(path, payload) -> None:
    """Stable JSON: sorted keys, two-space indent, LF endings."""
    text = json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8", newline="\n")


def figure_path_for(out_path) -> Path:
    """The PNG path rendered alongside a delimited output file."""
    return Path(out_path).with_suffix(".png")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def _finish(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    _pyplot().close(fig)


def render_accuracy_bars(pairs: dict[str, float], title: str, path) -> None:
    """Bar chart of named accuracies in [0, 1]."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.2))
    names = list(pairs)
    values = [pairs[n] for n in names]
    ax.bar(names, values, color=["#3b7dd8", "#c44e52", "#55a868", "#8172b2"][: len(names)])
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("accuracy")
    ax.set_title(title)
    for i, v in enumerate(values):
        ax.text(i, v + 0.02, f"{v:.3f}", ha="center", fontsize=9)
    _finish(fig, path)


def render_sweep(rows, path) -> None:
    """One line per metric across the sweep's configurations, in row order."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 3.6))
    metrics = sorted({r.metric for r in rows})
    labels: list[str] = []
    for metric in metrics:
        pts = [r for r in rows if r.metric == metric]
        if len(pts) > len(labels):
            labels = [
                f"a{r.alpha:g},b{r.beta:g},k{r.pool_k},w{r.window_w},{r.strategy}"
                for r in pts
            ]
        ax.plot(range(len(pts)), [r.value for r in pts], marker="o", label=metric)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("value")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title("ablation sweep")
    ax.legend(fontsize=8)
    _finish(fig, path)


def render_offset_accuracy(report, path) -> None:
    """Accuracy vs. negative offset from the answer step."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    offsets = report.offsets()
    ax.plot(offsets, [report.per_offset[d] for d in offsets], marker="o", color="#3b7dd8")
    ax.set_xlabel("offset from answer step")
    ax.set_ylabel("accuracy")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title("answer-set accuracy by offset")
    ax.grid(True, alpha=0.3)
    _finish(fig, path)


def render_jsd_profile(profile, path) -> None:
    """Mean adjacent-divergence per position with a one-standard-deviation band."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    x = profile.positions
    ax.plot(x, profile.mean, marker="o", color="#c44e52", label="mean")
    ax.fill_between(
        x, profile.mean - profile.std, profile.mean + profile.std, alpha=0.25,
        color="#c44e52", label="±1 std",
    )
    ax.set_xlabel("transition position (oldest first)")
    ax.set_ylabel("Jensen-Shannon divergence (nats)")
    ax.set_title(f"divergence profile over {profile.n_traces} traces")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    _finish(fig, path)


def render_bench(report, path) -> None:
    """Per-token wall times and the stage composition of the decode step."""
    plt = _pyplot()
    fig, (left, right) = plt.subplots(1, 2, figsize=(8, 3.2))
    left.bar(
        ["plain", "residual"],
        [report.plain_us_per_token, report.resdec_us_per_token],
        color=["#55a868", "#3b7dd8"],
    )
    left.set_ylabel("µs per token")
    left.set_title(f"loop wall time (ratio {report.ratio:.2f}x)")
    stages = list(report.stage_means_us)
    right.barh(stages, [report.stage_means_us[s] for s in stages], color="#8172b2")
    right.set_xlabel("µs per step")
    right.set_title("stage means")
    right.invert_yaxis()
    _finish(fig, path)
