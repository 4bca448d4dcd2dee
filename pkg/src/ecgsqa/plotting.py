"""PNG figures from the plot-ready CSVs written by the experiment drivers.

matplotlib is imported lazily so the rest of the package never needs it.
"""

from __future__ import annotations

import csv
from pathlib import Path

METRICS = ("accuracy", "precision", "recall", "f1", "auprc")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _value(row, key):
    return float(row[key]) if row.get(key) not in (None, "") else float("nan")


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, dpi=100, metadata={"Software": None})
    return path


def plot_bars(rows, labels, path, title):
    """Grouped bars of the five metrics, one group per row."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(max(5.0, 1.2 * len(rows) + 2), 3.5))
    width = 0.8 / len(METRICS)
    for j, m in enumerate(METRICS):
        xs = [i + (j - 2) * width for i in range(len(rows))]
        ax.bar(xs, [_value(r, m) for r in rows], width, label=m)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_title(title)
    ax.legend(fontsize=7, ncol=5, loc="lower center")
    fig.tight_layout()
    out = _save(fig, path)
    plt.close(fig)
    return out


def plot_cross_matrix(rows, path, metric="accuracy"):
    """Heatmap of pairwise train -> test scores."""
    plt = _pyplot()
    pairs = [r for r in rows if r["block"] == "pairwise" and r["train"] != "Average"]
    ids = sorted({r["train"] for r in pairs} | {r["test"] for r in pairs})
    grid = [[float("nan")] * len(ids) for _ in ids]
    for r in pairs:
        grid[ids.index(r["train"])][ids.index(r["test"])] = _value(r, metric)
    fig, ax = plt.subplots(figsize=(1.2 * len(ids) + 2, 1.1 * len(ids) + 1.5))
    im = ax.imshow(grid, vmin=0, vmax=1, cmap="viridis")
    for i in range(len(ids)):
        for j in range(len(ids)):
            if grid[i][j] == grid[i][j]:
                ax.text(j, i, f"{grid[i][j]:.3f}", ha="center", va="center", color="w", fontsize=8)
    ax.set_xticks(range(len(ids)))
    ax.set_xticklabels(ids)
    ax.set_yticks(range(len(ids)))
    ax.set_yticklabels(ids)
    ax.set_xlabel("test")
    ax.set_ylabel("train")
    ax.set_title(f"pairwise {metric}")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    out = _save(fig, path)
    plt.close(fig)
    return out


def plot_sweep(rows, path):
    """Metrics against window length, best-F1 row marked."""
    plt = _pyplot()
    xs = [float(r["window_s"]) for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for m in METRICS:
        ax.plot(xs, [_value(r, m) for r in rows], marker="o", label=m)
    for r in rows:
        if r.get("best_f1") == "1":
            ax.axvline(float(r["window_s"]), color="grey", linestyle=":")
    ax.set_xlabel("window length (s)")
    ax.set_ylim(0, 1.05)
    ax.legend(fontsize=7)
    fig.tight_layout()
    out = _save(fig, path)
    plt.close(fig)
    return out


def render_figures(output_dir):
    """Render every figure whose CSV exists in ``output_dir``; returns written paths."""
    output_dir = Path(output_dir)
    written = []
    within = output_dir / "within.csv"
    if within.exists():
        rows = read_csv(within)
        written.append(plot_bars(rows, [f"{r['dataset']}/{r['model']}" for r in rows],
                                 output_dir / "within.png", "within-dataset"))
    cross = output_dir / "cross.csv"
    if cross.exists():
        rows = read_csv(cross)
        if any(r["block"] == "pairwise" for r in rows):
            written.append(plot_cross_matrix(rows, output_dir / "cross_accuracy.png", "accuracy"))
            written.append(plot_cross_matrix(rows, output_dir / "cross_auprc.png", "auprc"))
        for block in ("combined", "holdout"):
            sel = [r for r in rows if r["block"] == block]
            if sel:
                written.append(plot_bars(sel, [f"{r['train']}->{r['test']}" if r["test"] else r["train"]
                                               for r in sel],
                                         output_dir / f"{block}.png", block))
    sweep = output_dir / "sweep.csv"
    if sweep.exists():
        written.append(plot_sweep(read_csv(sweep), output_dir / "sweep.png"))
    return written
