"""Figure rendering. Uses the Agg backend so it works headless."""

import csv
from typing import List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def loss_curves_png(curves_csv: str, out_png: str, title: str = "pre-training losses") -> str:
    """Plot the four task losses over steps from a training curves CSV."""
    with open(curves_csv, "r", encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise ValueError(f"no rows in {curves_csv}")
    steps = [int(r["step"]) for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for column, label in (
        ("L_stem", "stem"),
        ("L_affix", "affix"),
        ("L_pos", "POS"),
        ("L_affixset", "affix set"),
    ):
        ax.plot(steps, [float(r[column]) for r in rows], label=label)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return out_png


def confusion_heatmap_png(
    matrix: Sequence[Sequence[float]],
    out_png: str,
    label_names: Optional[List[str]] = None,
    title: str = "confusion matrix (row-normalized)",
) -> str:
    """Render a row-normalized confusion matrix with per-cell annotations."""
    n = len(matrix)
    names = label_names or [str(i) for i in range(n)]
    fig, ax = plt.subplots(figsize=(1.2 * n + 2.5, 1.2 * n + 2))
    im = ax.imshow(matrix, cmap="Blues", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(n), names, rotation=45, ha="right")
    ax.set_yticks(range(n), names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("gold")
    ax.set_title(title)
    for i in range(n):
        for j in range(n):
            v = matrix[i][j]
            ax.text(
                j, i, f"{v:.2f}",
                ha="center", va="center",
                color="white" if v > 0.5 else "black",
            )
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return out_png
