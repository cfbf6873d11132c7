"""Delimited and human-readable tables for runs, grids, and comparisons."""

import csv
from typing import Dict, List, Optional, Sequence

from ..finetune.metrics import EvalReport
from ..finetune.protocol import GridPoint, format_stability


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def render_rows(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Fixed-width text table."""
    cells = [list(map(str, header))] + [list(map(str, r)) for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = []
    for r, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if r == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def eval_report_csv(report: EvalReport, path: str, confusion_path: Optional[str] = None) -> None:
    """Per-class metrics as CSV; optionally the row-normalized confusion
    matrix as a separate plot-ready CSV."""
    names = report.label_names or [str(i) for i in range(report.n_classes)]
    rows = [
        [names[i], report.precision[i], report.recall[i], report.f1[i], report.support[i]]
        for i in range(report.n_classes)
    ]
    rows.append(["weighted_f1", "", "", report.weighted_f1, sum(report.support)])
    write_csv(path, ["class", "precision", "recall", "f1", "support"], rows)
    if confusion_path:
        write_csv(
            confusion_path,
            ["gold\\pred"] + names,
            [[names[i]] + list(report.confusion[i]) for i in range(report.n_classes)],
        )


def grid_table(points: Sequence[GridPoint], path: Optional[str] = None) -> str:
    """Ranked grid-search table; written as CSV when a path is given."""
    header = ["rank", "batch_size", "peak_lr", "epochs", "dev_f1"]
    rows = [
        [p.rank, p.hyper.batch_size, p.hyper.peak_lr, p.hyper.epochs, f"{p.dev_f1:.6f}"]
        for p in points
    ]
    if path:
        write_csv(path, header, rows)
    return render_rows(header, rows)


def variant_comparison(
    stats_by_variant: Dict[str, Dict[str, float]],
    scores_by_variant: Optional[Dict[str, List[float]]] = None,
    path: Optional[str] = None,
) -> str:
    """Stability comparison across model variants, one row per variant with
    'mean ± std, range lo - hi' formatting. No direction is asserted; this
    only reports what the runs produced."""
    header = ["variant", "weighted_f1", "mean", "std", "min", "max", "runs"]
    rows = []
    for variant, stats in stats_by_variant.items():
        n = len(scores_by_variant[variant]) if scores_by_variant else ""
        rows.append(
            [
                variant,
                format_stability(stats),
                f"{stats['mean']:.6f}",
                f"{stats['std']:.6f}",
                f"{stats['min']:.6f}",
                f"{stats['max']:.6f}",
                n,
            ]
        )
    if path:
        write_csv(path, header, rows)
    return render_rows(header, rows)
