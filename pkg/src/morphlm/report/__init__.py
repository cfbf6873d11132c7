"""Reports: delimited tables plus matplotlib figures rendered to files."""

from .tables import (
    eval_report_csv,
    grid_table,
    render_rows,
    variant_comparison,
    write_csv,
)
from .plots import confusion_heatmap_png, loss_curves_png
from .parity import run_parity

__all__ = [
    "run_parity",
    "eval_report_csv",
    "grid_table",
    "render_rows",
    "variant_comparison",
    "write_csv",
    "confusion_heatmap_png",
    "loss_curves_png",
]
