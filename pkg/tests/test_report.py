"""Reporting tests: CSV tables, rendered text, and figure files."""

import csv
import os

import pytest

from morphlm.finetune.metrics import evaluate_labels
from morphlm.finetune.protocol import GridPoint
from morphlm.finetune.trainer import FinetuneHyper
from morphlm.report.plots import confusion_heatmap_png, loss_curves_png
from morphlm.report.tables import (
    eval_report_csv,
    grid_table,
    render_rows,
    variant_comparison,
    write_csv,
)


def _png_ok(path):
    assert os.path.exists(path)
    with open(path, "rb") as f:
        header = f.read(8)
    assert header == b"\x89PNG\r\n\x1a\n"
    assert os.path.getsize(path) > 1000


def test_write_and_render_rows(tmp_path):
    path = str(tmp_path / "t.csv")
    write_csv(path, ["a", "b"], [[1, 2], [3, 4]])
    rows = list(csv.reader(open(path)))
    assert rows == [["a", "b"], ["1", "2"], ["3", "4"]]
    text = render_rows(["a", "b"], [[1, 2]])
    lines = text.splitlines()
    assert lines[0].split() == ["a", "b"]
    assert set(lines[1]) <= {"-", " "}
    assert lines[2].split() == ["1", "2"]


def test_eval_report_csv_and_confusion(tmp_path):
    report = evaluate_labels(
        [0, 0, 1, 1, 2], [0, 1, 1, 1, 0], label_names=["x", "y", "z"]
    )
    metrics_path = str(tmp_path / "metrics.csv")
    conf_path = str(tmp_path / "confusion.csv")
    eval_report_csv(report, metrics_path, confusion_path=conf_path)

    rows = list(csv.reader(open(metrics_path)))
    assert rows[0] == ["class", "precision", "recall", "f1", "support"]
    assert [r[0] for r in rows[1:]] == ["x", "y", "z", "weighted_f1"]
    assert float(rows[-1][3]) == pytest.approx(report.weighted_f1, abs=1e-12)

    conf = list(csv.reader(open(conf_path)))
    assert conf[0] == ["gold\\pred", "x", "y", "z"]
    for i, row in enumerate(conf[1:]):
        got = [float(v) for v in row[1:]]
        assert got == pytest.approx(report.confusion[i], abs=1e-12)
        assert sum(got) in (pytest.approx(1.0, abs=1e-9), 0.0)


def test_grid_table_renders_and_writes(tmp_path):
    points = [
        GridPoint(hyper=FinetuneHyper(batch_size=16), dev_f1=0.9, rank=1),
        GridPoint(hyper=FinetuneHyper(batch_size=8), dev_f1=0.8, rank=2),
    ]
    path = str(tmp_path / "grid.csv")
    text = grid_table(points, path=path)
    assert "rank" in text and "0.900000" in text
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["rank", "batch_size", "peak_lr", "epochs", "dev_f1"]
    assert rows[1][0] == "1"


def test_variant_comparison_table(tmp_path):
    stats = {
        "bert": {"mean": 0.719, "std": 0.008, "min": 0.704, "max": 0.734},
        "gpt": {"mean": 0.681, "std": 0.012, "min": 0.66, "max": 0.70},
    }
    scores = {"bert": [0.704, 0.719, 0.734], "gpt": [0.66, 0.68, 0.70]}
    path = str(tmp_path / "comparison.csv")
    text = variant_comparison(stats, scores, path=path)
    assert "71.9 ± 0.8, range 70.4 - 73.4" in text
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["variant", "weighted_f1", "mean", "std", "min", "max", "runs"]
    assert [r[0] for r in rows[1:]] == ["bert", "gpt"]
    assert rows[1][-1] == "3"


def test_loss_curves_png_from_run(tmp_path, pretrained):
    out = str(tmp_path / "curves.png")
    got = loss_curves_png(pretrained.curves_path, out)
    assert got == out
    _png_ok(out)


def test_loss_curves_png_rejects_empty(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("step,L_stem,L_affix,L_pos,L_affixset\n")
    with pytest.raises(ValueError, match="no rows"):
        loss_curves_png(str(empty), str(tmp_path / "x.png"))


def test_confusion_heatmap_png(tmp_path):
    report = evaluate_labels([0, 0, 1, 1], [0, 1, 1, 1], label_names=["a", "b"])
    out = str(tmp_path / "conf.png")
    confusion_heatmap_png(report.confusion, out, label_names=report.label_names)
    _png_ok(out)
