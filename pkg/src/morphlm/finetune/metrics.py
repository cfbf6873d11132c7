"""Classification metrics: weighted F1 and row-normalized confusion matrix.

Pure-python on purpose: the values feed acceptance checks with tight
tolerances, so the arithmetic here is kept simple and order-deterministic
(classes are always reduced in increasing id order).
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence


def _check_labels(gold: Sequence[int], pred: Sequence[int]) -> int:
    if len(gold) != len(pred):
        raise ValueError(
            f"gold has {len(gold)} labels but pred has {len(pred)}"
        )
    if len(gold) == 0:
        raise ValueError("cannot score an empty label list")
    for name, seq in (("gold", gold), ("pred", pred)):
        for v in seq:
            if v < 0:
                raise ValueError(f"{name} contains negative label id {v}")
    return max(max(gold), max(pred)) + 1


def confusion_counts(
    gold: Sequence[int], pred: Sequence[int], n_classes: Optional[int] = None
) -> List[List[int]]:
    """Raw confusion counts; rows are gold classes, columns predictions."""
    inferred = _check_labels(gold, pred)
    c = n_classes if n_classes is not None else inferred
    if c < inferred:
        raise ValueError(f"labels use {inferred} classes but n_classes={c}")
    counts = [[0] * c for _ in range(c)]
    for g, p in zip(gold, pred):
        counts[g][p] += 1
    return counts


def confusion_matrix(
    gold: Sequence[int], pred: Sequence[int], n_classes: Optional[int] = None
) -> List[List[float]]:
    """Row-normalized confusion: each row divided by its gold-class total.

    Rows for classes absent from gold stay all-zero, so every row sums to
    1 or 0 and the diagonal holds per-class recall.
    """
    counts = confusion_counts(gold, pred, n_classes)
    out = []
    for row in counts:
        total = sum(row)
        if total == 0:
            out.append([0.0] * len(row))
        else:
            out.append([v / total for v in row])
    return out


def _precision_recall_f1(counts: List[List[int]]):
    c = len(counts)
    precision, recall, f1, support = [], [], [], []
    for k in range(c):
        tp = counts[k][k]
        gold_k = sum(counts[k])
        pred_k = sum(counts[i][k] for i in range(c))
        p = tp / pred_k if pred_k else 0.0
        r = tp / gold_k if gold_k else 0.0
        f = 2.0 * p * r / (p + r) if (p + r) else 0.0
        precision.append(p)
        recall.append(r)
        f1.append(f)
        support.append(gold_k)
    return precision, recall, f1, support


def weighted_f1(
    gold: Sequence[int], pred: Sequence[int], n_classes: Optional[int] = None
) -> float:
    """Per-class F1 averaged with weights proportional to gold support.

    Per-class F1 is 2PR/(P+R), defined as 0 when P+R == 0.
    """
    counts = confusion_counts(gold, pred, n_classes)
    _, _, f1, support = _precision_recall_f1(counts)
    total = sum(support)
    return sum(f * s for f, s in zip(f1, support)) / total


@dataclass
class EvalReport:
    """Everything a classification eval produces, ready to serialize."""

    weighted_f1: float
    precision: List[float]
    recall: List[float]
    f1: List[float]
    support: List[int]
    counts: List[List[int]]
    confusion: List[List[float]]
    label_names: Optional[List[str]] = None
    predictions: List[int] = field(default_factory=list)

    @property
    def n_classes(self) -> int:
        return len(self.support)

    def to_dict(self) -> dict:
        return {
            "weighted_f1": self.weighted_f1,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
            "counts": self.counts,
            "confusion": self.confusion,
            "label_names": self.label_names,
        }

    def render(self) -> str:
        """Human-readable table, one line per class plus the weighted F1."""
        names = self.label_names or [str(i) for i in range(self.n_classes)]
        width = max(len(n) for n in names)
        lines = [
            f"{'class':<{width}}  precision  recall  f1      support"
        ]
        for i, name in enumerate(names):
            lines.append(
                f"{name:<{width}}  {self.precision[i]:9.4f}  {self.recall[i]:6.4f}"
                f"  {self.f1[i]:6.4f}  {self.support[i]:7d}"
            )
        lines.append(f"weighted F1: {self.weighted_f1:.4f}")
        return "\n".join(lines)


def evaluate_labels(
    gold: Sequence[int],
    pred: Sequence[int],
    n_classes: Optional[int] = None,
    label_names: Optional[List[str]] = None,
) -> EvalReport:
    counts = confusion_counts(gold, pred, n_classes)
    precision, recall, f1, support = _precision_recall_f1(counts)
    total = sum(support)
    wf1 = sum(f * s for f, s in zip(f1, support)) / total
    return EvalReport(
        weighted_f1=wf1,
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        counts=counts,
        confusion=confusion_matrix(gold, pred, n_classes),
        label_names=label_names,
        predictions=list(pred),
    )
