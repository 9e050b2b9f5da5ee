"""Binary confusion counts and macro-averaged classification metrics.

The positive class is Ungrounded (the thing a detector is trying to catch).
Macro averages weigh both classes equally, so the choice of positive class
does not change them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .model import Label


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0  # gold Ungrounded, predicted Ungrounded
    fp: int = 0  # gold Grounded, predicted Ungrounded
    fn: int = 0  # gold Ungrounded, predicted Grounded
    tn: int = 0  # gold Grounded, predicted Grounded

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @classmethod
    def from_predictions(cls, pairs: Iterable[tuple[Label, bool]]) -> "ConfusionMatrix":
        """Build from ``(gold_label, predicted_grounded)`` pairs."""
        tp = fp = fn = tn = 0
        for gold, grounded in pairs:
            if gold is Label.UNGROUNDED:
                if grounded:
                    fn += 1
                else:
                    tp += 1
            elif gold is Label.GROUNDED:
                if grounded:
                    tn += 1
                else:
                    fp += 1
            else:
                raise ValueError("cannot score an unlabeled record")
        return cls(tp, fp, fn, tn)


class MacroMetrics(NamedTuple):
    precision: float
    recall: float
    f1: float
    accuracy: float


def _div(num: float, den: float) -> float:
    return num / den if den else 0.0


def _f1(p: float, r: float) -> float:
    return _div(2 * p * r, p + r)


def macro_metrics(cm: ConfusionMatrix) -> MacroMetrics:
    if cm.total <= 0:
        raise ValueError("confusion matrix is empty")
    p_pos, r_pos = _div(cm.tp, cm.tp + cm.fp), _div(cm.tp, cm.tp + cm.fn)
    p_neg, r_neg = _div(cm.tn, cm.tn + cm.fn), _div(cm.tn, cm.tn + cm.fp)
    return MacroMetrics(
        precision=(p_pos + p_neg) / 2,
        recall=(r_pos + r_neg) / 2,
        f1=(_f1(p_pos, r_pos) + _f1(p_neg, r_neg)) / 2,
        accuracy=(cm.tp + cm.tn) / cm.total,
    )
