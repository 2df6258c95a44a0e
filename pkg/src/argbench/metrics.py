"""Confusion-matrix scores, per-group breakdowns and hard-subset selection.

The positive class is "yes". Only parseable records enter the confusion
matrix; unparseable and transport-failed records are counted separately.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Iterable, Literal, Sequence

from argbench.evaluation import EvalRecord, Verdict
from argbench.puzzles import PuzzleInstance

BreakdownKey = Literal["n_args", "num_paths", "label"]
BREAKDOWN_KEYS = ("n_args", "num_paths", "label")
METRIC_FIELDS = ("accuracy", "f1", "mcc", "recall", "precision")


class NoDataError(ValueError):
    pass


class CoverageError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0
    unparsed: int = 0
    failed: int = 0

    @property
    def parsed(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_records(cls, records: Iterable[EvalRecord]) -> ConfusionMatrix:
        counts = dict.fromkeys(("tp", "fp", "tn", "fn", "unparsed", "failed"), 0)
        for r in records:
            if r.status != "ok":
                counts["failed"] += 1
            elif r.verdict is Verdict.UNPARSEABLE or r.verdict is None:
                counts["unparsed"] += 1
            elif r.verdict is Verdict.YES:
                counts["tp" if r.label else "fp"] += 1
            else:
                counts["fn" if r.label else "tn"] += 1
        return cls(**counts)


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    f1: float
    mcc: float
    recall: float
    precision: float
    tp: int
    fp: int
    tn: int
    fn: int
    parsed: int
    unparsed: int
    failed: int

    def as_row(self) -> dict[str, float | int]:
        return asdict(self)


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def metrics_from_matrix(cm: ConfusionMatrix) -> MetricsReport:
    """Scores as percentages; zero denominators give 0 (MCC included)."""
    if cm.parsed == 0:
        raise NoDataError("no parseable records to score")
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    f1 = _ratio(2 * precision * recall, precision + recall)
    den = (cm.tp + cm.fp) * (cm.tp + cm.fn) * (cm.tn + cm.fp) * (cm.tn + cm.fn)
    mcc = (cm.tp * cm.tn - cm.fp * cm.fn) / math.sqrt(den) if den else 0.0
    return MetricsReport(
        accuracy=100 * (cm.tp + cm.tn) / cm.parsed,
        f1=100 * f1,
        mcc=100 * mcc,
        recall=100 * recall,
        precision=100 * precision,
        tp=cm.tp,
        fp=cm.fp,
        tn=cm.tn,
        fn=cm.fn,
        parsed=cm.parsed,
        unparsed=cm.unparsed,
        failed=cm.failed,
    )


def compute_metrics(records: Iterable[EvalRecord]) -> MetricsReport:
    return metrics_from_matrix(ConfusionMatrix.from_records(records))


def _index(dataset: Sequence[PuzzleInstance]) -> dict[str, PuzzleInstance]:
    return {inst.id: inst for inst in dataset}


def _key_value(inst: PuzzleInstance, key: str):
    if key == "n_args":
        return inst.n_args
    if key == "num_paths":
        return inst.num_paths
    if key == "label":
        return "yes" if inst.label else "no"
    raise ValueError(key)


def breakdown(
    records: Iterable[EvalRecord],
    dataset: Sequence[PuzzleInstance],
    key: BreakdownKey,
    split_by_label: bool = False,
) -> list[tuple]:
    """Rows of ``(key value, parsed count, percent correct)`` sorted by key value.

    With ``split_by_label`` rows become ``(key value, label, parsed, percent)``.
    """
    if key not in BREAKDOWN_KEYS:
        raise ValueError(f"unknown breakdown key {key!r}; expected one of {BREAKDOWN_KEYS}")
    index = _index(dataset)
    groups: dict[tuple, list[bool]] = defaultdict(list)
    for r in records:
        if r.instance_id not in index:
            raise CoverageError(f"record {r.instance_id!r} is not in the dataset")
        if not r.parsed:
            continue
        inst = index[r.instance_id]
        group = (_key_value(inst, key),)
        if split_by_label:
            group += ("yes" if inst.label else "no",)
        groups[group].append(bool(r.correct))
    return [
        (*group, len(hits), 100 * sum(hits) / len(hits))
        for group, hits in sorted(groups.items())
    ]


def _wrong_ids(records: Iterable[EvalRecord]) -> set[str]:
    return {r.instance_id for r in records if r.correct is not True}


def select_hard_subset(
    results_a: Sequence[EvalRecord], results_b: Sequence[EvalRecord]
) -> set[str]:
    """Ids that either run got wrong, left unparsed, or failed to answer."""
    ids_a = {r.instance_id for r in results_a}
    ids_b = {r.instance_id for r in results_b}
    if ids_a != ids_b:
        missing = sorted(ids_a ^ ids_b)
        shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
        raise CoverageError(f"result sets cover different instances; {len(missing)} unmatched: {shown}")
    return _wrong_ids(results_a) | _wrong_ids(results_b)


def check_coverage(records: Sequence[EvalRecord], dataset: Sequence[PuzzleInstance]) -> None:
    ids = {r.instance_id for r in records}
    expected = set(_index(dataset))
    if ids != expected:
        missing = sorted(expected - ids)
        extra = sorted(ids - expected)
        parts = []
        if missing:
            parts.append(f"{len(missing)} dataset ids without results (e.g. {missing[0]})")
        if extra:
            parts.append(f"{len(extra)} result ids not in dataset (e.g. {extra[0]})")
        raise CoverageError("; ".join(parts))
