"""Pearson correlation, per-annotator z-scores, confidence intervals,
and tabulated correlation reports.
"""

import json
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .errors import DegenerateInput, InvalidArgument


def pearson(xs, ys) -> float:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise InvalidArgument("pearson inputs must be 1-d and equally long")
    if xs.size < 2:
        raise InvalidArgument("pearson needs at least two samples")
    if np.std(xs) == 0 or np.std(ys) == 0:
        raise DegenerateInput("zero variance input to pearson")
    xc = xs - xs.mean()
    yc = ys - ys.mean()
    return float((xc @ yc) / np.sqrt((xc @ xc) * (yc @ yc)))


def z_scores(raw_scores, annotators) -> tuple[np.ndarray, int]:
    """Standardize scores per annotator to zero mean and unit sample
    variance. Annotators with a single score or zero spread get z = 0;
    the count of such degenerate scores is returned alongside.
    """
    raw_scores = list(raw_scores)
    annotators = list(annotators)
    if len(raw_scores) != len(annotators):
        raise InvalidArgument("every score needs an annotator id")
    groups = defaultdict(list)
    for idx, (score, ann) in enumerate(zip(raw_scores, annotators)):
        groups[ann].append(idx)

    z = np.zeros(len(raw_scores))
    degenerate = 0
    for idxs in groups.values():
        vals = np.array([raw_scores[i] for i in idxs], dtype=np.float64)
        if len(vals) < 2 or np.std(vals, ddof=1) == 0:
            degenerate += len(idxs)
            continue
        zs = (vals - vals.mean()) / np.std(vals, ddof=1)
        for i, v in zip(idxs, zs):
            z[i] = v
    return z, degenerate


def mean_ci(values, level: float = 0.95) -> tuple[float, float, float]:
    """Student-t confidence interval of the mean."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise InvalidArgument("confidence interval needs at least two values")
    mean = float(values.mean())
    sem = float(np.std(values, ddof=1) / np.sqrt(values.size))
    t = float(sps.t.ppf(0.5 + level / 2, df=values.size - 1))
    return mean, mean - t * sem, mean + t * sem


@dataclass
class CorrelationReport:
    rows: list = field(default_factory=list)  # dicts: target, n, pearson, ...
    metadata: dict = field(default_factory=dict)

    def to_tsv(self) -> str:
        lines = ["target\tn\tpearson\tpearson_abs\tdegenerate"]
        for r in self.rows:
            p = "" if r["pearson"] is None else f"{r['pearson']:.6f}"
            pa = "" if r["pearson"] is None else f"{abs(r['pearson']):.6f}"
            lines.append(f"{r['target']}\t{r['n']}\t{p}\t{pa}\t"
                         f"{int(r['degenerate'])}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({"metadata": self.metadata, "rows": self.rows},
                          indent=2)


def correlation_report(predictions_by_target: dict, gold_by_target: dict,
                       metadata: dict | None = None) -> CorrelationReport:
    """One row per target with signed and absolute correlation.

    Each target maps ids to values; prediction and gold id sets must align.
    Degenerate targets (zero variance) are marked, not dropped.
    """
    report = CorrelationReport(metadata=metadata or {})
    for target in sorted(predictions_by_target):
        preds = predictions_by_target[target]
        gold = gold_by_target.get(target)
        if gold is None or set(preds) != set(gold):
            raise InvalidArgument(
                f"prediction/gold ids misaligned for target '{target}'")
        ids = sorted(preds)
        xs = [preds[i] for i in ids]
        ys = [gold[i] for i in ids]
        try:
            rho = pearson(xs, ys)
            degenerate = False
        except DegenerateInput:
            rho = None
            degenerate = True
        report.rows.append({"target": target, "n": len(ids), "pearson": rho,
                            "pearson_abs": None if rho is None else abs(rho),
                            "degenerate": degenerate})
    return report
