"""Grouping quality against a reference set of concepts, and threshold sweeps."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .core import Ranking
from .errors import ParseError
from .grouping import ObjectGroup
from .summarize import select_important_groups, to_class_level, type_name_set


@dataclass(frozen=True)
class Concept:
    name: str
    types: frozenset[str]


@dataclass(frozen=True)
class GroundTruth:
    concepts: tuple[Concept, ...]

    def __post_init__(self) -> None:
        if not self.concepts:
            raise ValueError("ground truth has no concepts")
        for c in self.concepts:
            if not c.types:
                raise ValueError(f"concept {c.name!r} has no types")

    @property
    def n(self) -> int:
        return sum(len(c.types) for c in self.concepts)


@dataclass(frozen=True)
class Match:
    concept: str
    group: int | None  # index into TS, None when TS is empty
    recall: float
    precision: float
    f: float


@dataclass(frozen=True)
class EvaluationReport:
    F: float
    Recall: float
    matches: tuple[Match, ...]
    lifeline_count: int

    def to_dict(self) -> dict:
        return {
            "F": self.F,
            "Recall": self.Recall,
            "lifeline_count": self.lifeline_count,
            "concepts": [
                {"concept": m.concept, "group": m.group, "recall": m.recall, "precision": m.precision, "f": m.f}
                for m in self.matches
            ],
        }


def pair_scores(r: frozenset[str], t: frozenset[str]) -> tuple[float, float, float]:
    inter = len(r & t)
    recall = inter / len(r)
    precision = inter / len(t) if t else 0.0
    f = 0.0 if recall + precision == 0 else 2 * recall * precision / (recall + precision)
    return recall, precision, f


def evaluate(TS: Iterable[Iterable[str]], RS: GroundTruth) -> EvaluationReport:
    """Weighted best-match F and Recall of type-name groups ``TS``.

    F and Recall each take their own per-concept maximum over ``TS``; the
    reported match row is the F-maximising group (first one on ties).
    """
    ts = [frozenset(t) for t in TS]
    n = RS.n
    F = 0.0
    R = 0.0
    rows = []
    for c in RS.concepts:
        best_f, best_r, best_j, best_p, best_rf = 0.0, 0.0, None, 0.0, 0.0
        for j, t in enumerate(ts):
            rec, prec, f = pair_scores(c.types, t)
            if best_j is None or f > best_f:
                best_f, best_j, best_p, best_rf = f, j, prec, rec
            best_r = max(best_r, rec)
        w = len(c.types) / n
        F += w * best_f
        R += w * best_r
        rows.append(Match(c.name, best_j, best_rf, best_p, best_f))
    return EvaluationReport(F, R, tuple(rows), len(ts))


def load_ground_truth(path: str | Path) -> GroundTruth:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, location=f"line {exc.lineno} column {exc.colno}", path=str(path)) from None
    try:
        rows = doc["concepts"] if isinstance(doc, dict) else doc
        return GroundTruth(tuple(Concept(r["concept_name"], frozenset(r["types"])) for r in rows))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad ground truth: {exc}", path=str(path)) from None


def ground_truth_to_dict(gt: GroundTruth) -> dict:
    return {"concepts": [{"concept_name": c.name, "types": sorted(c.types)} for c in gt.concepts]}


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    I_t: float
    lifeline_count: int
    F: float
    Recall: float


def type_groups(
    ranking: Ranking, I_t: float, groups: Iterable[ObjectGroup], type_of: Mapping[str, str]
) -> list[frozenset[str]]:
    """TS for one threshold: class-level type-name sets of the shown groups."""
    shown = to_class_level(select_important_groups(ranking, I_t, groups), type_of)
    return [type_name_set(g, type_of) for g in shown]


def sweep(
    ranking: Ranking,
    groups: Sequence[ObjectGroup],
    type_of: Mapping[str, str],
    RS: GroundTruth,
    grid: Iterable[float],
) -> list[SweepRow]:
    rows = []
    for it in sorted(set(grid), reverse=True):
        TS = type_groups(ranking, it, groups, type_of)
        rep = evaluate(TS, RS)
        rows.append(SweepRow(it, len(TS), rep.F, rep.Recall))
    return rows


def sweep_to_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["I_t", "lifeline_count", "F", "Recall"])
    for r in rows:
        w.writerow([repr(float(r.I_t)), r.lifeline_count, repr(float(r.F)), repr(float(r.Recall))])
    return buf.getvalue()


def default_grid(ranking: Ranking) -> list[float]:
    """Every distinct importance just below which the shown set changes, plus the top."""
    vals = sorted({float(v) for v in ranking.importance}, reverse=True)
    grid = [vals[0]] if vals else [0.0]
    # thresholds are strict: I_t = v hides objects of importance v
    grid += vals[1:]
    grid.append(0.0)
    return sorted(set(grid), reverse=True)
