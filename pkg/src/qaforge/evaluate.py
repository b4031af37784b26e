"""Human-expert scoring rubric, review aggregation, box statistics, and
benchmark report rendering."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, asdict
from pathlib import Path

from .errors import (
    InvalidComponentValue, MixedQaRef, EmptyReviewSet, EmptyInput, IoError,
)
from .finetune import ExperimentResult

ALLOWED_VALUES = {
    "format_adherence": (0, 2),
    "question_accuracy": (0, 2, 4),
    "answer_accuracy": (0, 2, 4),
    "length_score": (0, 1),
    "category_alignment": (0, 4),
}
CRITERIA = tuple(ALLOWED_VALUES)


@dataclass
class ScoreCard:
    qa_ref: str
    reviewer_id: str
    format_adherence: int
    question_accuracy: int
    answer_accuracy: int
    length_score: int
    category_alignment: int
    model: str = ""  # optional tag used to group score reports

    def __post_init__(self):
        for name, allowed in ALLOWED_VALUES.items():
            value = getattr(self, name)
            if value not in allowed:
                raise InvalidComponentValue(
                    f"{name}={value!r}; allowed: {allowed}")

    def to_dict(self) -> dict:
        return asdict(self)


def total_score(card: ScoreCard) -> int:
    return sum(getattr(card, name) for name in CRITERIA)


def aggregate_reviews(cards: list[ScoreCard]) -> dict[str, float]:
    """Arithmetic mean per criterion plus "total" (the sum of the means,
    which equals the mean of the per-card totals)."""
    if not cards:
        raise EmptyReviewSet()
    refs = {c.qa_ref for c in cards}
    if len(refs) > 1:
        raise MixedQaRef(f"cards span {len(refs)} qa_refs: {sorted(refs)}")
    n = len(cards)
    means = {name: sum(getattr(c, name) for c in cards) / n for name in CRITERIA}
    means["total"] = sum(means[name] for name in CRITERIA)
    return means


@dataclass
class BoxStats:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float
    n: int


def _quantile(sorted_values: list[float], p: float) -> float:
    """Quantile by linear interpolation at position p*(n-1)."""
    pos = p * (len(sorted_values) - 1)
    lo = int(pos)
    hi = min(lo + 1, len(sorted_values) - 1)
    frac = pos - lo
    return sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac


def box_stats(values: list[float]) -> BoxStats:
    if not values:
        raise EmptyInput("box_stats needs at least one value")
    s = sorted(float(v) for v in values)
    return BoxStats(min=s[0], q1=_quantile(s, 0.25), median=_quantile(s, 0.5),
                    q3=_quantile(s, 0.75), max=s[-1],
                    mean=sum(s) / len(s), n=len(s))


# --- score persistence ------------------------------------------------------

def load_scores(path: str | Path) -> tuple[list[ScoreCard], list[str]]:
    path = Path(path)
    if not path.exists():
        return [], []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(str(e)) from e
    cards: list[ScoreCard] = []
    warnings: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            known = {f for f in ScoreCard.__dataclass_fields__}
            cards.append(ScoreCard(**{k: v for k, v in d.items() if k in known}))
        except Exception as e:  # noqa: BLE001 - per-line skip-and-warn
            warnings.append(f"line {lineno}: skipped ({e})")
    return cards, warnings


def append_score(path: str | Path, card: ScoreCard) -> None:
    try:
        with open(path, "a", encoding="utf-8") as f:
            f.write(json.dumps(card.to_dict(), ensure_ascii=False) + "\n")
    except OSError as e:
        raise IoError(str(e)) from e


# --- reports ----------------------------------------------------------------

MISSING_CELL = "—"


def loss_table(results: list[ExperimentResult]) -> tuple[list[str], list[list[str]]]:
    """(header, rows) for the best-loss table: rows by ascending qa_size,
    one column per model (sorted by name), cells at 2 decimals."""
    models = sorted({r.spec.model_name for r in results})
    sizes = sorted({r.spec.qa_size for r in results})
    cells: dict[tuple[int, str], float] = {}
    for r in results:
        cells[(r.spec.qa_size, r.spec.model_name)] = r.best_loss
    header = ["qa_size"] + models
    rows = []
    for size in sizes:
        row = [str(size)]
        for model in models:
            value = cells.get((size, model))
            row.append(MISSING_CELL if value is None else f"{value:.2f}")
        rows.append(row)
    return header, rows


def render_csv(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render_text(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(cell)) for cell in col)
              for col in zip(header, *rows)] if rows else [len(h) for h in header]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip()
             for row in [header] + rows]
    return "\n".join(lines) + "\n"


def loss_report(results: list[ExperimentResult], fmt: str = "text") -> str:
    header, rows = loss_table(results)
    return render_csv(header, rows) if fmt == "csv" else render_text(header, rows)


def score_report(cards_by_model: dict[str, list[ScoreCard]],
                 fmt: str = "text") -> str:
    """One BoxStats row per model over per-QA aggregated total scores."""
    header = ["model", "n", "min", "q1", "median", "q3", "max", "mean"]
    rows = []
    for model in sorted(cards_by_model):
        totals = score_totals(cards_by_model[model])
        if not totals:
            continue
        b = box_stats(totals)
        rows.append([model, str(b.n)] + [f"{v:.2f}" for v in
                                         (b.min, b.q1, b.median, b.q3, b.max, b.mean)])
    return render_csv(header, rows) if fmt == "csv" else render_text(header, rows)


def score_totals(cards: list[ScoreCard]) -> list[float]:
    """Aggregated total per qa_ref (mean of reviewer totals)."""
    by_ref: dict[str, list[ScoreCard]] = {}
    for c in cards:
        by_ref.setdefault(c.qa_ref, []).append(c)
    return [aggregate_reviews(group)["total"] for group in by_ref.values()]
