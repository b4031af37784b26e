"""Curated QA pairs: validation, append-only JSONL persistence, summary stats."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from pathlib import Path

from .errors import (
    EmptyQuestion, EmptyAnswer, UnknownCategory, BadPmid, BadDoi,
    IoError, NotADoi,
)
from .records import normalize_doi

CATEGORIES = ("knowledge", "method", "discussion")
CATEGORY_ALIASES = {"methodology": "method"}
ORIGINS = ("human", "model")


@dataclass
class QAPair:
    question: str
    answer: str
    pmid: str
    doi: str = ""
    category: str = "knowledge"
    submitted_at: str = ""
    origin: str = "human"

    def to_dict(self) -> dict:
        return asdict(self)


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def validate_qa(candidate: dict, now: str | None = None) -> QAPair:
    """Validate raw QA fields into a canonical QAPair.

    Trims strings, canonicalizes the category ("methodology" maps to
    "method"), normalizes a non-empty DOI, and stamps submitted_at when
    absent."""
    question = str(candidate.get("question", "")).strip()
    answer = str(candidate.get("answer", "")).strip()
    pmid = str(candidate.get("pmid", "")).strip()
    doi = str(candidate.get("doi", "")).strip()
    category = str(candidate.get("category", "")).strip().lower()
    origin = str(candidate.get("origin", "human")).strip().lower() or "human"
    submitted_at = str(candidate.get("submitted_at", "")).strip()

    if not question:
        raise EmptyQuestion("question is empty after trimming")
    if not answer:
        raise EmptyAnswer("answer is empty after trimming")
    category = CATEGORY_ALIASES.get(category, category)
    if category not in CATEGORIES:
        raise UnknownCategory(f"{category!r}; allowed: {', '.join(CATEGORIES)}")
    if pmid and not pmid.isdigit():
        raise BadPmid(f"{pmid!r} is not all digits")
    if doi:
        try:
            doi = normalize_doi(doi)
        except NotADoi as e:
            raise BadDoi(str(e)) from e
    if origin not in ORIGINS:
        origin = "human"
    if not submitted_at:
        submitted_at = now if now is not None else utc_now_iso()
    return QAPair(question=question, answer=answer, pmid=pmid, doi=doi,
                  category=category, submitted_at=submitted_at, origin=origin)


def append_qa(store_path: str | Path, pair: QAPair, fsync: bool = False) -> None:
    """Append one pair as a single JSONL line (whole-line write)."""
    line = json.dumps(pair.to_dict(), ensure_ascii=False) + "\n"
    try:
        with open(store_path, "a", encoding="utf-8") as f:
            f.write(line)
            f.flush()
            if fsync:
                os.fsync(f.fileno())
    except OSError as e:
        raise IoError(str(e)) from e


def load_qa_store(store_path: str | Path) -> tuple[list[QAPair], list[str]]:
    """Read and validate every line; invalid lines are skipped with a warning."""
    path = Path(store_path)
    if not path.exists():
        return [], []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(str(e)) from e
    pairs: list[QAPair] = []
    warnings: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            pairs.append(validate_qa(json.loads(line)))
        except Exception as e:  # noqa: BLE001 - any bad line is skipped, not fatal
            warnings.append(f"line {lineno}: skipped ({e})")
    return pairs, warnings


@dataclass
class QAStats:
    total_papers: int = 0
    total_qas: int = 0
    by_category: dict[str, int] = field(default_factory=lambda: {c: 0 for c in CATEGORIES})

    def to_dict(self) -> dict:
        return asdict(self)


def stats(pairs: list[QAPair]) -> QAStats:
    """Distinct-PMID paper count, total pair count, and per-category counts."""
    by_category = {c: 0 for c in CATEGORIES}
    pmids = set()
    for p in pairs:
        by_category[p.category] += 1
        if p.pmid:
            pmids.add(p.pmid)
    return QAStats(total_papers=len(pmids), total_qas=len(pairs),
                   by_category=by_category)
