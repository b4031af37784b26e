"""Normalized paper records: dedup, merging, DOI/PMID indexing, YAML/JSONL export."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, asdict
from pathlib import Path

import yaml

from .errors import NotADoi, ParseError, IoError

DOI_PREFIXES = ("https://doi.org/", "http://doi.org/", "doi:")

FIELD_ORDER = [
    "record_id", "doi", "pmid", "title", "authors", "journal",
    "pub_date", "abstract", "keywords", "source_format", "extra",
]


def normalize_doi(raw: str) -> str:
    """Strip resolver prefixes and lowercase; result must start with "10."."""
    doi = raw.strip()
    lowered = doi.lower()
    for prefix in DOI_PREFIXES:
        if lowered.startswith(prefix):
            doi = doi[len(prefix):]
            lowered = doi.lower()
    doi = lowered.strip()
    if not doi.startswith("10."):
        raise NotADoi(raw)
    return doi


def normalize_title_key(title: str) -> str:
    """Lowercase, collapse whitespace runs, strip trailing punctuation."""
    key = re.sub(r"\s+", " ", title.strip().lower())
    return key.rstrip(".,;:!? ")


@dataclass
class PaperRecord:
    title: str = ""
    doi: str = ""
    pmid: str = ""
    authors: list[str] = field(default_factory=list)
    journal: str = ""
    pub_date: str = ""
    abstract: str = ""
    keywords: list[str] = field(default_factory=list)
    source_format: str = "bibtex"
    extra: dict[str, str] = field(default_factory=dict)

    @property
    def record_id(self) -> str:
        if self.doi:
            return self.doi
        if self.pmid:
            return f"pmid:{self.pmid}"
        return f"title:{normalize_title_key(self.title)}"

    @property
    def dedup_key(self) -> str:
        return self.record_id

    def to_dict(self) -> dict:
        d = asdict(self)
        d["record_id"] = self.record_id
        return {k: d[k] for k in FIELD_ORDER}

    @classmethod
    def from_dict(cls, d: dict) -> "PaperRecord":
        known = {k: d[k] for k in d if k not in ("record_id",)}
        return cls(**known)


def merge_records(a: PaperRecord, b: PaperRecord) -> PaperRecord:
    """Merge two records for the same work: a's non-empty scalars win,
    longer list wins (ties keep a's), extra maps union with a on conflict."""
    def scalar(x: str, y: str) -> str:
        return x if x else y

    def longer(x: list[str], y: list[str]) -> list[str]:
        return list(y) if len(y) > len(x) else list(x)

    extra = dict(b.extra)
    extra.update(a.extra)
    return PaperRecord(
        title=scalar(a.title, b.title),
        doi=scalar(a.doi, b.doi),
        pmid=scalar(a.pmid, b.pmid),
        authors=longer(a.authors, b.authors),
        journal=scalar(a.journal, b.journal),
        pub_date=scalar(a.pub_date, b.pub_date),
        abstract=scalar(a.abstract, b.abstract),
        keywords=longer(a.keywords, b.keywords),
        source_format=a.source_format,
        extra=extra,
    )


class RecordStore:
    """Immutable-after-build collection of deduplicated records with
    DOI and PMID indices."""

    def __init__(self, records: list[PaperRecord] | None = None):
        self.records: list[PaperRecord] = list(records or [])
        self.doi_index: dict[str, int] = {}
        self.pmid_index: dict[str, int] = {}
        self._rebuild_indices()

    def _rebuild_indices(self) -> None:
        self.doi_index.clear()
        self.pmid_index.clear()
        for i, rec in enumerate(self.records):
            if rec.doi:
                self.doi_index[rec.doi] = i
            if rec.pmid:
                self.pmid_index[rec.pmid] = i

    def __len__(self) -> int:
        return len(self.records)

    def lookup(self, doi: str = "", pmid: str = "") -> PaperRecord | None:
        if doi:
            try:
                doi = normalize_doi(doi)
            except NotADoi:
                return None
            i = self.doi_index.get(doi)
            return self.records[i] if i is not None else None
        if pmid:
            i = self.pmid_index.get(pmid.strip())
            return self.records[i] if i is not None else None
        return None


def dedup(records: list[PaperRecord]) -> tuple[RecordStore, list[str]]:
    """Merge records sharing a dedup key (DOI, else PMID, else title),
    in input order. Returns the store plus one warning per merge.

    Matching also consults the secondary identifier so a record carrying
    both DOI and PMID collapses with one carrying only the PMID; the store
    indices stay collision-free."""
    warnings: list[str] = []
    merged: list[PaperRecord] = []
    by_doi: dict[str, int] = {}
    by_pmid: dict[str, int] = {}
    by_title: dict[str, int] = {}

    def register(rec: PaperRecord, i: int) -> None:
        if rec.doi:
            by_doi[rec.doi] = i
        if rec.pmid:
            by_pmid[rec.pmid] = i
        if not rec.doi and not rec.pmid:
            by_title[normalize_title_key(rec.title)] = i

    for rec in records:
        target = None
        if rec.doi and rec.doi in by_doi:
            target = by_doi[rec.doi]
        elif rec.pmid and rec.pmid in by_pmid:
            target = by_pmid[rec.pmid]
        elif not rec.doi and not rec.pmid:
            target = by_title.get(normalize_title_key(rec.title))
        if target is None:
            register(rec, len(merged))
            merged.append(rec)
        else:
            merged[target] = merge_records(merged[target], rec)
            register(merged[target], target)
            warnings.append(f"merged duplicate record with key {rec.dedup_key!r}")
    return RecordStore(merged), warnings


def export_store(store: RecordStore, fmt: str, path: str | Path) -> None:
    """Write the store sorted by record_id with canonical field order."""
    dicts = sorted((r.to_dict() for r in store.records), key=lambda d: d["record_id"])
    path = Path(path)
    try:
        if fmt == "yaml":
            with open(path, "w", encoding="utf-8") as f:
                yaml.safe_dump(dicts, f, sort_keys=False, allow_unicode=True)
        elif fmt == "jsonl":
            with open(path, "w", encoding="utf-8") as f:
                for d in dicts:
                    f.write(json.dumps(d, ensure_ascii=False) + "\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")
    except OSError as e:
        raise IoError(str(e)) from e


def import_store(path: str | Path, fmt: str) -> RecordStore:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(str(e)) from e
    records: list[PaperRecord] = []
    if fmt == "yaml":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ParseError(0, f"invalid YAML: {e}") from e
        if data is None:
            data = []
        if not isinstance(data, list):
            raise ParseError(0, "top level is not a list")
        for i, d in enumerate(data):
            try:
                records.append(PaperRecord.from_dict(d))
            except (TypeError, AttributeError) as e:
                raise ParseError(i, f"bad record: {e}") from e
    elif fmt == "jsonl":
        for i, line in enumerate(text.splitlines()):
            if not line.strip():
                continue
            try:
                records.append(PaperRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, TypeError, AttributeError) as e:
                raise ParseError(i, f"bad record: {e}") from e
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return RecordStore(records)


def load_store_any(path: str | Path) -> RecordStore:
    """Import a store, inferring the format from the file extension."""
    suffix = Path(path).suffix.lower()
    fmt = "yaml" if suffix in (".yaml", ".yml") else "jsonl"
    return import_store(path, fmt)
