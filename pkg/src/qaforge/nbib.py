"""Parser for PubMed NBIB (MEDLINE tag) exports.

Records are separated by blank lines. A field line is a tag padded to 4
characters, "- ", then the value; continuation lines start with whitespace
and are space-joined onto the previous field.
"""
from __future__ import annotations

import re

from .errors import MalformedFieldLine, NotADoi
from .records import PaperRecord, normalize_doi

_FIELD_LINE = re.compile(r"^([A-Z0-9]{1,4})\s*- (.*)$")


def _finish(fields: list[tuple[str, str]], warnings: list[str],
            records: list[PaperRecord]) -> None:
    if not fields:
        return
    rec = PaperRecord(source_format="nbib")
    fau: list[str] = []
    au: list[str] = []
    for tag, value in fields:
        value = value.strip()
        if tag == "PMID":
            rec.pmid = value
        elif tag == "TI":
            rec.title = value
        elif tag == "AB":
            rec.abstract = value
        elif tag == "FAU":
            fau.append(value)
        elif tag == "AU":
            au.append(value)
        elif tag == "JT":
            rec.journal = value
        elif tag == "DP":
            rec.pub_date = value
        elif tag in ("AID", "LID"):
            if value.endswith(" [doi]"):
                try:
                    rec.doi = normalize_doi(value[:-len(" [doi]")])
                except NotADoi:
                    warnings.append(f"unparseable DOI {value!r}; record kept without DOI")
            else:
                rec.extra[tag] = value
        elif tag == "OT":
            rec.keywords.append(value)
        else:
            if tag in rec.extra:
                warnings.append(f"tag {tag!r} repeated; keeping last value")
            rec.extra[tag] = value
    rec.authors = fau if fau else au
    if not rec.pmid and not rec.doi and not rec.title:
        warnings.append("dropped record with no PMID, DOI, or title")
    else:
        records.append(rec)


def parse_nbib(text: str) -> tuple[list[PaperRecord], list[str]]:
    """Parse NBIB text into paper records. Returns (records, warnings)."""
    records: list[PaperRecord] = []
    warnings: list[str] = []
    fields: list[tuple[str, str]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            _finish(fields, warnings, records)
            fields = []
            continue
        if line[0].isspace():
            if not fields:
                raise MalformedFieldLine(lineno, f"line {lineno}: continuation with no preceding field")
            tag, value = fields[-1]
            fields[-1] = (tag, value + " " + line.strip())
            continue
        m = _FIELD_LINE.match(line)
        if not m:
            raise MalformedFieldLine(lineno, f"line {lineno}: not a 'TAG - value' field line")
        fields.append((m.group(1), m.group(2)))
    _finish(fields, warnings, records)
    return records, warnings
