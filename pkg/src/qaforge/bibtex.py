"""Small BibTeX parser covering the PubMed-export subset.

Values may be brace-delimited (nesting allowed), double-quoted, or bare
numbers. ``@comment``/``@preamble`` blocks are skipped; ``@string`` macros
and ``#`` concatenation are not expanded (raw value kept, warning emitted).
"""
from __future__ import annotations

import re

from .errors import UnbalancedDelimiter, MissingEntryKey, NotADoi
from .records import PaperRecord, normalize_doi

_IDENT = re.compile(r"[A-Za-z][\w:+./-]*")
_SKIPPED_TYPES = {"comment", "preamble", "string"}


def _skip_ws(text: str, i: int) -> int:
    while i < len(text) and text[i].isspace():
        i += 1
    return i


def _read_braced(text: str, i: int) -> tuple[str, int]:
    """Read a {...} group starting at i; returns inner text and the index
    after the closing brace."""
    start = i
    depth = 0
    j = i
    while j < len(text):
        c = text[j]
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return text[i + 1:j], j + 1
        j += 1
    raise UnbalancedDelimiter(start)


def _read_quoted(text: str, i: int) -> tuple[str, int]:
    start = i
    j = i + 1
    depth = 0
    while j < len(text):
        c = text[j]
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
        elif c == '"' and depth == 0:
            return text[i + 1:j], j + 1
        j += 1
    raise UnbalancedDelimiter(start)


def _read_value(text: str, i: int, warnings: list[str]) -> tuple[str, int]:
    i = _skip_ws(text, i)
    parts: list[str] = []
    while True:
        if i >= len(text):
            raise UnbalancedDelimiter(i)
        c = text[i]
        if c == "{":
            part, i = _read_braced(text, i)
        elif c == '"':
            part, i = _read_quoted(text, i)
        else:
            m = re.match(r"[^,}\s#]+", text[i:])
            if not m:
                raise UnbalancedDelimiter(i)
            part = m.group(0)
            i += m.end()
        parts.append(part)
        i = _skip_ws(text, i)
        if i < len(text) and text[i] == "#":
            warnings.append("string concatenation '#' is unsupported; raw parts joined")
            i = _skip_ws(text, i + 1)
            continue
        break
    return " ".join(parts), i


def _clean(value: str) -> str:
    # collapse newlines/indentation from wrapped BibTeX values
    return re.sub(r"\s+", " ", value).strip()


def _strip_braces(value: str) -> str:
    # drop brace groups used for case protection, e.g. {DNA} -> DNA
    return value.replace("{", "").replace("}", "")


def _to_record(fields: dict[str, str], warnings: list[str]) -> PaperRecord:
    rec = PaperRecord(source_format="bibtex")
    year = ""
    month = ""
    for name, raw in fields.items():
        value = _clean(raw)
        if name == "doi":
            try:
                rec.doi = normalize_doi(_strip_braces(value))
            except NotADoi:
                warnings.append(f"unparseable DOI {value!r}; record kept without DOI")
        elif name == "pmid":
            rec.pmid = value
        elif name == "title":
            rec.title = _strip_braces(value)
        elif name == "author":
            rec.authors = [a.strip() for a in value.split(" and ") if a.strip()]
        elif name == "journal":
            rec.journal = _strip_braces(value)
        elif name == "year":
            year = value
        elif name == "month":
            month = value
        elif name == "abstract":
            rec.abstract = _strip_braces(value)
        elif name == "keywords":
            rec.keywords = [k.strip() for k in re.split(r"[;,]", value) if k.strip()]
        else:
            rec.extra[name] = value
    rec.pub_date = " ".join(p for p in (year, month) if p)
    return rec


def parse_bibtex(text: str) -> tuple[list[PaperRecord], list[str]]:
    """Parse BibTeX text into paper records. Returns (records, warnings)."""
    records: list[PaperRecord] = []
    warnings: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        at = text.find("@", i)
        if at < 0:
            break
        i = _skip_ws(text, at + 1)
        m = _IDENT.match(text, i)
        if not m:
            raise UnbalancedDelimiter(at, f"expected entry type after '@' at offset {at}")
        entry_type = m.group(0).lower()
        i = _skip_ws(text, m.end())
        if i >= n or text[i] not in "{(":
            raise UnbalancedDelimiter(i, f"expected '{{' after @{entry_type}")
        if entry_type in _SKIPPED_TYPES:
            _, i = _read_braced(text, i) if text[i] == "{" else _read_paren(text, i)
            warnings.append(f"skipped @{entry_type} block")
            continue
        body_start = i
        body, i = _read_braced(text, i) if text[i] == "{" else _read_paren(text, i)
        records.append(_parse_entry(entry_type, body, body_start, warnings))
    return records, warnings


def _read_paren(text: str, i: int) -> tuple[str, int]:
    start = i
    depth = 0
    j = i
    while j < len(text):
        c = text[j]
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
            if depth == 0:
                return text[i + 1:j], j + 1
        elif c == "{":
            inner, j2 = _read_braced(text, j)
            j = j2 - 1
        j += 1
    raise UnbalancedDelimiter(start)


def _parse_entry(entry_type: str, body: str, offset: int,
                 warnings: list[str]) -> PaperRecord:
    i = _skip_ws(body, 0)
    comma = body.find(",", i)
    key = body[i:comma].strip() if comma >= 0 else body[i:].strip()
    if not key or any(c.isspace() for c in key) or "=" in key:
        raise MissingEntryKey(f"@{entry_type} entry near offset {offset} has no citation key")
    fields: dict[str, str] = {}
    i = comma + 1 if comma >= 0 else len(body)
    while True:
        i = _skip_ws(body, i)
        if i >= len(body):
            break
        m = _IDENT.match(body, i)
        if not m:
            raise UnbalancedDelimiter(offset + i, f"expected field name at offset {offset + i}")
        name = m.group(0).lower()
        i = _skip_ws(body, m.end())
        if i >= len(body) or body[i] != "=":
            raise UnbalancedDelimiter(offset + i, f"expected '=' after field {name!r}")
        value, i = _read_value(body, i + 1, warnings)
        if name in fields:
            warnings.append(f"duplicate field {name!r} in entry {key!r}; last occurrence wins")
        fields[name] = value
        i = _skip_ws(body, i)
        if i < len(body) and body[i] == ",":
            i += 1
    rec = _to_record(fields, warnings)
    rec.extra.setdefault("citation_key", key)
    return rec
