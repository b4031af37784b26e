from __future__ import annotations

import random
from pathlib import Path

import pytest

from qaforge.records import PaperRecord

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def random_record(rng: random.Random, i: int) -> PaperRecord:
    """A valid record with a unique DOI/PMID, for round-trip style tests."""
    has_doi = rng.random() < 0.8
    has_pmid = rng.random() < 0.7
    return PaperRecord(
        title=f"Study {i} of {rng.choice(['telomeres', 'diet', 'exposure'])}",
        doi=f"10.{rng.randint(1000, 9999)}/t{i}" if has_doi else "",
        pmid=str(10000000 + i) if has_pmid or not has_doi else "",
        authors=[f"Author {j}" for j in range(rng.randint(0, 4))],
        journal=rng.choice(["J One", "J Two", ""]),
        pub_date=rng.choice(["2023 Jan", "2024", ""]),
        abstract=" ".join(f"word{k}" for k in range(rng.randint(0, 40))),
        keywords=[f"kw{j}" for j in range(rng.randint(0, 3))],
        source_format=rng.choice(["bibtex", "nbib"]),
        extra={"note": f"n{i}"} if rng.random() < 0.3 else {},
    )


def random_store_records(seed: int, n: int | None = None) -> list[PaperRecord]:
    rng = random.Random(seed)
    count = n if n is not None else rng.randint(0, 12)
    return [random_record(rng, i) for i in range(count)]
