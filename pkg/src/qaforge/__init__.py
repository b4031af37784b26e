"""qaforge: turn research-paper references into curated, validated QA datasets."""

__version__ = "0.1.0"
