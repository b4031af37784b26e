"""Placeholder-only template engine: `{{ identifier }}` substitution, nothing else."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import UnbalancedPlaceholder, BadIdentifier, MissingVariable

_PLACEHOLDER = re.compile(r"\{\{(.*?)\}\}", re.DOTALL)
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

BUILTIN_QA_PROMPT = """\
You are given the title and abstract of a research paper.

Title: {{ title }}
Abstract: {{ abstract }}

Write one question-answer pair about this paper. Focus on specific details \
about the study's methods or findings. Avoid generic or logic-based questions \
that could be answered without reading the abstract.

Respond with a single JSON object with exactly two keys, "question" and \
"answer", and nothing else.
"""


@dataclass
class PromptTemplate:
    name: str
    body: str
    required_vars: set[str] = field(default_factory=set)


def parse_template(name: str, body: str) -> PromptTemplate:
    """Extract placeholders; identifiers tolerate surrounding whitespace."""
    required: set[str] = set()
    pos = 0
    for m in _PLACEHOLDER.finditer(body):
        if "{{" in m.group(1):
            raise UnbalancedPlaceholder(m.start())
        ident = m.group(1).strip()
        if not _IDENT.match(ident):
            raise BadIdentifier(f"{ident!r} at byte offset {m.start()}")
        required.add(ident)
        pos = m.end()
    dangling = body.find("{{", pos)
    if dangling >= 0:
        raise UnbalancedPlaceholder(dangling)
    return PromptTemplate(name=name, body=body, required_vars=required)


def render(template: PromptTemplate, context: dict[str, str]) -> str:
    """Replace every placeholder with its context value.

    Values are substituted verbatim and never re-expanded. A missing
    identifier is an error; an empty-string value is not."""
    missing = template.required_vars - set(context)
    if missing:
        raise MissingVariable(sorted(missing)[0])

    def sub(m: re.Match) -> str:
        return context[m.group(1).strip()]

    return _PLACEHOLDER.sub(sub, template.body)


def builtin_qa_prompt() -> PromptTemplate:
    """The shipped QA-generation prompt; wording is pinned by tests."""
    return parse_template("builtin_qa", BUILTIN_QA_PROMPT)


def load_template(templates_dir: str | Path, name: str) -> PromptTemplate:
    """Load a `.tpl` file by name; "builtin_qa" resolves to the shipped prompt."""
    if name == "builtin_qa":
        return builtin_qa_prompt()
    path = Path(templates_dir) / f"{name}.tpl"
    return parse_template(name, path.read_text(encoding="utf-8"))
