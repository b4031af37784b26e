"""Drive a model backend with rendered prompts and post-process JSON QA output."""
from __future__ import annotations

import hashlib
import json
import os
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol

import requests

from .errors import (
    SkippedNoAbstract, BackendError, NoJsonFound, MissingKeys, NonStringValue,
    EmptyAfterCleaning, OverLength, ValidationError,
)
from .qa import validate_qa, append_qa, utc_now_iso
from .records import PaperRecord
from .templates import PromptTemplate, render

Clock = Callable[[], str]


@dataclass
class GenParams:
    max_tokens: int = 512
    temperature: float = 0.0
    stop: list[str] | None = None

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


class ModelBackend(Protocol):
    def complete(self, prompt: str, params: GenParams) -> str: ...
    def name(self) -> str: ...


@dataclass
class RawGeneration:
    record_id: str
    prompt: str
    output_text: str
    backend_name: str
    created_at: str


class MockBackend:
    """Deterministic backend for tests and dry runs.

    Without a script, each completion is a valid QA JSON object derived
    from the prompt. A script is a list of step names consumed in order:
    "ok" (default behavior), "garbage" (non-JSON prose), "missing_key"
    (JSON without "answer"), "non_string" (non-string answer), or any
    literal string prefixed with "raw:".
    """

    def __init__(self, script: list[str] | None = None):
        self.script = list(script) if script else []
        self._step = 0

    def name(self) -> str:
        return "mock"

    def _default(self, prompt: str) -> str:
        words = prompt.split()
        topic = " ".join(words[-5:]) if words else "nothing"
        digest = hashlib.sha1(prompt.encode("utf-8")).hexdigest()[:8]
        return json.dumps({"question": f"Q about {topic}",
                           "answer": f"A from {digest}"})

    def complete(self, prompt: str, params: GenParams) -> str:
        step = "ok"
        if self._step < len(self.script):
            step = self.script[self._step]
            self._step += 1
        if step == "ok":
            return self._default(prompt)
        if step == "garbage":
            return "The study is interesting and no JSON follows here."
        if step == "missing_key":
            return json.dumps({"question": "Q only"})
        if step == "non_string":
            return json.dumps({"question": "Q", "answer": 42})
        if step == "error":
            raise BackendError("scripted backend failure")
        if step.startswith("raw:"):
            return step[len("raw:"):]
        raise ValueError(f"unknown mock script step {step!r}")


class HttpBackend:
    """Completion-style HTTP backend.

    POSTs ``{"model", "prompt", "max_tokens", "temperature", "stop"?}`` to the
    endpoint; the generated text is read from `text_path` in the response
    (default ``choices[0].text``). Transport errors and 5xx responses are
    retried up to 3 attempts with doubling backoff; 4xx are not retried.
    """

    def __init__(self, url: str, model: str = "", text_path: str = "choices[0].text",
                 token_env: str = "QAFORGE_BACKEND_TOKEN",
                 max_attempts: int = 3, backoff_s: float = 0.5,
                 sleep: Callable[[float], None] = time.sleep):
        self.url = url
        self.model = model
        self.text_path = text_path
        self.token_env = token_env
        self.max_attempts = max_attempts
        self.backoff_s = backoff_s
        self.sleep = sleep

    def name(self) -> str:
        return f"http:{self.url}"

    def complete(self, prompt: str, params: GenParams) -> str:
        body = {"model": self.model, "prompt": prompt,
                "max_tokens": params.max_tokens, "temperature": params.temperature}
        if params.stop:
            body["stop"] = params.stop
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        delay = self.backoff_s
        last_error = ""
        for attempt in range(self.max_attempts):
            try:
                resp = requests.post(self.url, json=body, headers=headers, timeout=60)
            except requests.RequestException as e:
                last_error = str(e)
            else:
                if resp.status_code < 400:
                    return self._extract_text(resp)
                last_error = f"HTTP {resp.status_code}"
                if resp.status_code < 500:
                    raise BackendError(last_error)
            if attempt + 1 < self.max_attempts:
                self.sleep(delay)
                delay *= 2
        raise BackendError(f"gave up after {self.max_attempts} attempts: {last_error}")

    def _extract_text(self, resp) -> str:
        try:
            data = resp.json()
        except ValueError as e:
            raise BackendError(f"non-JSON response: {e}") from e
        node = data
        for part in re.findall(r"[A-Za-z_]\w*|\[\d+\]", self.text_path):
            try:
                if part.startswith("["):
                    node = node[int(part[1:-1])]
                else:
                    node = node[part]
            except (KeyError, IndexError, TypeError) as e:
                raise BackendError(f"response missing {self.text_path!r}") from e
        if not isinstance(node, str):
            raise BackendError(f"value at {self.text_path!r} is not a string")
        return node


def generate_for_record(record: PaperRecord, template: PromptTemplate,
                        backend: ModelBackend, params: GenParams,
                        clock: Clock = utc_now_iso) -> RawGeneration:
    if not record.abstract:
        raise SkippedNoAbstract(record.record_id)
    prompt = render(template, {"title": record.title, "abstract": record.abstract})
    output = backend.complete(prompt, params)
    return RawGeneration(record_id=record.record_id, prompt=prompt,
                         output_text=output, backend_name=backend.name(),
                         created_at=clock())


_FENCE = re.compile(r"```[A-Za-z0-9_+-]*\n?(.*?)```", re.DOTALL)


def extract_qa_json(output_text: str) -> dict[str, str]:
    """Find the first brace-balanced JSON object with string "question" and
    "answer" values. Fenced code blocks are unwrapped before scanning."""
    text = _FENCE.sub(lambda m: m.group(1), output_text)
    first_error = None
    found_object = False
    for start, end in _balanced_objects(text):
        try:
            obj = json.loads(text[start:end])
        except json.JSONDecodeError:
            continue
        if not isinstance(obj, dict):
            continue
        found_object = True
        missing = [k for k in ("question", "answer") if k not in obj]
        if missing:
            if first_error is None:
                first_error = MissingKeys(*missing)
            continue
        if not all(isinstance(obj[k], str) for k in ("question", "answer")):
            if first_error is None:
                first_error = NonStringValue("question/answer values must be strings")
            continue
        return {"question": obj["question"], "answer": obj["answer"]}
    if found_object and first_error is not None:
        raise first_error
    raise NoJsonFound("no JSON object found in model output")


def _balanced_objects(text: str):
    """Yield (start, end) spans of top-level brace-balanced regions, in order."""
    i = 0
    n = len(text)
    while i < n:
        if text[i] != "{":
            i += 1
            continue
        depth = 0
        in_string = False
        escaped = False
        j = i
        end = None
        while j < n:
            c = text[j]
            if in_string:
                if escaped:
                    escaped = False
                elif c == "\\":
                    escaped = True
                elif c == '"':
                    in_string = False
            elif c == '"':
                in_string = True
            elif c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
                if depth == 0:
                    end = j + 1
                    break
            j += 1
        if end is None:
            i += 1
            continue
        yield i, end
        # also consider nested objects in case the outer span fails to parse
        i += 1


def clean_qa(question: str, answer: str, question_limit: int = 500,
             answer_limit: int = 2000) -> tuple[str, str]:
    """Trim, collapse internal whitespace, strip one pair of wrapping quotes,
    and reject (never truncate) over-limit fields."""
    def clean_one(value: str, name: str, limit: int) -> str:
        value = re.sub(r"\s+", " ", value).strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1].strip()
        if not value:
            raise EmptyAfterCleaning(name)
        if len(value) > limit:
            raise OverLength(name, len(value), limit)
        return value

    return clean_one(question, "question", question_limit), \
        clean_one(answer, "answer", answer_limit)


@dataclass
class GenerationReport:
    attempted: int = 0
    succeeded: int = 0
    skipped_no_abstract: int = 0
    extraction_failed: int = 0
    cleaning_failed: int = 0
    backend_failed: int = 0
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"attempted": self.attempted, "succeeded": self.succeeded,
                "skipped_no_abstract": self.skipped_no_abstract,
                "extraction_failed": self.extraction_failed,
                "cleaning_failed": self.cleaning_failed,
                "backend_failed": self.backend_failed,
                "errors": self.errors}


def run_generation(records: list[PaperRecord], template: PromptTemplate,
                   backend: ModelBackend, params: GenParams,
                   qa_out_path, clock: Clock = utc_now_iso) -> GenerationReport:
    """Generate, extract, clean, validate, and append one QA pair per record.

    Per-record failures are tallied in the report and never abort the batch;
    only an IoError on append aborts."""
    report = GenerationReport()
    for record in records:
        report.attempted += 1
        try:
            gen = generate_for_record(record, template, backend, params, clock)
        except SkippedNoAbstract:
            report.skipped_no_abstract += 1
            report.errors.append(f"{record.record_id}: no abstract")
            continue
        except BackendError as e:
            report.backend_failed += 1
            report.errors.append(f"{record.record_id}: {e}")
            continue
        try:
            raw = extract_qa_json(gen.output_text)
        except (NoJsonFound, MissingKeys, NonStringValue) as e:
            report.extraction_failed += 1
            report.errors.append(f"{record.record_id}: {e}")
            continue
        try:
            question, answer = clean_qa(raw["question"], raw["answer"])
            pair = validate_qa({"question": question, "answer": answer,
                                "pmid": record.pmid, "doi": record.doi,
                                "category": "knowledge", "origin": "model"},
                               now=clock())
        except (EmptyAfterCleaning, OverLength, ValidationError) as e:
            report.cleaning_failed += 1
            report.errors.append(f"{record.record_id}: {e}")
            continue
        append_qa(qa_out_path, pair)
        report.succeeded += 1
    return report
