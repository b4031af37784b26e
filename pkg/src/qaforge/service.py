"""HTTP service for QA submission, live statistics, and paper-record lookup."""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import ValidationError, IoError
from .qa import validate_qa, append_qa, load_qa_store, stats, QAPair
from .records import RecordStore, PaperRecord, dedup, export_store, load_store_any


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    qa_file: str = "qa_data.jsonl"
    records_file: str | None = None
    static_dir: str | None = None

    def __post_init__(self):
        if not (1 <= self.port <= 65535):
            raise ValueError(f"port {self.port} out of range")
        parent = Path(self.qa_file).resolve().parent
        if not parent.is_dir():
            raise ValueError(f"qa_file parent directory {parent} does not exist")


def _error(status: int, code: str, detail: str = "") -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": code, "detail": detail})


class _State:
    """In-memory QA list and paper store; all mutations go through the lock
    (single-writer discipline over the JSONL file and the counters)."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.lock = threading.Lock()
        self.pairs: list[QAPair] = load_qa_store(config.qa_file)[0]
        self.store: RecordStore | None = None
        if config.records_file:
            self.store = load_store_any(config.records_file)

    def submit(self, pair: QAPair) -> None:
        with self.lock:
            append_qa(self.config.qa_file, pair)
            self.pairs.append(pair)

    def bulk_papers(self, incoming: list[PaperRecord]) -> dict[str, int]:
        with self.lock:
            assert self.store is not None
            before = len(self.store)
            merged_store, warnings = dedup(self.store.records + incoming)
            self.store = merged_store
            path = Path(self.config.records_file)
            fmt = "yaml" if path.suffix.lower() in (".yaml", ".yml") else "jsonl"
            export_store(merged_store, fmt, path)
            return {"inserted": len(merged_store) - before, "merged": len(warnings)}


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="qaforge curation service")
    state = _State(config)
    app.state.qaforge = state

    @app.post("/api/qa")
    async def submit_qa(request: Request):
        raw = await request.body()
        try:
            candidate = json.loads(raw)
        except json.JSONDecodeError as e:
            return _error(400, "MalformedBody", str(e))
        if not isinstance(candidate, dict):
            return _error(400, "MalformedBody", "body must be a JSON object")
        try:
            pair = validate_qa(candidate)
        except ValidationError as e:
            return _error(400, e.code, str(e))
        try:
            state.submit(pair)
        except IoError as e:
            return _error(500, "IoError", str(e))
        return JSONResponse(status_code=201, content=pair.to_dict())

    @app.get("/api/stats")
    async def get_stats():
        with state.lock:
            return stats(state.pairs).to_dict()

    @app.get("/api/qa")
    async def list_qa(category: str | None = None, offset: int = 0,
                      limit: int | None = None):
        if offset < 0 or (limit is not None and limit < 0):
            return _error(400, "BadPagination", "offset and limit must be >= 0")
        with state.lock:
            pairs = list(state.pairs)
        if category is not None:
            pairs = [p for p in pairs if p.category == category]
        end = offset + limit if limit is not None else None
        return [p.to_dict() for p in pairs[offset:end]]

    @app.get("/api/papers")
    async def get_paper(doi: str | None = None, pmid: str | None = None):
        if state.store is None:
            return _error(409, "NoRecordsConfigured",
                          "service started without --records")
        record = state.store.lookup(doi=doi or "", pmid=pmid or "")
        if record is None:
            return _error(404, "NotFound", "no record for the given key")
        return record.to_dict()

    @app.post("/api/papers/bulk")
    async def bulk_papers(request: Request):
        if state.store is None:
            return _error(409, "NoRecordsConfigured",
                          "service started without --records")
        raw = await request.body()
        try:
            body = json.loads(raw)
        except json.JSONDecodeError as e:
            return _error(400, "MalformedBody", str(e))
        if not isinstance(body, list):
            return _error(400, "MalformedBody", "body must be a JSON list of records")
        try:
            incoming = [PaperRecord.from_dict(d) for d in body]
        except (TypeError, AttributeError) as e:
            return _error(400, "MalformedBody", f"bad record: {e}")
        return state.bulk_papers(incoming)

    if config.static_dir:
        app.mount("/", StaticFiles(directory=config.static_dir, html=True),
                  name="static")

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port)
