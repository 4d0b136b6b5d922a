"""JSON-over-HTTP service for the labeling console.

Local-use tool: there is NO authentication. Bind to localhost unless you
know exactly who can reach the port. Run one service process per state
directory; it is the single label writer while it is up.
"""

from dataclasses import asdict
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .agreement import DEFAULT_RUBRIC, LEXICON_CLASSES
from .errors import DataError
from .pipeline import (
    completed_rounds,
    cycle_report,
    irr_view,
    latest_round,
    load_round_artifact,
    queue_view,
)
from .projection import import_projection
from .store import BASES, LABEL_VALUES, CorpusStore, LabelRecord

PROJECTIONS_DIR = "projections"


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse({"code": code, "message": message}, status_code=status)


def projection_csv_path(state_dir: Path, round_id: int, method: str) -> Path:
    return state_dir / PROJECTIONS_DIR / f"round_{round_id:04d}_{method}.csv"


def find_latest_projection(state_dir: Path) -> Optional[tuple[int, str, Path]]:
    """Newest projection by (round, mtime); None when `project` never ran."""
    base = state_dir / PROJECTIONS_DIR
    if not base.is_dir():
        return None
    best = None
    for path in base.glob("round_*_*.csv"):
        parts = path.stem.split("_")
        try:
            round_id = int(parts[1])
        except (IndexError, ValueError):
            continue
        method = "_".join(parts[2:])
        key = (round_id, path.stat().st_mtime)
        if best is None or key > best[0]:
            best = (key, round_id, method, path)
    if best is None:
        return None
    return best[1], best[2], best[3]


def build_app(state_dir: str | Path, static_dir: Optional[str | Path] = None) -> FastAPI:
    state_dir = Path(state_dir)
    store = CorpusStore(state_dir)
    app = FastAPI(title="labelcycle", docs_url=None, redoc_url=None)

    @app.exception_handler(DataError)
    async def _data_error(request: Request, exc: DataError):
        status = 404 if str(exc).startswith("unknown post_id") else 400
        return _error(status, "data_error", str(exc))

    @app.get("/api/clusters")
    def clusters():
        current = latest_round(state_dir)
        if current is None:
            return _error(404, "no_rounds", "no completed rounds; run `labelcycle cycle`")
        assignment = load_round_artifact(state_dir, current, "assignment.json")
        prop = load_round_artifact(state_dir, current, "propagation.json")["report"]
        return {
            "round": current,
            "k": assignment["k"],
            "wgss": assignment["wgss"],
            "sizes": assignment["sizes"],
            "clusters": prop["clusters"],
        }

    @app.get("/api/queue")
    def queue(limit: int = 50, basis: str = "post_only"):
        if basis not in BASES:
            return _error(400, "bad_request", f"invalid basis {basis!r}")
        if limit < 1:
            return _error(400, "bad_request", "limit must be at least 1")
        return {"round": latest_round(state_dir), "items": queue_view(store, basis, limit)}

    @app.post("/api/labels")
    async def post_label(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "bad_request", "body must be JSON")
        if not isinstance(body, dict):
            return _error(400, "bad_request", "body must be a JSON object")
        post_id = body.get("post_id")
        if not post_id or post_id not in store.posts:
            return _error(404, "not_found", f"unknown post_id {post_id!r}")
        value = body.get("value")
        if value not in LABEL_VALUES:
            return _error(400, "bad_request", f"value must be one of {sorted(LABEL_VALUES)}")
        rater = body.get("rater_id")
        if not rater or not isinstance(rater, str):
            return _error(400, "bad_request", "rater_id is required")
        basis = body.get("basis", "post_only")
        if basis not in BASES:
            return _error(400, "bad_request", f"invalid basis {basis!r}")
        round_id = body.get("round", latest_round(state_dir) or 0)
        if not isinstance(round_id, int) or round_id < 0:
            return _error(400, "bad_request", "round must be a non-negative integer")
        record = store.record_label(
            LabelRecord(
                post_id=post_id,
                value=value,
                rater_id=rater,
                basis=basis,
                source="manual",
                round=round_id,
            )
        )
        return JSONResponse(record.to_json(), status_code=201)

    @app.get("/api/labels")
    def get_labels(
        post_id: Optional[str] = None,
        basis: Optional[str] = None,
        rater_id: Optional[str] = None,
        source: Optional[str] = None,
    ):
        records = [
            r.to_json()
            for r in store.labels
            if (post_id is None or r.post_id == post_id)
            and (basis is None or r.basis == basis)
            and (rater_id is None or r.rater_id == rater_id)
            and (source is None or r.source == source)
        ]
        return {"records": records}

    @app.get("/api/irr")
    def irr(
        basis: str = "post_only",
        rater_a: Optional[str] = None,
        rater_b: Optional[str] = None,
    ):
        if basis not in BASES:
            return _error(400, "bad_request", f"invalid basis {basis!r}")
        return irr_view(store, basis, rater_a, rater_b)

    @app.get("/api/projection")
    def projection():
        found = find_latest_projection(state_dir)
        if found is None:
            return _error(
                404, "no_projection", "no projection computed; run `labelcycle project`"
            )
        round_id, method, path = found
        rows = import_projection(path.read_text(encoding="utf-8"))
        return {"round": round_id, "method": method, "points": rows}

    @app.get("/api/report")
    def report():
        if not completed_rounds(state_dir):
            return _error(404, "no_rounds", "no completed rounds; run `labelcycle cycle`")
        return cycle_report(store)

    @app.get("/api/rubric")
    def rubric():
        return {
            "rules": [asdict(rule) for rule in DEFAULT_RUBRIC.rules],
            "lexicon_classes": list(LEXICON_CLASSES),
        }

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="console")

    return app


def serve(state_dir: str | Path, host: str = "127.0.0.1", port: int = 8400,
          static_dir: Optional[str | Path] = None) -> None:
    import uvicorn

    app = build_app(state_dir, static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
