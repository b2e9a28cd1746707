"""JSON API over a loaded project.

Versioned payloads (schemaVersion 1) rendered by the same builders as the CLI
report. Readers always see an immutable snapshot; what-if requests compute on
a scratch copy and never touch the store.
"""
from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles

from .ingest import IngestError
from .project import Project, ProjectError


def create_app(project: Project, *, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="driftwatch", version="1")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/indicators")
    def indicators() -> dict:
        return project.indicators_payload()

    @app.get("/risk")
    def risk() -> dict:
        return project.risk_payload()

    @app.get("/baseline")
    def baseline() -> dict:
        return project.baseline_payload()

    @app.get("/derived")
    def derived() -> dict:
        return project.derived_indicators_payload()

    @app.get("/trend")
    def trend(event: str) -> dict:
        try:
            return project.trend_payload(event)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown event {event!r}") from None

    @app.get("/consistency")
    def consistency() -> dict:
        try:
            return project.consistency_payload()
        except ProjectError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None

    @app.get("/revisions")
    def revisions() -> dict:
        return project.revisions_payload()

    @app.post("/runs", status_code=201)
    async def ingest_run(request: Request) -> dict:
        try:
            doc = await request.json()
        except Exception:
            raise HTTPException(status_code=400, detail="body is not valid JSON") from None
        if not isinstance(doc, dict):
            raise HTTPException(status_code=400, detail="expected a run object")
        try:
            run = project.ingest_run_payload(doc)
        except IngestError as exc:
            status = 409 if "timestamp regression" in str(exc) else 400
            raise HTTPException(status_code=status, detail=str(exc)) from None
        return {"schemaVersion": "1", "stored": run.id, "runCount": len(project.store)}

    @app.post("/whatif")
    async def whatif(request: Request) -> dict:
        try:
            doc = await request.json()
        except Exception:
            raise HTTPException(status_code=400, detail="body is not valid JSON") from None
        if not isinstance(doc, dict):
            raise HTTPException(status_code=400, detail="expected an object body")
        overrides: dict[str, float] = {}
        for key, value in (doc.get("overrides") or {}).items():
            overrides[str(key)] = value
        if "elementId" in doc:
            overrides[str(doc["elementId"])] = doc.get("value")
        if not overrides:
            raise HTTPException(status_code=400, detail="no overrides supplied")
        for element_id, value in overrides.items():
            if not isinstance(value, (int, float)):
                raise HTTPException(status_code=400, detail=f"override {element_id!r} needs a numeric value")
        try:
            return project.risk_payload(extra_overrides=overrides)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc.args[0])) from None
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None

    @app.post("/revise")
    async def revise(request: Request) -> dict:
        body = await request.body()
        doc = {}
        if body:
            try:
                import json

                doc = json.loads(body)
            except Exception:
                raise HTTPException(status_code=400, detail="body is not valid JSON") from None
        overrides = {str(k): float(v) for k, v in (doc.get("overrides") or {}).items()}
        try:
            record = project.revise(overrides=overrides)
        except (ValueError, KeyError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return {"schemaVersion": "1", "revision": record.to_json()}

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="dashboard")

    return app
