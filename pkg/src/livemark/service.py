"""HTTP facade over the annotate pipeline and the store.

JSON under /api; annotated HTML travels as data inside JSON responses,
never as a navigable page. Errors are {"error": message} with the
matching status code. When a UI directory is configured its static
files are served at the root.
"""

from __future__ import annotations

import os
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .fetcher import CACHE_MODES, FetchFailed, NotCached, PageCache
from .pipeline import annotate_page, page_stats
from .store import EmptyQuote, MarkStore
from .urls import MalformedUrl, normalize_any

DEFAULT_STORE = "store.json"
DEFAULT_CACHE = "page-cache"


class MarkIn(BaseModel):
    user: str
    url: str
    quote: str
    prefix: str = ""
    suffix: str = ""


class ProfileIn(BaseModel):
    keywords: list[str]


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=status)


def create_app(
    store_path: str | os.PathLike[str] = DEFAULT_STORE,
    cache_dir: str | os.PathLike[str] = DEFAULT_CACHE,
    ui_dir: str | os.PathLike[str] | None = None,
) -> FastAPI:
    store = MarkStore(store_path)
    page_cache = PageCache(cache_dir)
    app = FastAPI(title="livemark")

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return _error(400, str(exc.errors()[0].get("msg", "invalid request")))

    @app.get("/api/annotate")
    def annotate(url: str, user: str = "", cache: str = "prefer-cache"):
        mode = cache
        if mode not in CACHE_MODES:
            return _error(400, f"unknown cache mode {mode!r}")
        try:
            page_url = normalize_any(url)
        except MalformedUrl as exc:
            return _error(400, str(exc))
        try:
            result = annotate_page(store, page_cache, user, page_url, mode)
        except NotCached as exc:
            return _error(404, str(exc))
        except FetchFailed as exc:
            return _error(502, str(exc))
        return {
            "url": result.url,
            "html": result.html,
            "stats": result.stats.as_dict(),
            "first_visit": result.first_visit,
        }

    @app.post("/api/marks", status_code=201)
    def add_mark(mark: MarkIn):
        if not mark.quote:
            return _error(400, "quote must be non-empty")
        try:
            page_url = normalize_any(mark.url)
        except MalformedUrl as exc:
            return _error(400, str(exc))
        try:
            created = store.add_mark(mark.user, page_url, mark.quote, mark.prefix, mark.suffix)
        except EmptyQuote as exc:
            return _error(400, str(exc))
        return {"id": created.mark_id}

    @app.get("/api/marks")
    def list_marks(user: str, url: str):
        try:
            page_url = normalize_any(url)
        except MalformedUrl as exc:
            return _error(400, str(exc))
        return [
            {
                "id": m.mark_id,
                "user": m.user_id,
                "url": m.url,
                "quote": m.quote,
                "prefix": m.prefix,
                "suffix": m.suffix,
                "created_at": m.created_at,
            }
            for m in store.get_marks(user, page_url)
        ]

    @app.delete("/api/marks/{mark_id}")
    def delete_mark(mark_id: str):
        if store.delete_mark(mark_id):
            return Response(status_code=204)
        return _error(404, f"no mark {mark_id}")

    @app.get("/api/profiles/{user}")
    def get_profile(user: str):
        profile = store.get_profile(user)
        if profile is None:
            return _error(404, f"no profile for {user}")
        return {"keywords": list(profile.keyword_strings())}

    @app.put("/api/profiles/{user}")
    def put_profile(user: str, body: ProfileIn):
        profile = store.put_profile(user, body.keywords)
        return {"keywords": list(profile.keyword_strings())}

    @app.get("/api/stats")
    def stats(user: str, urls: str = ""):
        rows = []
        for raw in (u for u in urls.split(",") if u):
            try:
                page_url = normalize_any(raw)
            except MalformedUrl as exc:
                rows.append({"url": raw, "error": str(exc)})
                continue
            try:
                page = page_stats(store, page_cache, user, page_url, "offline")
            except NotCached:
                rows.append({"url": page_url, "error": "not cached"})
                continue
            rows.append(
                {
                    "url": page_url,
                    "implicit": page.implicit_count,
                    "explicit": page.explicit_count,
                }
            )
        return rows

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
