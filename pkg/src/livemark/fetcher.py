"""Page retrieval with an on-disk cache.

The cache is content-addressed: bodies live under objects/<sha256> and
index.json maps each normalized URL to its content hash, media type,
and fetch time. Revisit experiments therefore replay byte-identical
pages offline, and URLs differing only in fragment share one entry
(identity is the normalized URL).

http(s) URLs go over the network; file URLs read local bytes, so a
local fixture corpus flows through the same path as live pages.
"""

from __future__ import annotations

import hashlib
import json
import mimetypes
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable
from urllib.parse import unquote, urlsplit

import requests

from .store import write_atomic
from .urls import NormalizedUrl

CACHE_MODES = ("prefer-cache", "refresh", "offline")

_TIMEOUT_SECONDS = 30
_USER_AGENT = "livemark/0.1"


class FetchError(Exception):
    """Base for page retrieval failures."""


class FetchFailed(FetchError):
    """Network error, HTTP >= 400, or unreadable local file."""


class NotCached(FetchError):
    """Offline mode and the page has no cache entry."""


@dataclass(frozen=True)
class FetchResult:
    url: NormalizedUrl
    body: bytes
    media_type: str
    fetched_at: str
    from_cache: bool

    @property
    def is_html(self) -> bool:
        base = self.media_type.split(";", 1)[0].strip().lower()
        return base in ("text/html", "application/xhtml+xml") or not base


class PageCache:
    """Fetches pages and keeps every retrieved body on disk."""

    def __init__(self, cache_dir: str | Path, clock: Callable[[], str] | None = None) -> None:
        self._dir = Path(cache_dir)
        self._objects = self._dir / "objects"
        self._index_path = self._dir / "index.json"
        self._clock = clock or _utc_now
        self._index: dict[str, dict[str, str]] = {}
        if self._index_path.exists():
            try:
                self._index = json.loads(self._index_path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise FetchError(f"corrupt cache index {self._index_path}: {exc}") from exc

    def fetch(self, url: NormalizedUrl, cache_mode: str = "prefer-cache") -> FetchResult:
        """Retrieve page bytes according to the cache mode.

        prefer-cache serves the stored copy when present, otherwise
        fetches and stores; refresh always fetches and overwrites;
        offline never touches the source and raises NotCached on a miss.
        """
        if cache_mode not in CACHE_MODES:
            raise ValueError(f"unknown cache mode {cache_mode!r}")
        if cache_mode != "refresh":
            cached = self._read_cached(url)
            if cached is not None:
                return cached
            if cache_mode == "offline":
                raise NotCached(f"no cached copy of {url}")
        body, media_type = _retrieve(url)
        fetched_at = self._clock()
        self._store(url, body, media_type, fetched_at)
        return FetchResult(url, body, media_type, fetched_at, from_cache=False)

    def cached(self, url: NormalizedUrl) -> bool:
        return url in self._index

    def seed(self, url: NormalizedUrl, body: bytes, media_type: str = "text/html") -> None:
        """Plant page bytes directly, as if fetched (corpus ingestion)."""
        self._store(url, body, media_type, self._clock())

    def _read_cached(self, url: NormalizedUrl) -> FetchResult | None:
        entry = self._index.get(url)
        if entry is None:
            return None
        blob = self._objects / entry["content_hash"]
        try:
            body = blob.read_bytes()
        except OSError as exc:
            raise FetchError(f"cache object missing for {url}: {exc}") from exc
        return FetchResult(
            url, body, entry["media_type"], entry["fetched_at"], from_cache=True
        )

    def _store(self, url: NormalizedUrl, body: bytes, media_type: str, fetched_at: str) -> None:
        digest = hashlib.sha256(body).hexdigest()
        self._objects.mkdir(parents=True, exist_ok=True)
        blob = self._objects / digest
        if not blob.exists():
            write_atomic(blob, body)
        self._index[url] = {
            "content_hash": digest,
            "media_type": media_type,
            "fetched_at": fetched_at,
        }
        payload = json.dumps(self._index, ensure_ascii=False, indent=2) + "\n"
        write_atomic(self._index_path, payload.encode("utf-8"))


def _retrieve(url: NormalizedUrl) -> tuple[bytes, str]:
    scheme = urlsplit(url).scheme
    if scheme == "file":
        return _read_file(url)
    try:
        response = requests.get(
            url, timeout=_TIMEOUT_SECONDS, headers={"User-Agent": _USER_AGENT}
        )
    except requests.RequestException as exc:
        raise FetchFailed(f"fetch failed for {url}: {exc}") from exc
    if response.status_code >= 400:
        raise FetchFailed(f"HTTP {response.status_code} for {url}")
    media_type = response.headers.get("Content-Type") or "text/html"
    return response.content, media_type


def _read_file(url: NormalizedUrl) -> tuple[bytes, str]:
    path = Path(unquote(urlsplit(url).path))
    try:
        body = path.read_bytes()
    except OSError as exc:
        raise FetchFailed(f"cannot read {path}: {exc}") from exc
    media_type = mimetypes.guess_type(str(path))[0] or "text/html"
    return body, media_type


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
