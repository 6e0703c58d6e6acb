"""File-backed persistence for profiles, explicit marks, and visit records.

A single JSON document, rewritten atomically (temp file + rename +
fsync) on every mutation, so a crash at any point leaves either the old
or the new state on disk, never a torn file. Mutations are serialized
by an in-process lock; readers see consistent snapshots.
"""

from __future__ import annotations

import json
import os
import re
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

from .engine import CONTEXT_LENGTH, ExplicitMark, Profile
from .urls import NormalizedUrl

STORE_VERSION = 1

_MARK_ID = re.compile(r"^m-(\d+)$")


class StoreError(Exception):
    """The store file is unreadable, unwritable, or corrupt."""


class EmptyQuote(ValueError):
    """An explicit mark must quote at least one character."""


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class MarkStore:
    """Durable store keyed by user and normalized URL.

    Single-writer contract: all mutating operations are serialized
    internally and persisted before returning. A clock callable can be
    injected for deterministic timestamps.
    """

    def __init__(self, path: str | Path, clock: Callable[[], str] | None = None) -> None:
        self._path = Path(path)
        self._clock = clock or _utc_now
        self._lock = threading.Lock()
        self._profiles: dict[str, list[str]] = {}  # user -> folded keyword strings
        self._marks: list[dict[str, str]] = []
        self._visits: dict[tuple[str, str], str] = {}  # (user, url) -> first_seen_at
        self._next_mark = 1
        self._load()

    # -- profiles ------------------------------------------------------

    def put_profile(self, user_id: str, keywords: Iterable[str]) -> Profile:
        """Replace the user's keyword set; input is folded and deduplicated."""
        profile = Profile.from_raw(user_id, keywords)
        with self._lock:
            self._profiles[user_id] = list(profile.keyword_strings())
            self._save()
        return profile

    def get_profile(self, user_id: str) -> Profile | None:
        with self._lock:
            stored = self._profiles.get(user_id)
            if stored is None:
                return None
            return Profile(user_id, tuple(tuple(entry.split(" ")) for entry in stored))

    # -- explicit marks --------------------------------------------------

    def add_mark(
        self,
        user_id: str,
        url: NormalizedUrl,
        quote: str,
        prefix: str = "",
        suffix: str = "",
    ) -> ExplicitMark:
        """Persist a new mark and return it with its generated id."""
        if not quote:
            raise EmptyQuote("explicit mark quote must be non-empty")
        with self._lock:
            record = {
                "id": f"m-{self._next_mark:06d}",
                "user": user_id,
                "url": url,
                "quote": quote,
                "prefix": prefix[-CONTEXT_LENGTH:],
                "suffix": suffix[:CONTEXT_LENGTH],
                "created_at": self._clock(),
            }
            self._next_mark += 1
            self._marks.append(record)
            self._save()
        return _mark_from_record(record)

    def get_marks(self, user_id: str, url: NormalizedUrl) -> list[ExplicitMark]:
        """All live marks for (user, page) in creation order."""
        with self._lock:
            records = [
                record
                for record in self._marks
                if record["user"] == user_id and record["url"] == url
            ]
        records.sort(key=lambda record: record["created_at"])  # stable: ties keep insertion order
        return [_mark_from_record(record) for record in records]

    def delete_mark(self, mark_id: str) -> bool:
        with self._lock:
            for i, record in enumerate(self._marks):
                if record["id"] == mark_id:
                    del self._marks[i]
                    self._save()
                    return True
        return False

    # -- visit records -----------------------------------------------------

    def record_visit(self, user_id: str, url: NormalizedUrl) -> None:
        """Idempotent: the first call per (user, url) sets first_seen_at."""
        with self._lock:
            key = (user_id, url)
            if key not in self._visits:
                self._visits[key] = self._clock()
                self._save()

    def has_visited(self, user_id: str, url: NormalizedUrl) -> bool:
        with self._lock:
            return (user_id, url) in self._visits

    def visited_urls(self, user_id: str) -> frozenset[NormalizedUrl]:
        """The user's visit-record view, as the first-visit test consumes it."""
        with self._lock:
            return frozenset(url for user, url in self._visits if user == user_id)

    # -- serialization -----------------------------------------------------

    def _load(self) -> None:
        if not self._path.exists():
            return
        try:
            data = json.loads(self._path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StoreError(f"cannot read store {self._path}: {exc}") from exc
        if not isinstance(data, dict) or data.get("version") != STORE_VERSION:
            raise StoreError(f"unsupported store version in {self._path}")
        try:
            self._profiles = {p["user"]: list(p["keywords"]) for p in data["profiles"]}
            self._marks = [
                {
                    "id": m["id"],
                    "user": m["user"],
                    "url": m["url"],
                    "quote": m["quote"],
                    "prefix": m["prefix"],
                    "suffix": m["suffix"],
                    "created_at": m["created_at"],
                }
                for m in data["marks"]
            ]
            self._visits = {
                (v["user"], v["url"]): v["first_seen_at"] for v in data["visits"]
            }
        except (KeyError, TypeError) as exc:
            raise StoreError(f"malformed store {self._path}: {exc}") from exc
        for record in self._marks:
            match = _MARK_ID.match(record["id"])
            if match:
                self._next_mark = max(self._next_mark, int(match.group(1)) + 1)

    def _save(self) -> None:
        data = {
            "version": STORE_VERSION,
            "profiles": [
                {"user": user, "keywords": keywords}
                for user, keywords in self._profiles.items()
            ],
            "marks": self._marks,
            "visits": [
                {"user": user, "url": url, "first_seen_at": seen}
                for (user, url), seen in self._visits.items()
            ],
        }
        payload = json.dumps(data, ensure_ascii=False, indent=2) + "\n"
        try:
            write_atomic(self._path, payload.encode("utf-8"))
        except OSError as exc:
            raise StoreError(f"cannot write store {self._path}: {exc}") from exc


def write_atomic(path: Path, payload: bytes) -> None:
    """Replace-on-write: the old file survives a crash at any point."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    fd = os.open(tmp, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o644)
    try:
        os.write(fd, payload)
        os.fsync(fd)
    finally:
        os.close(fd)
    try:
        os.replace(tmp, path)
    except OSError:
        os.unlink(tmp)
        raise
    _fsync_dir(path.parent)


def _fsync_dir(directory: Path) -> None:
    try:
        fd = os.open(directory, os.O_RDONLY)
    except OSError:
        return
    try:
        os.fsync(fd)
    finally:
        os.close(fd)


def _mark_from_record(record: dict[str, str]) -> ExplicitMark:
    return ExplicitMark(
        mark_id=record["id"],
        user_id=record["user"],
        url=record["url"],
        quote=record["quote"],
        prefix=record["prefix"],
        suffix=record["suffix"],
        created_at=record["created_at"],
    )
