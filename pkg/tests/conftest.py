from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import pytest

from livemark.fetcher import PageCache
from livemark.store import MarkStore
from livemark.urls import file_url

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
PAGES_DIR = FIXTURES / "pages"


@dataclass
class Corpus:
    """The seeded ten-page, three-user experiment state."""

    users: list[str]
    page_names: list[str]
    page_urls: list[str]
    store_path: Path
    cache_dir: Path

    def url_of(self, page_name: str) -> str:
        return self.page_urls[self.page_names.index(page_name)]


def seed_corpus(root: Path) -> Corpus:
    """Load the fixture corpus into a fresh store and cache under root."""
    profiles = json.loads((FIXTURES / "profiles.json").read_text(encoding="utf-8"))
    mark_specs = json.loads((FIXTURES / "marks.json").read_text(encoding="utf-8"))
    page_names = sorted(p.name for p in PAGES_DIR.glob("*.html"))
    page_urls = [file_url(PAGES_DIR / name) for name in page_names]

    store_path = root / "store.json"
    cache_dir = root / "cache"
    tick = iter(range(1, 1000))
    store = MarkStore(store_path, clock=lambda: f"2024-01-01T00:00:{next(tick):02d}Z")
    cache = PageCache(cache_dir, clock=lambda: "2024-01-01T00:00:00Z")

    for user, keywords in profiles.items():
        store.put_profile(user, keywords)
    for name, url in zip(page_names, page_urls):
        cache.seed(url, (PAGES_DIR / name).read_bytes())
    for spec in mark_specs:
        store.add_mark(
            spec["user"],
            file_url(PAGES_DIR / spec["page"]),
            spec["quote"],
            spec["prefix"],
            spec["suffix"],
        )
    return Corpus(
        users=list(profiles),
        page_names=page_names,
        page_urls=page_urls,
        store_path=store_path,
        cache_dir=cache_dir,
    )


@pytest.fixture
def corpus(tmp_path) -> Corpus:
    return seed_corpus(tmp_path)
