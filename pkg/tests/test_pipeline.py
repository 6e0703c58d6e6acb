from __future__ import annotations

import pytest

from livemark.fetcher import PageCache
from livemark.pipeline import annotate_page, page_stats
from livemark.store import MarkStore
from livemark.urls import file_url

from helpers import visible_text_of


@pytest.fixture
def env(tmp_path):
    store = MarkStore(tmp_path / "store.json", clock=lambda: "2024-01-01T00:00:00Z")
    cache = PageCache(tmp_path / "cache")
    page = tmp_path / "page.html"
    page.write_text(
        "<h1>Implicit feedback</h1><p>Search engines use implicit feedback "
        "from marking behaviour to personalize results.</p>",
        encoding="utf-8",
    )
    return store, cache, file_url(page), page


def test_first_visit_then_revisit_with_mark(env):
    store, cache, url, _ = env
    store.put_profile("u1", ["marking", "implicit feedback"])

    first = annotate_page(store, cache, "u1", url)
    assert first.first_visit
    assert first.stats.explicit_count == 0
    assert first.stats.implicit_count == 2
    assert "lm-implicit" in first.html
    assert "lm-explicit" not in first.html

    store.add_mark("u1", url, "personalize results", "behaviour to ", ".")
    second = annotate_page(store, cache, "u1", url)
    assert not second.first_visit
    assert second.stats.explicit_count == 1
    assert 'class="lm-explicit"' in second.html


def test_visit_recorded_even_with_no_marks(env):
    store, cache, url, _ = env
    result = annotate_page(store, cache, "nobody", url)
    assert result.first_visit
    assert result.stats.as_dict() == {"implicit": 0, "explicit": 0, "orphaned": 0}
    assert not annotate_page(store, cache, "nobody", url).first_visit


def test_first_visit_is_per_user(env):
    store, cache, url, _ = env
    annotate_page(store, cache, "u1", url)
    assert annotate_page(store, cache, "u2", url).first_visit


def test_visible_text_preserved_through_pipeline(env):
    store, cache, url, _ = env
    store.put_profile("u1", ["feedback", "search engines"])
    store.add_mark("u1", url, "marking behaviour")
    result = annotate_page(store, cache, "u1", url)
    from livemark.content import parse_page

    source = parse_page(url, cache.fetch(url, "offline").body)
    assert visible_text_of(result.html) == source.visible_text


def test_orphaned_mark_reported(env):
    store, cache, url, page = env
    store.add_mark("u1", url, "text that never existed")
    result = annotate_page(store, cache, "u1", url)
    assert result.stats.orphaned_count == 1
    assert result.stats.explicit_count == 0


def test_page_stats_matches_annotate_and_records_no_visit(env):
    store, cache, url, _ = env
    store.put_profile("u1", ["marking", "results"])
    store.add_mark("u1", url, "implicit feedback", "", " from")
    annotated = annotate_page(store, cache, "u1", url)

    stats = page_stats(store, cache, "u1", url)
    assert stats == annotated.stats
    assert not store.has_visited("u2", url)
    page_stats(store, cache, "u2", url)
    assert not store.has_visited("u2", url)


def test_page_stats_explicit_counts_only_resolved(env):
    store, cache, url, _ = env
    store.add_mark("u1", url, "implicit feedback")   # occurs twice, context empty -> earliest
    store.add_mark("u1", url, "never on this page")
    stats = page_stats(store, cache, "u1", url, "prefer-cache")
    assert stats.explicit_count == 1
    assert stats.orphaned_count == 1
