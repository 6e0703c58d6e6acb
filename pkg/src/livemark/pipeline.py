"""The annotate pipeline shared by the CLI and the HTTP service.

fetch -> parse -> tokenize -> implicit marks -> stored marks -> anchor
-> render, then record the visit. Keeping this in one place is what
guarantees the CLI report and the stats endpoint can never disagree.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import engine
from .content import parse_page
from .engine import MarkedPage, MarkStats, Profile
from .fetcher import PageCache
from .store import MarkStore
from .urls import NormalizedUrl


@dataclass(frozen=True)
class AnnotateResult:
    url: NormalizedUrl
    html: str
    stats: MarkStats
    first_visit: bool  # state before this call


def build_marked_page(
    doc, profile: Profile, marks
) -> tuple[MarkedPage, engine.MarkerPair]:
    """Run the engine for one parsed page against a profile and stored marks."""
    implicit = engine.compute_implicit_marks(doc, profile)
    resolved, orphaned = engine.anchor_explicit_marks(doc, marks)
    pair = engine.MarkerPair(
        implicit=implicit, explicit=tuple(resolved), orphaned=tuple(orphaned)
    )
    return engine.render_marked_page(doc, pair), pair


def annotate_page(
    store: MarkStore,
    cache: PageCache,
    user_id: str,
    url: NormalizedUrl,
    cache_mode: str = "prefer-cache",
) -> AnnotateResult:
    """Produce the marked page for one visit and record the visit.

    first_visit reflects the store before the call; a user without a
    profile is treated as having an empty keyword set.
    """
    was_first = engine.first_visit(url, store.visited_urls(user_id))
    result = cache.fetch(url, cache_mode)
    doc = parse_page(url, result.body)
    profile = store.get_profile(user_id) or Profile(user_id, ())
    marked, _ = build_marked_page(doc, profile, store.get_marks(user_id, url))
    store.record_visit(user_id, url)
    return AnnotateResult(
        url=url, html=marked.html, stats=marked.stats, first_visit=was_first
    )


def page_stats(
    store: MarkStore,
    cache: PageCache,
    user_id: str,
    url: NormalizedUrl,
    cache_mode: str = "offline",
) -> MarkStats:
    """Recompute a page's mark counts without recording a visit (reporting path)."""
    result = cache.fetch(url, cache_mode)
    doc = parse_page(url, result.body)
    profile = store.get_profile(user_id) or Profile(user_id, ())
    marked, _ = build_marked_page(doc, profile, store.get_marks(user_id, url))
    return marked.stats
