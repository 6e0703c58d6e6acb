"""Two-tier personalized web page marking.

Pages are annotated in two tiers: implicit marks computed by
intersecting the page's terms with a user's profile keywords, and
explicit marks the user made on earlier visits, persisted as quote
selectors and re-anchored on the current page text. The marked page
carries both tiers as <mark> wrappers with distinct classes so a
revisit shows at a glance what mattered before.
"""

from .content import PageDocument, TextRun, Token, parse_page, tokenize
from .engine import (
    ExplicitMark,
    ImplicitMarkSet,
    MarkedPage,
    MarkerPair,
    MarkStats,
    Occurrence,
    Profile,
    ResolvedAnchor,
    anchor_explicit_marks,
    compute_implicit_marks,
    count_marks,
    first_visit,
    render_marked_page,
)
from .fetcher import FetchFailed, FetchResult, NotCached, PageCache
from .matching import KeywordAutomaton
from .pipeline import AnnotateResult, annotate_page, page_stats
from .store import EmptyQuote, MarkStore, StoreError
from .urls import MalformedUrl, file_url, normalize_any, normalize_url, parse_source

__all__ = [
    "AnnotateResult",
    "EmptyQuote",
    "ExplicitMark",
    "FetchFailed",
    "FetchResult",
    "ImplicitMarkSet",
    "KeywordAutomaton",
    "MalformedUrl",
    "MarkStats",
    "MarkStore",
    "MarkedPage",
    "MarkerPair",
    "NotCached",
    "Occurrence",
    "PageCache",
    "PageDocument",
    "Profile",
    "ResolvedAnchor",
    "StoreError",
    "TextRun",
    "Token",
    "annotate_page",
    "anchor_explicit_marks",
    "compute_implicit_marks",
    "count_marks",
    "file_url",
    "first_visit",
    "normalize_any",
    "normalize_url",
    "page_stats",
    "parse_page",
    "parse_source",
    "render_marked_page",
    "tokenize",
]
