"""Two-tier marking engine.

Implicit marks are the intersection of a page's folded token stream with
the user's profile keywords (phrases match contiguous token windows).
Explicit marks are user-selected quotes re-anchored on the current page
text by exact search plus prefix/suffix context disambiguation. Both
tiers are rendered into the page as flat, non-overlapping <mark>
wrappers; where ranges collide they are split and explicit wins the
shared characters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from html import escape
from typing import Collection, Iterable, Sequence

from .content import PageDocument, keyword_entry
from .matching import KeywordAutomaton, Pattern
from .urls import NormalizedUrl

CONTEXT_LENGTH = 32  # code units of prefix/suffix kept around a quote

IMPLICIT_CLASS = "lm-implicit"
EXPLICIT_CLASS = "lm-explicit"


@dataclass(frozen=True)
class Profile:
    """A user's interest keywords, folded and deduplicated."""

    user_id: str
    keywords: tuple[Pattern, ...]

    @classmethod
    def from_raw(cls, user_id: str, raw_keywords: Iterable[str]) -> Profile:
        """Fold, tokenize, deduplicate; empty entries are dropped."""
        entries: dict[Pattern, None] = {}
        for raw in raw_keywords:
            entry = keyword_entry(raw)
            if entry:
                entries.setdefault(entry, None)
        return cls(user_id, tuple(entries))

    def keyword_strings(self) -> tuple[str, ...]:
        """Entries as stored/displayed: folded tokens joined by single spaces."""
        return tuple(" ".join(entry) for entry in self.keywords)


@dataclass(frozen=True, slots=True)
class Occurrence:
    """One keyword match: token-index span, end exclusive."""

    term: Pattern
    start_token: int
    end_token: int


@dataclass(frozen=True)
class ImplicitMarkSet:
    """All profile-keyword matches found on a page."""

    matched_terms: frozenset[Pattern]
    occurrences: tuple[Occurrence, ...]


@dataclass(frozen=True)
class ExplicitMark:
    """A persisted user marking: quote plus creation-time context."""

    mark_id: str
    user_id: str
    url: NormalizedUrl
    quote: str
    prefix: str
    suffix: str
    created_at: str


@dataclass(frozen=True, slots=True)
class ResolvedAnchor:
    """An explicit mark located in the current page's text runs."""

    mark_id: str
    start_run: int
    start_offset: int
    end_run: int
    end_offset: int


@dataclass(frozen=True)
class MarkerPair:
    """The marks to render: computed implicit set plus resolved explicit anchors."""

    implicit: ImplicitMarkSet
    explicit: tuple[ResolvedAnchor, ...] = ()
    orphaned: tuple[str, ...] = ()  # mark ids whose quotes vanished from the page


@dataclass(frozen=True)
class MarkStats:
    implicit_count: int  # distinct matched keyword entries
    explicit_count: int  # resolved explicit marks
    orphaned_count: int

    def as_dict(self) -> dict[str, int]:
        return {
            "implicit": self.implicit_count,
            "explicit": self.explicit_count,
            "orphaned": self.orphaned_count,
        }


@dataclass(frozen=True)
class MarkedPage:
    html: str
    stats: MarkStats


def compute_implicit_marks(doc: PageDocument, profile: Profile) -> ImplicitMarkSet:
    """Intersect the page's token stream with the profile keywords.

    A keyword entry of length L matches wherever L consecutive folded
    tokens equal it. Single pass via the keyword automaton. Occurrences
    come back in canonical (start, end, term) order.
    """
    automaton = KeywordAutomaton(profile.keywords)
    hits = automaton.find_all(doc.token_folded)
    patterns = automaton.patterns
    occurrences = sorted(
        (Occurrence(patterns[index], start, end) for index, start, end in hits),
        key=lambda o: (o.start_token, o.end_token, o.term),
    )
    return ImplicitMarkSet(
        matched_terms=frozenset(o.term for o in occurrences),
        occurrences=tuple(occurrences),
    )


def first_visit(url: NormalizedUrl, visited: Collection[NormalizedUrl]) -> bool:
    """True iff the user has no visit record for this page."""
    return url not in visited


def capture_context(text: str, start: int, end: int) -> tuple[str, str]:
    """Prefix/suffix context around [start, end) for a new explicit mark."""
    return text[max(0, start - CONTEXT_LENGTH) : start], text[end : end + CONTEXT_LENGTH]


def anchor_explicit_marks(
    doc: PageDocument, marks: Sequence[ExplicitMark]
) -> tuple[list[ResolvedAnchor], list[str]]:
    """Re-locate stored quotes in the current page.

    A quote occurring exactly once anchors there. With several
    occurrences, the one whose surrounding text matches the most stored
    prefix+suffix characters wins; ties go to the earliest position. A
    vanished quote is reported as orphaned, not an error.
    """
    text = doc.visible_text
    resolved: list[ResolvedAnchor] = []
    orphaned: list[str] = []
    for mark in marks:
        position = _locate_quote(text, mark)
        if position is None:
            orphaned.append(mark.mark_id)
            continue
        start_run, start_offset = doc.locate(position)
        end_run, end_offset = doc.locate_end(position + len(mark.quote))
        resolved.append(
            ResolvedAnchor(mark.mark_id, start_run, start_offset, end_run, end_offset)
        )
    return resolved, orphaned


def _locate_quote(text: str, mark: ExplicitMark) -> int | None:
    positions = []
    pos = text.find(mark.quote)
    while pos != -1:
        positions.append(pos)
        pos = text.find(mark.quote, pos + 1)
    if not positions:
        return None
    if len(positions) == 1:
        return positions[0]
    quote_len = len(mark.quote)
    prefix, suffix = mark.prefix, mark.suffix
    best_pos, best_score = positions[0], -1
    for pos in positions:
        score = _common_suffix_len(text, pos, prefix) + _common_prefix_len(
            text, pos + quote_len, suffix
        )
        if score > best_score:
            best_pos, best_score = pos, score
    return best_pos


def _common_suffix_len(text: str, end: int, prefix: str) -> int:
    """How many trailing chars of `prefix` match text immediately before `end`."""
    k = 0
    limit = min(len(prefix), end)
    while k < limit and text[end - k - 1] == prefix[-k - 1]:
        k += 1
    return k


def _common_prefix_len(text: str, start: int, suffix: str) -> int:
    k = 0
    limit = min(len(suffix), len(text) - start)
    while k < limit and text[start + k] == suffix[k]:
        k += 1
    return k


@dataclass(frozen=True, slots=True)
class _Range:
    start: int
    end: int
    priority: tuple[int, int]  # explicit < implicit, then stable rank
    css_class: str
    payload: str  # keyword string or mark id


def render_marked_page(doc: PageDocument, pair: MarkerPair) -> MarkedPage:
    """Serialize the page with both mark tiers wrapped in <mark> elements.

    Colliding ranges are split into non-overlapping pieces; on shared
    characters explicit precedes implicit, longer implicit ranges
    precede shorter ones, and no character ever carries two classes.
    Visible text is preserved exactly; script elements are dropped.
    """
    ranges: list[_Range] = []
    run_starts = doc.run_starts
    for j, anchor in enumerate(pair.explicit):
        start = run_starts[anchor.start_run] + anchor.start_offset
        end = run_starts[anchor.end_run] + anchor.end_offset
        if start < end:
            ranges.append(_Range(start, end, (0, j), EXPLICIT_CLASS, anchor.mark_id))
    implicit_spans = []
    for occurrence in pair.implicit.occurrences:
        start, end = doc.token_char_span(occurrence.start_token, occurrence.end_token)
        implicit_spans.append((start, -(end - start), " ".join(occurrence.term), end))
    implicit_spans.sort()
    for k, (start, _, term, end) in enumerate(implicit_spans):
        ranges.append(_Range(start, end, (1, k), IMPLICIT_CLASS, term))

    segments = _flatten_ranges(ranges)
    rendered = _render_runs(doc, segments)
    html = doc.assemble(rendered)
    stats = MarkStats(
        implicit_count=len(pair.implicit.matched_terms),
        explicit_count=len(pair.explicit),
        orphaned_count=len(pair.orphaned),
    )
    return MarkedPage(html=html, stats=stats)


def count_marks(page: MarkedPage) -> tuple[int, int]:
    """The report pair: distinct implicit terms, resolved explicit marks."""
    return page.stats.implicit_count, page.stats.explicit_count


def _flatten_ranges(ranges: list[_Range]) -> list[tuple[int, int, _Range]]:
    """Resolve overlaps into non-overlapping winner segments.

    Ranges are grouped into overlap clusters (runs rarely collide, so
    the common path is a straight copy); within a cluster every
    elementary interval goes to the covering range with the best
    priority, and adjacent intervals won by the same range are merged.
    """
    if not ranges:
        return []
    ordered = sorted(ranges, key=lambda r: (r.start, r.priority))
    segments: list[tuple[int, int, _Range]] = []
    cluster: list[_Range] = [ordered[0]]
    cluster_end = ordered[0].end
    for r in ordered[1:]:
        if r.start < cluster_end:
            cluster.append(r)
            cluster_end = max(cluster_end, r.end)
        else:
            segments.extend(_flatten_cluster(cluster))
            cluster = [r]
            cluster_end = r.end
    segments.extend(_flatten_cluster(cluster))
    return segments


def _flatten_cluster(cluster: list[_Range]) -> list[tuple[int, int, _Range]]:
    if len(cluster) == 1:
        r = cluster[0]
        return [(r.start, r.end, r)]
    bounds = sorted({b for r in cluster for b in (r.start, r.end)})
    pieces: list[tuple[int, int, _Range]] = []
    for lo, hi in zip(bounds, bounds[1:]):
        winner: _Range | None = None
        for r in cluster:
            if r.start <= lo and hi <= r.end:
                if winner is None or r.priority < winner.priority:
                    winner = r
        if winner is None:
            continue
        if pieces and pieces[-1][2] is winner and pieces[-1][1] == lo:
            pieces[-1] = (pieces[-1][0], hi, winner)
        else:
            pieces.append((lo, hi, winner))
    return pieces


def _render_runs(
    doc: PageDocument, segments: list[tuple[int, int, _Range]]
) -> dict[int, str]:
    """Wrap segment slices run by run; ranges crossing runs get one wrapper per run."""
    by_run: dict[int, list[tuple[int, int, _Range]]] = {}
    for start, end, r in segments:
        for run_index, local_start, local_end in doc.iter_run_slices(start, end):
            by_run.setdefault(run_index, []).append((local_start, local_end, r))
    rendered: dict[int, str] = {}
    for run_index, slices in by_run.items():
        content = doc.text_runs[run_index].content
        parts: list[str] = []
        pos = 0
        for local_start, local_end, r in slices:  # already position-ordered
            parts.append(escape(content[pos:local_start], quote=False))
            inner = escape(content[local_start:local_end], quote=False)
            if r.css_class == IMPLICIT_CLASS:
                parts.append(
                    f'<mark class="lm-implicit" data-lm-term="{escape(r.payload)}">{inner}</mark>'
                )
            else:
                parts.append(
                    f'<mark class="lm-explicit" data-lm-id="{escape(r.payload)}">{inner}</mark>'
                )
            pos = local_end
        parts.append(escape(content[pos:], quote=False))
        rendered[run_index] = "".join(parts)
    return rendered
