"""HTML page model: visible-text runs, tokens, and reserialization.

A parsed page is held as an alternating sequence of static HTML chunks
and visible-text runs::

    static[0] run[0] static[1] run[1] ... run[n-1] static[n]

The static chunks carry everything that never receives marks: tags,
comments, doctype, hidden text (script/style/noscript content). The runs
carry the visible text in document order. Reserializing the page with
highlight wrappers spliced into chosen runs is then a single join, and
the visible text of the output is the runs' text by construction.

Tokens are maximal runs of Unicode letters/digits within a single text
run; every other character separates. Token storage is columnar
(parallel lists) because a large page has ~100k tokens and the engine
only ever needs the folded forms plus the character spans of actual
matches; Token values are materialized lazily for callers that want
them.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass
from functools import cached_property
from html import escape
from html.parser import HTMLParser
from itertools import accumulate
from typing import Iterator, Mapping

from .urls import NormalizedUrl

# One capture group so the same pattern serves findall (token surfaces)
# and split (surfaces plus separators, for offset accumulation).
TOKEN_PATTERN = re.compile(r"([^\W_]+)", re.UNICODE)

_META_CHARSET = re.compile(
    rb"""<meta[^>]+charset\s*=\s*["']?([a-zA-Z0-9][a-zA-Z0-9._\-]*)""", re.IGNORECASE
)

VOID_ELEMENTS = frozenset(
    "area base br col embed hr img input link meta param source track wbr".split()
)
# Elements whose text never counts as visible page text.
HIDDEN_ELEMENTS = frozenset(("script", "style", "noscript"))

# Joins run contents for one-pass tokenization; not a letter/digit, so no
# token can straddle a run boundary.
_RUN_SENTINEL = "\x00"


def fold(text: str) -> str:
    """Case-fold a surface form for matching (full casefold, no stemming)."""
    return text.casefold()


def keyword_entry(raw: str) -> tuple[str, ...]:
    """Tokenize and fold a raw keyword string into a matchable entry.

    Multi-word strings become phrase entries; an entry with no token
    characters comes back empty and should be discarded by the caller.
    """
    return tuple(fold(t) for t in TOKEN_PATTERN.findall(raw))


@dataclass(frozen=True, slots=True)
class TextRun:
    """One visible text node: non-empty decoded text plus its tree address."""

    run_index: int
    content: str
    source_location: tuple[int, ...]  # child-index path from the document root


@dataclass(frozen=True, slots=True)
class Token:
    """One page term with its surface position inside its run."""

    surface: str
    folded: str
    run_index: int
    start: int  # offsets in code points within the owning run's content
    end: int


class PageDocument:
    """A parsed page: identity, visible-text runs, tokens, reserializer."""

    def __init__(
        self,
        url: NormalizedUrl,
        raw_html: bytes,
        text_runs: tuple[TextRun, ...],
        static_parts: tuple[str, ...],
    ) -> None:
        if len(static_parts) != len(text_runs) + 1:
            raise ValueError("static_parts must interleave text_runs")
        self.url = url
        self.raw_html = raw_html
        self.text_runs = text_runs
        self._static_parts = static_parts
        self._surfaces: list[str] | None = None
        self._folded: list[str] | None = None
        self._sent_starts: list[int] | None = None
        self._sent_ends: list[int] | None = None
        self._sent_run_starts: list[int] | None = None

    # -- visible text ------------------------------------------------

    @cached_property
    def visible_text(self) -> str:
        return "".join(run.content for run in self.text_runs)

    @cached_property
    def run_starts(self) -> list[int]:
        """Global character offset of each run within visible_text."""
        starts = [0]
        starts.extend(accumulate(len(run.content) for run in self.text_runs))
        return starts[:-1] if self.text_runs else []

    def locate(self, offset: int) -> tuple[int, int]:
        """Map a global visible-text offset to (run_index, local offset)."""
        k = bisect_right(self.run_starts, offset) - 1
        return k, offset - self.run_starts[k]

    def locate_end(self, end: int) -> tuple[int, int]:
        """Map an exclusive global end offset to the run holding its last char."""
        k = bisect_right(self.run_starts, end - 1) - 1
        return k, end - self.run_starts[k]

    def iter_run_slices(self, start: int, end: int) -> Iterator[tuple[int, int, int]]:
        """Split the global span [start, end) into per-run local slices."""
        run_starts = self.run_starts
        k = bisect_right(run_starts, start) - 1
        while start < end:
            run_end = run_starts[k] + len(self.text_runs[k].content)
            piece_end = min(end, run_end)
            yield k, start - run_starts[k], piece_end - run_starts[k]
            start = piece_end
            k += 1

    # -- tokens --------------------------------------------------------

    def _ensure_tokens(self) -> None:
        if self._surfaces is not None:
            return
        contents = [run.content for run in self.text_runs]
        joined = _RUN_SENTINEL.join(contents)
        pieces = TOKEN_PATTERN.split(joined)
        cuts = list(accumulate(map(len, pieces)))
        surfaces = pieces[1::2]
        memo: dict[str, str] = {}
        memo_get = memo.get
        folded = []
        append = folded.append
        for s in surfaces:
            f = memo_get(s)
            if f is None:
                memo[s] = f = s.casefold()
            append(f)
        self._surfaces = surfaces
        self._folded = folded
        self._sent_ends = cuts[1::2]
        self._sent_starts = cuts[0::2][: len(surfaces)]
        starts = [0]
        starts.extend(accumulate(len(c) + 1 for c in contents))
        self._sent_run_starts = starts[:-1] if contents else []

    @property
    def token_folded(self) -> list[str]:
        """Folded token stream in document order (the matching engine's input)."""
        self._ensure_tokens()
        assert self._folded is not None
        return self._folded

    @cached_property
    def tokens(self) -> tuple[Token, ...]:
        self._ensure_tokens()
        assert self._surfaces is not None
        sent_run_starts = self._sent_run_starts
        out = []
        for surface, folded, ss, se in zip(
            self._surfaces, self._folded, self._sent_starts, self._sent_ends
        ):
            k = bisect_right(sent_run_starts, ss) - 1
            base = sent_run_starts[k]
            out.append(Token(surface, folded, k, ss - base, se - base))
        return tuple(out)

    def token_char_span(self, start_token: int, end_token: int) -> tuple[int, int]:
        """Global visible-text span covered by tokens [start_token, end_token)."""
        self._ensure_tokens()
        ss = self._sent_starts[start_token]
        se = self._sent_ends[end_token - 1]
        # Subtracting the number of joining sentinels before each offset
        # converts sentinel-space to visible-text space; that count is the
        # owning run's ordinal.
        k1 = bisect_right(self._sent_run_starts, ss) - 1
        k2 = bisect_right(self._sent_run_starts, se - 1) - 1
        return ss - k1, se - k2

    # -- reserialization ----------------------------------------------

    def assemble(self, rendered_runs: Mapping[int, str] | None = None) -> str:
        """Serialize the page, substituting pre-rendered HTML for chosen runs.

        Runs absent from rendered_runs are emitted as their escaped
        content, so assemble() with no argument reproduces the page
        (modulo parse normalization, with script elements dropped).
        """
        static = self._static_parts
        parts = []
        append = parts.append
        get = rendered_runs.get if rendered_runs else None
        for i, run in enumerate(self.text_runs):
            append(static[i])
            rendered = get(i) if get else None
            append(escape(run.content, quote=False) if rendered is None else rendered)
        append(static[-1])
        return "".join(parts)


class _Builder(HTMLParser):
    """Tag-soup event stream -> static chunks + visible runs + tree paths.

    Recovery rules: unmatched end tags are serialized but do not touch
    the open-element bookkeeping; a matching end tag auto-closes any
    elements left open above it. Script elements are dropped from the
    serialization entirely (their text was never visible); style and
    noscript are serialized but contribute no visible runs.
    """

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.static: list[str] = []
        self.runs: list[str] = []
        self.paths: list[tuple[int, ...]] = []
        self._pending: list[str] = []
        self._open: list[str] = []
        self._open_idx: list[int] = []
        self._counters: list[int] = [0]
        self._raw_tag: str | None = None  # inside <script>/<style> raw content
        self._noscript = 0
        self._last_was_text = False

    # -- helpers -------------------------------------------------------

    def _bump_child(self) -> int:
        idx = self._counters[-1]
        self._counters[-1] = idx + 1
        return idx

    def _emit(self, chunk: str) -> None:
        self._pending.append(chunk)
        self._last_was_text = False

    @staticmethod
    def _start_tag_text(tag: str, attrs: list[tuple[str, str | None]], closing: str) -> str:
        if not attrs:
            return f"<{tag}{closing}"
        buf = ["<", tag]
        for name, value in attrs:
            if value is None:
                buf.append(f" {name}")
            else:
                buf.append(f' {name}="{escape(value)}"')
        buf.append(closing)
        return "".join(buf)

    # -- parser events ---------------------------------------------------

    def handle_starttag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        if tag in ("script", "style"):
            # html.parser switches to raw-content mode; the only possible
            # next events are data and the matching end tag.
            self._raw_tag = tag
            self._bump_child()
            if tag == "style":
                self._emit(self._start_tag_text(tag, attrs, ">"))
            else:
                self._last_was_text = False
            return
        if tag == "noscript":
            self._noscript += 1
        self._emit(self._start_tag_text(tag, attrs, ">"))
        idx = self._bump_child()
        if tag not in VOID_ELEMENTS:
            self._open.append(tag)
            self._open_idx.append(idx)
            self._counters.append(0)

    def handle_startendtag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        self._bump_child()
        if tag == "script":
            self._last_was_text = False
            return
        self._emit(self._start_tag_text(tag, attrs, "/>"))

    def handle_endtag(self, tag: str) -> None:
        if self._raw_tag is not None:
            if tag == self._raw_tag:
                self._raw_tag = None
                if tag == "style":
                    self._emit("</style>")
                else:
                    self._last_was_text = False
            return
        if tag == "noscript" and self._noscript:
            self._noscript -= 1
        if tag == "script":
            # Stray close with no raw-mode open; keep it out of the output
            # so annotated markup can never re-open script parsing.
            self._last_was_text = False
            return
        if tag in self._open:
            while self._open:
                closed = self._open.pop()
                self._open_idx.pop()
                self._counters.pop()
                if closed == tag:
                    break
        self._emit(f"</{tag}>")

    def handle_data(self, data: str) -> None:
        if not data:
            return
        if self._raw_tag is not None:
            if self._raw_tag == "style":
                self._pending.append(data)  # raw content, verbatim
            return
        if self._noscript:
            self._emit(escape(data, quote=False))
            return
        if self._last_was_text:
            self.runs[-1] += data
            return
        idx = self._bump_child()
        self.paths.append(tuple(self._open_idx) + (idx,))
        self.static.append("".join(self._pending))
        self._pending = []
        self.runs.append(data)
        self._last_was_text = True

    def handle_comment(self, data: str) -> None:
        self._bump_child()
        self._emit(f"<!--{data}-->")

    def handle_decl(self, decl: str) -> None:
        self._bump_child()
        self._emit(f"<!{decl}>")

    def handle_pi(self, data: str) -> None:
        self._bump_child()
        self._emit(f"<?{data}>")

    def unknown_decl(self, data: str) -> None:
        self._bump_child()
        self._emit(f"<![{data}]>")

    def finish(self) -> tuple[str, ...]:
        self.static.append("".join(self._pending))
        self._pending = []
        return tuple(self.static)


def decode_html(data: bytes) -> str:
    """Decode page bytes: BOM, then <meta charset>, then UTF-8 with replacement."""
    if data.startswith(b"\xef\xbb\xbf"):
        return data[3:].decode("utf-8", "replace")
    if data.startswith(b"\xff\xfe") or data.startswith(b"\xfe\xff"):
        return data.decode("utf-16", "replace")
    match = _META_CHARSET.search(data[:2048])
    if match:
        try:
            return data.decode(match.group(1).decode("ascii"), "replace")
        except LookupError:
            pass
    return data.decode("utf-8", "replace")


def parse_page(url: NormalizedUrl, html: bytes | str) -> PageDocument:
    """Parse page bytes into a PageDocument. Total: malformed input never raises."""
    if isinstance(html, str):
        raw, text = html.encode("utf-8"), html
    else:
        raw, text = bytes(html), decode_html(html)
    builder = _Builder()
    builder.feed(text)
    builder.close()
    static_parts = builder.finish()
    runs = tuple(
        TextRun(i, content, path)
        for i, (content, path) in enumerate(zip(builder.runs, builder.paths))
    )
    return PageDocument(url, raw, runs, static_parts)


def tokenize(doc: PageDocument) -> tuple[Token, ...]:
    """The page's term sequence in document order."""
    return doc.tokens
