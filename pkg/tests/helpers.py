"""Shared test oracles and annotated-markup inspectors.

Everything here stays independent of the engine's matching and
rendering paths: the oracle scans every token window naively, and the
inspectors re-parse emitted HTML with their own HTMLParser subclasses.
"""

from __future__ import annotations

from html.parser import HTMLParser

from livemark.content import PageDocument
from livemark.engine import ImplicitMarkSet, Occurrence, Profile

HIDDEN = ("script", "style", "noscript")


def implicit_oracle(doc: PageDocument, profile: Profile) -> ImplicitMarkSet:
    """Brute force: compare every keyword against every token window."""
    tokens = [t.folded for t in doc.tokens]
    occurrences = []
    for entry in profile.keywords:
        length = len(entry)
        for start in range(len(tokens) - length + 1):
            if tuple(tokens[start : start + length]) == entry:
                occurrences.append(Occurrence(entry, start, start + length))
    occurrences.sort(key=lambda o: (o.start_token, o.end_token, o.term))
    return ImplicitMarkSet(
        matched_terms=frozenset(o.term for o in occurrences),
        occurrences=tuple(occurrences),
    )


class _AnnotationWalker(HTMLParser):
    """Collects (char, mark class, payload) for every visible character."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.chars: list[tuple[str, str | None, str | None]] = []
        self.mark_stack: list[tuple[str, str]] = []
        self.nested_marks = 0
        self._hidden = 0

    def handle_starttag(self, tag, attrs):
        if tag in HIDDEN:
            self._hidden += 1
            return
        if tag == "mark":
            attrs = dict(attrs)
            cls = attrs.get("class", "")
            if cls.startswith("lm-"):
                if self.mark_stack:
                    self.nested_marks += 1
                payload = attrs.get("data-lm-term") or attrs.get("data-lm-id") or ""
                self.mark_stack.append((cls, payload))

    def handle_endtag(self, tag):
        if tag in HIDDEN and self._hidden:
            self._hidden -= 1
        elif tag == "mark" and self.mark_stack:
            self.mark_stack.pop()

    def handle_data(self, data):
        if self._hidden:
            return
        cls, payload = self.mark_stack[-1] if self.mark_stack else (None, None)
        for ch in data:
            self.chars.append((ch, cls, payload))


def annotated_chars(html: str) -> list[tuple[str, str | None, str | None]]:
    walker = _AnnotationWalker()
    walker.feed(html)
    walker.close()
    assert walker.nested_marks == 0, "annotation wrappers must never nest"
    return walker.chars


def visible_text_of(html: str) -> str:
    return "".join(ch for ch, _, _ in annotated_chars(html))


class _WrapperStripper(HTMLParser):
    """Rebuilds markup with the lm-* <mark> wrappers removed."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=False)
        self.parts: list[str] = []
        self._depth = 0  # plain marks nested inside an lm wrapper
        self._in_wrapper = 0

    def handle_starttag(self, tag, attrs):
        if tag == "mark":
            attr_map = dict(attrs)
            if str(attr_map.get("class", "")).startswith("lm-"):
                self._in_wrapper += 1
                return
            if self._in_wrapper:
                self._depth += 1
        self.parts.append(self.get_starttag_text())

    def handle_endtag(self, tag):
        if tag == "mark" and self._in_wrapper:
            if self._depth:
                self._depth -= 1
            else:
                self._in_wrapper -= 1
                return
        self.parts.append(f"</{tag}>")

    def handle_startendtag(self, tag, attrs):
        self.parts.append(self.get_starttag_text())

    def handle_data(self, data):
        self.parts.append(data)

    def handle_entityref(self, name):
        self.parts.append(f"&{name};")

    def handle_charref(self, name):
        self.parts.append(f"&#{name};")

    def handle_comment(self, data):
        self.parts.append(f"<!--{data}-->")

    def handle_decl(self, decl):
        self.parts.append(f"<!{decl}>")


def strip_wrappers(html: str) -> str:
    stripper = _WrapperStripper()
    stripper.feed(html)
    stripper.close()
    return "".join(stripper.parts)
