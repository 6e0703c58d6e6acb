"""Simultaneous multi-pattern matching over token streams.

Classic Aho-Corasick, with tokens as the alphabet instead of characters:
patterns are tuples of folded tokens (single words or phrases), the
automaton is a trie over tokens with failure links, and one left-to-right
pass over a page's folded token stream reports every occurrence of every
pattern, including overlapping and nested ones.

Two adaptations for this domain:

- The alphabet is unbounded (any folded token), so before touching the
  automaton each input token is tested against the set of tokens that
  occur in any pattern. A miss resets to the root outright. On real
  pages the overwhelming majority of tokens miss, which makes the scan
  effectively one frozenset lookup per token.
- Output lists are pre-propagated along failure links at build time, so
  reporting at a state is a plain iteration, never a link chase.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Sequence

Pattern = tuple[str, ...]


class KeywordAutomaton:
    """Matches a fixed set of token-tuple patterns in a single pass.

    Duplicate patterns are collapsed onto the first index; empty
    patterns are ignored.
    """

    def __init__(self, patterns: Iterable[Pattern]) -> None:
        self.patterns: list[Pattern] = []
        self._children: list[dict[str, int]] = [{}]
        self._fail: list[int] = [0]
        # per state: (pattern_index, pattern_length) for every pattern
        # ending at the state or at any state on its failure chain
        self._out: list[list[tuple[int, int]]] = [[]]
        seen: dict[Pattern, int] = {}
        for pattern in patterns:
            if not pattern or pattern in seen:
                continue
            seen[pattern] = len(self.patterns)
            self._insert(pattern)
        self._alphabet = frozenset(tok for pattern in self.patterns for tok in pattern)
        self._link()

    def _insert(self, pattern: Pattern) -> None:
        children = self._children
        state = 0
        for token in pattern:
            nxt = children[state].get(token)
            if nxt is None:
                nxt = len(children)
                children.append({})
                self._fail.append(0)
                self._out.append([])
                children[state][token] = nxt
            state = nxt
        self._out[state].append((len(self.patterns), len(pattern)))
        self.patterns.append(pattern)

    def _link(self) -> None:
        """BFS failure links; each node's output absorbs its failure target's."""
        children, fail, out = self._children, self._fail, self._out
        queue: deque[int] = deque()
        for state in children[0].values():
            fail[state] = 0
            queue.append(state)
        while queue:
            parent = queue.popleft()
            for token, state in children[parent].items():
                queue.append(state)
                f = fail[parent]
                while f and token not in children[f]:
                    f = fail[f]
                target = children[f].get(token, 0)
                fail[state] = target if target != state else 0
                if out[fail[state]]:
                    out[state] = out[state] + out[fail[state]]

    def find_all(self, tokens: Sequence[str]) -> list[tuple[int, int, int]]:
        """Scan a folded token stream once.

        Returns (pattern_index, start, end) triples with token-index
        spans, end exclusive, ordered by match end position.
        """
        children, fail, out = self._children, self._fail, self._out
        alphabet = self._alphabet
        hits: list[tuple[int, int, int]] = []
        append = hits.append
        state = 0
        for i, token in enumerate(tokens):
            if token not in alphabet:
                state = 0
                continue
            while state and token not in children[state]:
                state = fail[state]
            state = children[state].get(token, 0)
            found = out[state]
            if found:
                for index, length in found:
                    append((index, i - length + 1, i + 1))
        return hits
