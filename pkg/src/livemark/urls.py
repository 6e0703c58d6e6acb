"""Page identity: URL normalization.

Every subsystem (cache, visit records, stored marks) keys pages by a
normalized absolute URL so they all agree on what "the same page" means.
Normalization is deliberately conservative: lowercase scheme and host,
drop the fragment and default port, keep path and query verbatim.
"""

from __future__ import annotations

from pathlib import Path
from urllib.parse import urlsplit, urlunsplit

# A normalized absolute URL. Plain str with the invariants documented on
# normalize_url(); annotated as NormalizedUrl where the distinction matters.
NormalizedUrl = str

_DEFAULT_PORTS = {"http": 80, "https": 443}


class MalformedUrl(ValueError):
    """The given string cannot serve as a page identity."""


def normalize_url(raw: str) -> NormalizedUrl:
    """Normalize an absolute http(s) URL.

    Lowercases scheme and host, strips the fragment, drops default
    ports, and leaves path/query untouched. Idempotent:
    normalize_url(normalize_url(u)) == normalize_url(u).

    Raises MalformedUrl for anything that is not an absolute http(s) URL.
    """
    try:
        parts = urlsplit(raw.strip())
    except ValueError as exc:
        raise MalformedUrl(f"unparseable URL: {raw!r}") from exc
    scheme = parts.scheme.lower()
    if scheme not in ("http", "https"):
        raise MalformedUrl(f"not an absolute http(s) URL: {raw!r}")
    if not parts.netloc:
        raise MalformedUrl(f"missing host: {raw!r}")
    return urlunsplit((scheme, _normalize_netloc(parts, scheme), parts.path, parts.query, ""))


def _normalize_netloc(parts, scheme: str) -> str:
    host = parts.hostname or ""
    if ":" in host:  # bare IPv6 address, urlsplit strips the brackets
        host = f"[{host}]"
    try:
        port = parts.port
    except ValueError as exc:
        raise MalformedUrl(f"invalid port in {parts.netloc!r}") from exc
    userinfo, sep, _ = parts.netloc.rpartition("@")
    netloc = userinfo + sep + host
    if port is not None and port != _DEFAULT_PORTS.get(scheme):
        netloc += f":{port}"
    return netloc


def file_url(path: str | Path) -> NormalizedUrl:
    """Build a file:// identity for a local document."""
    return Path(path).resolve().as_uri()


def normalize_any(raw: str) -> NormalizedUrl:
    """Normalize an http(s) or file URL.

    file URLs get the same treatment minus host handling: lowercase
    scheme, no fragment, path verbatim. Everything else is rejected.
    """
    stripped = raw.strip()
    scheme = urlsplit(stripped).scheme.lower()
    if scheme == "file":
        parts = urlsplit(stripped)
        if not parts.path:
            raise MalformedUrl(f"file URL without a path: {raw!r}")
        host = (parts.hostname or "").lower()
        if host == "localhost":
            host = ""
        return urlunsplit(("file", host, parts.path, parts.query, ""))
    return normalize_url(stripped)


def parse_source(source: str) -> NormalizedUrl:
    """Turn a CLI source argument (URL or local file path) into a page identity."""
    if "://" in source:
        return normalize_any(source)
    return file_url(source)
