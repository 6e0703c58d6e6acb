"""Batch driver: annotate pages, build report matrices, manage the store.

Exit codes: 0 success, 1 usage error, 2 fetch failure, 3 store failure.
Store and cache locations honor LIVEMARK_STORE / LIVEMARK_CACHE; flags
take precedence.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .fetcher import CACHE_MODES, FetchError, PageCache
from .pipeline import annotate_page, page_stats
from .service import DEFAULT_CACHE, DEFAULT_STORE, create_app
from .store import EmptyQuote, MarkStore, StoreError
from .urls import MalformedUrl, normalize_any, parse_source

EXIT_USAGE = 1
EXIT_FETCH = 2
EXIT_STORE = 3

_store_option = click.option(
    "--store", "store_path", envvar="LIVEMARK_STORE", default=DEFAULT_STORE,
    show_default=True, help="Store file path.",
)
_cache_option = click.option(
    "--cache", "cache_dir", envvar="LIVEMARK_CACHE", default=DEFAULT_CACHE,
    show_default=True, help="Page cache directory.",
)
_cache_mode_option = click.option(
    "--cache-mode", type=click.Choice(CACHE_MODES), default="prefer-cache",
    show_default=True, help="How to use the page cache.",
)


@click.group()
def cli() -> None:
    """Personalized page marking: implicit keyword highlights plus stored marks."""


@cli.command()
@click.option("--user", required=True, help="User whose profile and marks apply.")
@click.option("--url", "url_arg", default=None, help="Page URL to annotate.")
@click.option("--file", "file_arg", default=None, help="Local HTML file to annotate.")
@_store_option
@_cache_option
@_cache_mode_option
@click.option("--out", "out_path", required=True, help="Write annotated HTML here.")
def annotate(user, url_arg, file_arg, store_path, cache_dir, cache_mode, out_path) -> None:
    """Annotate one page and print a url/implicit/explicit/orphaned stats line."""
    if (url_arg is None) == (file_arg is None):
        raise click.UsageError("exactly one of --url or --file is required")
    url = parse_source(url_arg if url_arg is not None else file_arg)
    store = MarkStore(store_path)
    cache = PageCache(cache_dir)
    result = annotate_page(store, cache, user, url, cache_mode)
    Path(out_path).write_text(result.html, encoding="utf-8")
    s = result.stats
    click.echo(f"{url}\t{s.implicit_count}\t{s.explicit_count}\t{s.orphaned_count}")


@cli.command()
@click.option("--users", required=True, help="Comma-separated user ids (report columns).")
@click.option("--urls-file", required=True, type=click.Path(exists=True, dir_okay=False),
              help="File with one page URL or path per line (report rows).")
@_store_option
@_cache_option
@_cache_mode_option
def report(users, urls_file, store_path, cache_dir, cache_mode) -> None:
    """Emit the pages-by-users implicit/explicit count matrix as TSV."""
    user_list = [u for u in (part.strip() for part in users.split(",")) if u]
    if not user_list:
        raise click.UsageError("--users must name at least one user")
    sources = [line.strip() for line in Path(urls_file).read_text(encoding="utf-8").splitlines()]
    sources = [s for s in sources if s]
    store = MarkStore(store_path)
    cache = PageCache(cache_dir)

    header = ["page"]
    for user in user_list:
        header += [f"{user}:IM", f"{user}:EM"]
    click.echo("\t".join(header))
    succeeded = 0
    for page_number, source in enumerate(sources, start=1):
        cells = [str(page_number)]
        try:
            url = parse_source(source)
            counts = []
            for user in user_list:
                stats = page_stats(store, cache, user, url, cache_mode)
                counts += [str(stats.implicit_count), str(stats.explicit_count)]
        except (FetchError, MalformedUrl):
            cells += ["ERR"] * (2 * len(user_list))
        else:
            cells += counts
            succeeded += 1
        click.echo("\t".join(cells))
    if sources and not succeeded:
        raise FetchError("no page in the list could be fetched or read from cache")


@cli.group()
def profile() -> None:
    """Profile keyword management."""


@profile.command("set")
@click.option("--user", required=True)
@click.option("--keywords", required=True, help='Comma-separated keywords, e.g. "marking,web page".')
@_store_option
def profile_set(user, keywords, store_path) -> None:
    """Replace the user's keyword set; prints the stored profile."""
    store = MarkStore(store_path)
    stored = store.put_profile(user, [k.strip() for k in keywords.split(",")])
    click.echo(json.dumps({"user": user, "keywords": list(stored.keyword_strings())}))


@cli.group()
def mark() -> None:
    """Explicit mark management."""


@mark.command("add")
@click.option("--user", required=True)
@click.option("--url", "url_arg", required=True, help="Page URL or local path the mark belongs to.")
@click.option("--quote", required=True, help="Exact visible-text excerpt to mark.")
@click.option("--prefix", default="", help="Visible text immediately before the quote.")
@click.option("--suffix", default="", help="Visible text immediately after the quote.")
@_store_option
def mark_add(user, url_arg, quote, prefix, suffix, store_path) -> None:
    """Persist an explicit mark; prints the stored record."""
    if not quote:
        raise click.UsageError("--quote must be non-empty")
    url = parse_source(url_arg)
    store = MarkStore(store_path)
    record = store.add_mark(user, url, quote, prefix, suffix)
    click.echo(
        json.dumps(
            {
                "id": record.mark_id,
                "user": record.user_id,
                "url": record.url,
                "quote": record.quote,
                "prefix": record.prefix,
                "suffix": record.suffix,
                "created_at": record.created_at,
            }
        )
    )


@cli.command()
@click.option("--addr", envvar="LIVEMARK_ADDR", default="127.0.0.1:8000",
              show_default=True, help="host:port to listen on.")
@_store_option
@_cache_option
@click.option("--ui", "ui_dir", default=None, help="Directory of web UI static files.")
def serve(addr, store_path, cache_dir, ui_dir) -> None:
    """Run the HTTP service."""
    import uvicorn

    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise click.UsageError(f"--addr must be host:port, got {addr!r}")
    app = create_app(store_path, cache_dir, ui_dir)
    uvicorn.run(app, host=host, port=int(port))


def main(argv: list[str] | None = None) -> int:
    """Run the CLI with this tool's exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except (MalformedUrl, EmptyQuote) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    except FetchError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_FETCH
    except StoreError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_STORE
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_STORE
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
