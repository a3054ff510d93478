"""Gallery client: metadata queries, archive downloads, snapshot files.

The wire protocol is deliberately small and declarative — a base address
plus a field mapping — because corpus construction must work against a
local stub in tests and against a real gallery behind a mapping file.
Downloads are idempotent (complete files are never re-fetched) and the
shared rate limiter bounds both in-flight requests and per-worker
request cadence.
"""

from __future__ import annotations

import csv
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .errors import ChecksumMismatch, NetworkError, ProtocolError, RateLimited

DEFAULT_MAX_INFLIGHT = 4
DEFAULT_MIN_DELAY = 0.25
DEFAULT_MAX_RETRIES = 3
DEFAULT_TIMEOUT = 30.0


@dataclass(frozen=True)
class GalleryQuery:
    page_size: int = 100
    page_number: int = 1
    category: str | None = None
    sort: str = "installs"
    search_text: str | None = None

    def __post_init__(self):
        if not 1 <= self.page_size <= 1000:
            raise ValueError(f"page_size must be in [1, 1000]: {self.page_size}")
        if self.page_number < 1:
            raise ValueError(f"page_number must be >= 1: {self.page_number}")


@dataclass(frozen=True)
class MarketplaceEntry:
    extension_id: str
    display_name: str = ""
    description: str = ""
    categories: tuple[str, ...] = ()
    install_count: int = 0
    published_date: str = ""
    last_updated: str = ""
    version: str = ""
    download_url: str = ""


@dataclass(frozen=True)
class GalleryProtocol:
    """Declarative mapping from the gallery payload to entry fields."""

    list_path: str = "/extensions"
    results_field: str = "results"
    field_map: dict = field(
        default_factory=lambda: {
            "extension_id": "extensionId",
            "display_name": "displayName",
            "description": "description",
            "categories": "categories",
            "install_count": "installCount",
            "published_date": "publishedDate",
            "last_updated": "lastUpdated",
            "version": "version",
            "download_url": "downloadUrl",
        }
    )


DEFAULT_PROTOCOL = GalleryProtocol()


class RateLimiter:
    """Caps concurrent requests and enforces a per-worker minimum delay."""

    def __init__(self, max_inflight: int = DEFAULT_MAX_INFLIGHT, min_delay: float = DEFAULT_MIN_DELAY):
        self.max_inflight = max_inflight
        self.min_delay = min_delay
        self._slots = threading.BoundedSemaphore(max_inflight)
        self._local = threading.local()

    def __enter__(self):
        last = getattr(self._local, "last_request", None)
        if last is not None:
            wait = self.min_delay - (time.monotonic() - last)
            if wait > 0:
                time.sleep(wait)
        self._slots.acquire()
        return self

    def __exit__(self, *exc_info):
        self._local.last_request = time.monotonic()
        self._slots.release()
        return False


def _entry_from_payload(payload: dict, protocol: GalleryProtocol) -> MarketplaceEntry:
    if not isinstance(payload, dict):
        raise ProtocolError(f"gallery entry is not an object: {payload!r}")
    values = {}
    for attr, key in protocol.field_map.items():
        values[attr] = payload.get(key)
    extension_id = values.get("extension_id")
    if not isinstance(extension_id, str) or not extension_id:
        raise ProtocolError(f"gallery entry lacks an extension id: {payload!r}")
    categories = values.get("categories") or ()
    if not isinstance(categories, (list, tuple)):
        raise ProtocolError(f"gallery entry categories malformed: {categories!r}")
    install_count = values.get("install_count") or 0
    if not isinstance(install_count, int) or install_count < 0:
        raise ProtocolError(f"gallery entry install count malformed: {install_count!r}")
    return MarketplaceEntry(
        extension_id=extension_id,
        display_name=str(values.get("display_name") or ""),
        description=str(values.get("description") or ""),
        categories=tuple(str(c) for c in categories),
        install_count=install_count,
        published_date=str(values.get("published_date") or ""),
        last_updated=str(values.get("last_updated") or ""),
        version=str(values.get("version") or ""),
        download_url=str(values.get("download_url") or ""),
    )


def _request_with_retries(
    method: str,
    url: str,
    session: requests.Session,
    limiter: RateLimiter | None,
    max_retries: int,
    **kwargs,
) -> requests.Response:
    attempt = 0
    while True:
        try:
            if limiter is not None:
                with limiter:
                    response = session.request(method, url, timeout=DEFAULT_TIMEOUT, **kwargs)
            else:
                response = session.request(method, url, timeout=DEFAULT_TIMEOUT, **kwargs)
        except requests.RequestException as exc:
            if attempt >= max_retries:
                raise NetworkError(f"{url}: {exc}") from None
            time.sleep(0.2 * (2 ** attempt))
            attempt += 1
            continue

        if response.status_code == 429:
            retry_after = _retry_after_seconds(response)
            if attempt >= max_retries:
                raise RateLimited(f"{url}: rate limited", retry_after=retry_after)
            time.sleep(retry_after)
            attempt += 1
            continue
        if response.status_code >= 500:
            if attempt >= max_retries:
                raise NetworkError(f"{url}: server error {response.status_code}")
            time.sleep(0.2 * (2 ** attempt))
            attempt += 1
            continue
        if response.status_code >= 400:
            raise ProtocolError(f"{url}: unexpected status {response.status_code}")
        return response


def _retry_after_seconds(response: requests.Response) -> float:
    header = response.headers.get("Retry-After")
    try:
        return max(0.0, float(header)) if header else 1.0
    except ValueError:
        return 1.0


def query_gallery(
    query: GalleryQuery,
    endpoint: str,
    protocol: GalleryProtocol = DEFAULT_PROTOCOL,
    session: requests.Session | None = None,
    limiter: RateLimiter | None = None,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> list[MarketplaceEntry]:
    """Fetch one page of gallery entries.

    Raises :class:`NetworkError` after the retry budget, and
    :class:`ProtocolError` for payloads that do not match the mapping.
    """
    session = session or requests.Session()
    params = {"page": query.page_number, "pageSize": query.page_size, "sort": query.sort}
    if query.category:
        params["category"] = query.category
    if query.search_text:
        params["q"] = query.search_text
    url = endpoint.rstrip("/") + protocol.list_path
    response = _request_with_retries("GET", url, session, limiter, max_retries, params=params)
    try:
        payload = response.json()
    except ValueError:
        raise ProtocolError(f"{url}: response is not JSON") from None
    if not isinstance(payload, dict) or not isinstance(payload.get(protocol.results_field), list):
        raise ProtocolError(f"{url}: missing {protocol.results_field!r} list")
    entries = [_entry_from_payload(item, protocol) for item in payload[protocol.results_field]]
    seen: set[str] = set()
    for entry in entries:
        if entry.extension_id in seen:
            raise ProtocolError(f"{url}: duplicate extension id in page: {entry.extension_id}")
        seen.add(entry.extension_id)
    return entries


def iterate_gallery(
    endpoint: str,
    page_size: int = 100,
    category: str | None = None,
    sort: str = "installs",
    search_text: str | None = None,
    max_entries: int | None = None,
    protocol: GalleryProtocol = DEFAULT_PROTOCOL,
    session: requests.Session | None = None,
    limiter: RateLimiter | None = None,
):
    """Yield entries across pages until the gallery runs out."""
    session = session or requests.Session()
    page = 1
    emitted = 0
    while True:
        query = GalleryQuery(
            page_size=page_size, page_number=page, category=category, sort=sort, search_text=search_text
        )
        entries = query_gallery(query, endpoint, protocol, session, limiter)
        if not entries:
            return
        for entry in entries:
            yield entry
            emitted += 1
            if max_entries is not None and emitted >= max_entries:
                return
        if len(entries) < page_size:
            return
        page += 1


def download_path(entry: MarketplaceEntry, dest: str | Path) -> Path:
    return Path(dest) / f"{entry.extension_id}-{entry.version}.vsix"


def download_extension(
    entry: MarketplaceEntry,
    dest: str | Path,
    session: requests.Session | None = None,
    limiter: RateLimiter | None = None,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> Path:
    """Download one archive; a complete existing file is never re-fetched.

    Transfers land in a ``.part`` file and are renamed only after the
    byte count matches any declared content length, so a final ``.vsix``
    is complete by construction and interrupted transfers restart.
    """
    if not entry.download_url:
        raise ValueError(f"{entry.extension_id}: entry has no download url")
    target = download_path(entry, dest)
    if target.exists() and target.stat().st_size > 0:
        return target
    target.parent.mkdir(parents=True, exist_ok=True)
    session = session or requests.Session()

    response = _request_with_retries(
        "GET", entry.download_url, session, limiter, max_retries, stream=True
    )
    declared = response.headers.get("Content-Length")
    part = target.with_suffix(target.suffix + ".part")
    received = 0
    try:
        with open(part, "wb") as handle:
            for chunk in response.iter_content(chunk_size=1 << 16):
                handle.write(chunk)
                received += len(chunk)
    except requests.RequestException as exc:
        part.unlink(missing_ok=True)
        raise NetworkError(f"{entry.extension_id}: transfer interrupted: {exc}") from None
    if declared is not None and received != int(declared):
        part.unlink(missing_ok=True)
        raise ChecksumMismatch(
            f"{entry.extension_id}: received {received} bytes, declared {declared}"
        )
    part.replace(target)
    return target


@dataclass
class CrawlResult:
    entries: list[MarketplaceEntry]
    downloaded: list[Path]
    skipped_existing: int
    snapshot_path: Path | None


def crawl(
    endpoint: str,
    dest: str | Path,
    category: str | None = None,
    max_entries: int | None = None,
    min_installs: int = 0,
    page_size: int = 100,
    max_inflight: int = DEFAULT_MAX_INFLIGHT,
    min_delay: float = DEFAULT_MIN_DELAY,
    snapshot_name: str = "metadata.tsv",
    protocol: GalleryProtocol = DEFAULT_PROTOCOL,
) -> CrawlResult:
    """Page through the gallery, download archives, persist a snapshot."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    limiter = RateLimiter(max_inflight=max_inflight, min_delay=min_delay)
    session = requests.Session()

    entries = [
        entry
        for entry in iterate_gallery(
            endpoint,
            page_size=page_size,
            category=category,
            max_entries=max_entries,
            protocol=protocol,
            session=session,
            limiter=limiter,
        )
        if entry.install_count >= min_installs
    ]

    downloaded: list[Path] = []
    skipped = 0
    to_fetch = [e for e in entries if e.download_url]
    preexisting = {e.extension_id for e in to_fetch if download_path(e, dest).exists()}
    skipped = len(preexisting)

    with ThreadPoolExecutor(max_workers=max_inflight) as pool:
        futures = {
            pool.submit(download_extension, entry, dest, session, limiter): entry
            for entry in to_fetch
            if entry.extension_id not in preexisting
        }
        for future in futures:
            downloaded.append(future.result())

    snapshot_path = dest / snapshot_name
    write_metadata_snapshot(entries, snapshot_path)
    return CrawlResult(
        entries=entries, downloaded=sorted(downloaded), skipped_existing=skipped,
        snapshot_path=snapshot_path,
    )


# ---------------------------------------------------------------------------
# Metadata snapshot file: one record per line, consumed by measurement joins
# ---------------------------------------------------------------------------

SNAPSHOT_FIELDS = (
    "extension_id",
    "version",
    "install_count",
    "categories",
    "published_date",
    "description",
)


def write_metadata_snapshot(entries: list[MarketplaceEntry], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
        writer.writerow(SNAPSHOT_FIELDS)
        for entry in sorted(entries, key=lambda e: e.extension_id):
            writer.writerow(
                [
                    entry.extension_id,
                    entry.version,
                    entry.install_count,
                    ";".join(entry.categories),
                    entry.published_date,
                    entry.description,
                ]
            )


def read_metadata_snapshot(path: str | Path) -> dict[str, MarketplaceEntry]:
    entries: dict[str, MarketplaceEntry] = {}
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter="\t")
        header = next(reader, None)
        if header is None or tuple(header) != SNAPSHOT_FIELDS:
            raise ValueError(f"{path}: unexpected snapshot header {header}")
        for record in reader:
            if len(record) != len(SNAPSHOT_FIELDS):
                raise ValueError(f"{path}: malformed snapshot record {record}")
            extension_id, version, install_count, categories, published_date, description = record
            entries[extension_id] = MarketplaceEntry(
                extension_id=extension_id,
                version=version,
                install_count=int(install_count),
                categories=tuple(c for c in categories.split(";") if c),
                published_date=published_date,
                description=description,
            )
    return entries
