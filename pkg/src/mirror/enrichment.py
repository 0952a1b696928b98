"""Fill missing title/description metadata via pluggable provider clients.

All network access lives behind MetadataProvider so the pipeline runs fully
offline with fixture providers. Lookups are cached (misses included) and a
cache hit never triggers a provider call. Provider failures degrade to
misses; they never abort the pipeline.
"""

from __future__ import annotations

import json
import logging
import re
import threading
import time
from abc import ABC, abstractmethod
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

from .config import DatasetConfig, DEFAULT_CONFIG
from .errors import ProviderUnavailable, RateLimited
from .model import EnrichedItem, EnrichmentSource, Platform, WatchEvent

log = logging.getLogger(__name__)

LookupResult = tuple[str, str] | None  # (title, description)
HttpGet = Callable[[str], tuple[int, bytes]]  # url -> (status, body)


class ProviderKind(str, Enum):
    URL_RESOLVER = "url_resolver"
    TRANSCRIPT_API = "transcript_api"
    TMDB = "tmdb"
    FIXTURE = "fixture"


_KIND_TO_SOURCE = {
    ProviderKind.URL_RESOLVER: EnrichmentSource.URL_RESOLUTION,
    ProviderKind.TRANSCRIPT_API: EnrichmentSource.TRANSCRIPT_API,
    ProviderKind.TMDB: EnrichmentSource.TMDB,
}


class MetadataProvider(ABC):
    """Looks up (title, description) for one event; None on miss."""

    kind: ProviderKind
    source: EnrichmentSource

    @abstractmethod
    def lookup(self, event: WatchEvent) -> LookupResult:
        ...

    def lookup_key(self, event: WatchEvent) -> str:
        return event.raw_url or event.raw_title or event.id


class EnrichmentCache:
    """Persistent (provider kind, lookup key) -> result map.

    Entries, including negative ones, live until an explicit flush; a hit
    never reaches the provider. Safe for concurrent readers and writers.
    """

    def __init__(self, path: Path | None = None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self._data: dict[str, dict] = {}
        if self.path and self.path.exists():
            self._data = json.loads(self.path.read_text())

    @staticmethod
    def _key(kind: str, lookup_key: str) -> str:
        return f"{kind}:{lookup_key}"

    def get(self, kind: str, lookup_key: str):
        """Returns (found, result)."""
        with self._lock:
            entry = self._data.get(self._key(kind, lookup_key))
        if entry is None:
            return False, None
        result = entry["result"]
        return True, tuple(result) if result is not None else None

    def put(self, kind: str, lookup_key: str, result: LookupResult) -> None:
        entry = {
            "result": list(result) if result is not None else None,
            "fetched_at": datetime.now(timezone.utc).isoformat(),
        }
        with self._lock:
            self._data[self._key(kind, lookup_key)] = entry
            self._persist()

    def flush(self) -> None:
        with self._lock:
            self._data = {}
            self._persist()

    def _persist(self) -> None:
        if self.path:
            tmp = self.path.with_suffix(".tmp")
            tmp.write_text(json.dumps(self._data))
            tmp.replace(self.path)


@dataclass
class EnrichmentReport:
    hits: Counter = field(default_factory=Counter)
    misses: Counter = field(default_factory=Counter)
    cache_hits: int = 0
    provider_calls: int = 0

    def to_dict(self) -> dict:
        return {
            "hits": dict(self.hits),
            "misses": dict(self.misses),
            "cache_hits": self.cache_hits,
            "provider_calls": self.provider_calls,
        }


def _fallback_item(event: WatchEvent) -> EnrichedItem:
    return EnrichedItem(
        event=event,
        title=event.raw_title or event.raw_url,
        description="",
        enrichment_source=EnrichmentSource.NONE,
    )


def _lookup_with_retry(provider: MetadataProvider, event: WatchEvent,
                       config: DatasetConfig) -> LookupResult:
    for attempt in range(config.provider_retries):
        try:
            return provider.lookup(event)
        except RateLimited as exc:
            wait = exc.retry_after or config.retry_base_seconds * (2 ** attempt)
            time.sleep(wait)
        except ProviderUnavailable as exc:
            log.warning("provider %s unavailable: %s", provider.kind.value, exc)
            return None
    return None


def enrich(events: Sequence[WatchEvent],
           providers: dict[Platform, MetadataProvider],
           cache: EnrichmentCache | None = None,
           config: DatasetConfig = DEFAULT_CONFIG) -> tuple[list[EnrichedItem], EnrichmentReport]:
    """Turn every event into an EnrichedItem, falling back to export fields.

    Lookups fan out on a small thread pool per the configured concurrency;
    output order is normalized to (watched_at, id) regardless of completion
    order.
    """
    cache = cache if cache is not None else EnrichmentCache()
    report = EnrichmentReport()
    report_lock = threading.Lock()

    def enrich_one(event: WatchEvent) -> EnrichedItem:
        provider = providers.get(event.platform)
        if provider is None:
            with report_lock:
                report.misses["unconfigured"] += 1
            return _fallback_item(event)
        key = provider.lookup_key(event)
        found, result = cache.get(provider.kind.value, key)
        if found:
            with report_lock:
                report.cache_hits += 1
        else:
            result = _lookup_with_retry(provider, event, config)
            cache.put(provider.kind.value, key, result)
            with report_lock:
                report.provider_calls += 1
        with report_lock:
            if result is None:
                report.misses[provider.kind.value] += 1
            else:
                report.hits[provider.kind.value] += 1
        if result is None:
            return _fallback_item(event)
        found_title, description = result
        title = event.raw_title or found_title or event.raw_url
        description = (description or "")[: config.transcript_max_chars]
        if not description:
            return EnrichedItem(event=event, title=title, description="",
                                enrichment_source=EnrichmentSource.NONE)
        return EnrichedItem(event=event, title=title, description=description,
                            enrichment_source=provider.source)

    if len(events) <= 1 or config.provider_concurrency <= 1:
        items = [enrich_one(e) for e in events]
    else:
        with ThreadPoolExecutor(max_workers=config.provider_concurrency) as pool:
            items = list(pool.map(enrich_one, events))
    items.sort(key=lambda it: (it.event.watched_at, it.event.id))
    return items, report


# ---------------------------------------------------------------------------
# Concrete providers
# ---------------------------------------------------------------------------

def default_http_get(url: str, timeout: float = 10.0) -> tuple[int, bytes]:
    import requests

    resp = requests.get(url, timeout=timeout)
    if resp.status_code == 429:
        retry = resp.headers.get("Retry-After")
        raise RateLimited(retry_after=float(retry) if retry else None)
    return resp.status_code, resp.content


def resolve_tiktok_url(url: str, http_get: HttpGet) -> LookupResult:
    """Resolve a video URL to the creator's title and caption via oEmbed.

    Deleted videos (404/410) and malformed payloads resolve to None.
    """
    status, body = http_get(f"https://www.tiktok.com/oembed?url={url}")
    if status in (404, 410):
        return None
    if status != 200:
        log.info("tiktok resolve %s -> HTTP %s", url, status)
        return None
    try:
        doc = json.loads(body.decode("utf-8", errors="replace"))
        title = doc["title"]
    except (json.JSONDecodeError, KeyError, TypeError):
        log.info("tiktok resolve %s -> bad_payload", url)
        return None
    caption = doc.get("description") or title
    return title, caption


class TikTokUrlResolver(MetadataProvider):
    kind = ProviderKind.URL_RESOLVER
    source = EnrichmentSource.URL_RESOLUTION

    def __init__(self, http_get: HttpGet = default_http_get):
        self.http_get = http_get

    def lookup(self, event: WatchEvent) -> LookupResult:
        if not event.raw_url:
            return None
        return resolve_tiktok_url(event.raw_url, self.http_get)


class YouTubeTranscriptProvider(MetadataProvider):
    """Fetches the automatic transcript for a video id; title stays the export's."""

    kind = ProviderKind.TRANSCRIPT_API
    source = EnrichmentSource.TRANSCRIPT_API

    _VIDEO_ID_RE = re.compile(r"(?:v=|youtu\.be/|/shorts/)([\w-]{6,})")

    def __init__(self, endpoint_template: str, http_get: HttpGet = default_http_get,
                 max_chars: int = 2000):
        self.endpoint_template = endpoint_template
        self.http_get = http_get
        self.max_chars = max_chars

    def lookup(self, event: WatchEvent) -> LookupResult:
        match = self._VIDEO_ID_RE.search(event.raw_url or "")
        if not match:
            return None
        status, body = self.http_get(self.endpoint_template.format(video_id=match.group(1)))
        if status != 200 or not body:
            return None
        transcript = body.decode("utf-8", errors="replace")[: self.max_chars]
        return (event.raw_title or "", transcript)


class TmdbProvider(MetadataProvider):
    """Looks up a title's synopsis; season/episode suffixes are stripped first."""

    kind = ProviderKind.TMDB
    source = EnrichmentSource.TMDB

    _SUFFIX_RE = re.compile(r"(:\s*(season|series|part|volume|limited series)\b.*$|:\s*episode\b.*$)",
                            re.IGNORECASE)

    def __init__(self, search_template: str, api_key: str = "",
                 http_get: HttpGet = default_http_get):
        self.search_template = search_template
        self.api_key = api_key
        self.http_get = http_get

    def query_title(self, raw_title: str) -> str:
        return self._SUFFIX_RE.sub("", raw_title).strip()

    def lookup(self, event: WatchEvent) -> LookupResult:
        if not event.raw_title:
            return None
        query = self.query_title(event.raw_title)
        from urllib.parse import quote

        status, body = self.http_get(
            self.search_template.format(query=quote(query), api_key=self.api_key))
        if status != 200:
            return None
        try:
            doc = json.loads(body.decode("utf-8", errors="replace"))
            results = doc["results"]
        except (json.JSONDecodeError, KeyError, TypeError):
            return None
        if not results:
            return None
        top = results[0]  # the API's own ranking decides disambiguation
        overview = top.get("overview") or ""
        name = top.get("name") or top.get("title") or query
        if not overview:
            return None
        return name, overview


DEFAULT_TMDB_SEARCH = ("https://api.themoviedb.org/3/search/multi"
                       "?query={query}&api_key={api_key}")


def providers_from_env(env: dict | None = None) -> dict[Platform, MetadataProvider]:
    """Build the per-platform provider map from environment configuration.

    MIRROR_TMDB_KEY enables the Netflix synopsis lookup (template override:
    MIRROR_TMDB_URL), MIRROR_TRANSCRIPT_URL the YouTube transcripts
    ({video_id} placeholder), MIRROR_TIKTOK_RESOLVE=0 disables the oEmbed
    resolver. Unset pieces simply leave that platform unenriched.
    """
    import os

    env = env if env is not None else dict(os.environ)
    providers: dict[Platform, MetadataProvider] = {}
    tmdb_key = env.get("MIRROR_TMDB_KEY")
    if tmdb_key:
        providers[Platform.NETFLIX] = TmdbProvider(
            search_template=env.get("MIRROR_TMDB_URL", DEFAULT_TMDB_SEARCH),
            api_key=tmdb_key)
    transcript_url = env.get("MIRROR_TRANSCRIPT_URL")
    if transcript_url:
        providers[Platform.YOUTUBE] = YouTubeTranscriptProvider(transcript_url)
    if env.get("MIRROR_TIKTOK_RESOLVE", "1") != "0":
        providers[Platform.TIKTOK] = TikTokUrlResolver()
    return providers


class FixtureProvider(MetadataProvider):
    """Offline provider backed by a dict or a directory of canned responses.

    Fixture files are JSON maps of lookup key -> [title, description] | null.
    Mimics a real provider kind so items are stamped with that source.
    """

    def __init__(self, responses: dict[str, LookupResult] | None = None,
                 directory: Path | None = None,
                 mimic: ProviderKind = ProviderKind.FIXTURE):
        self.kind = mimic
        self.source = _KIND_TO_SOURCE.get(mimic, EnrichmentSource.URL_RESOLUTION)
        self.calls = 0
        self.responses: dict[str, LookupResult] = dict(responses or {})
        if directory is not None:
            for path in sorted(Path(directory).glob("*.json")):
                for key, value in json.loads(path.read_text()).items():
                    self.responses[key] = tuple(value) if value is not None else None

    def lookup(self, event: WatchEvent) -> LookupResult:
        self.calls += 1
        result = self.responses.get(self.lookup_key(event))
        return tuple(result) if result is not None else None
