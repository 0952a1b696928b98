"""Shared domain types and identifiers.

All types are immutable values with canonical JSON encodings: snake_case
field names, RFC 3339 timestamps (UTC, second precision). Every type
round-trips through ``to_dict`` / ``from_dict``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum


class Platform(str, Enum):
    YOUTUBE = "youtube"
    NETFLIX = "netflix"
    TIKTOK = "tiktok"


class EnrichmentSource(str, Enum):
    EXPORT = "export"
    URL_RESOLUTION = "url_resolution"
    TRANSCRIPT_API = "transcript_api"
    TMDB = "tmdb"
    NONE = "none"


class HarmonizerKind(str, Enum):
    PROVIDER = "provider"
    RULE_FALLBACK = "rule_fallback"


def format_timestamp(ts: datetime) -> str:
    """RFC 3339 with second precision, always rendered in UTC with a Z suffix."""
    if ts.tzinfo is None:
        raise ValueError("timestamp must be timezone-aware")
    return ts.astimezone(timezone.utc).replace(microsecond=0).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str) -> datetime:
    """Parse an RFC 3339 timestamp to a UTC datetime (second precision)."""
    normalized = text.strip()
    if normalized.endswith(("Z", "z")):
        normalized = normalized[:-1] + "+00:00"
    ts = datetime.fromisoformat(normalized)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def event_id(platform: Platform, title_or_url: str, watched_at: datetime) -> str:
    """Deterministic 128-bit hex id for one viewing record.

    Equal inputs produce equal ids across runs and machines, which makes
    re-ingestion of the same export idempotent. The digest is BLAKE2b-128
    over the platform, the URL-or-title key, and the UTC timestamp.
    """
    if not title_or_url:
        raise ValueError("title_or_url must be non-empty")
    preimage = "\n".join([Platform(platform).value, title_or_url, format_timestamp(watched_at)])
    return hashlib.blake2b(preimage.encode("utf-8"), digest_size=16).hexdigest()


@dataclass(frozen=True)
class WatchEvent:
    """One normalized viewing record from any platform."""

    id: str
    platform: Platform
    raw_title: str | None
    raw_url: str | None
    watched_at: datetime

    def __post_init__(self):
        if not (self.raw_title or self.raw_url):
            raise ValueError("WatchEvent needs at least one of raw_title, raw_url")
        if self.watched_at.tzinfo is None:
            raise ValueError("watched_at must be timezone-aware")

    @classmethod
    def create(cls, platform: Platform, raw_title: str | None, raw_url: str | None,
               watched_at: datetime) -> "WatchEvent":
        """Build an event with its deterministic id (URL preferred as key)."""
        key = raw_url or raw_title
        return cls(
            id=event_id(platform, key, watched_at),
            platform=Platform(platform),
            raw_title=raw_title or None,
            raw_url=raw_url or None,
            watched_at=watched_at.astimezone(timezone.utc).replace(microsecond=0),
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "platform": self.platform.value,
            "raw_title": self.raw_title,
            "raw_url": self.raw_url,
            "watched_at": format_timestamp(self.watched_at),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WatchEvent":
        return cls(
            id=data["id"],
            platform=Platform(data["platform"]),
            raw_title=data.get("raw_title"),
            raw_url=data.get("raw_url"),
            watched_at=parse_timestamp(data["watched_at"]),
        )


@dataclass(frozen=True)
class EnrichedItem:
    """A WatchEvent with title/description filled from external metadata."""

    event: WatchEvent
    title: str
    description: str
    enrichment_source: EnrichmentSource

    def __post_init__(self):
        if not self.title:
            raise ValueError("EnrichedItem title must be non-empty")
        if not self.description and self.enrichment_source != EnrichmentSource.NONE:
            raise ValueError("empty description only allowed with enrichment_source=none")

    def to_dict(self) -> dict:
        return {
            "event": self.event.to_dict(),
            "title": self.title,
            "description": self.description,
            "enrichment_source": self.enrichment_source.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EnrichedItem":
        return cls(
            event=WatchEvent.from_dict(data["event"]),
            title=data["title"],
            description=data["description"],
            enrichment_source=EnrichmentSource(data["enrichment_source"]),
        )


@dataclass(frozen=True)
class HarmonizedItem:
    """An EnrichedItem with a short, content-only summary."""

    item: EnrichedItem
    summary: str
    harmonizer: HarmonizerKind

    def __post_init__(self):
        if not self.summary.strip():
            raise ValueError("summary must be non-empty")

    def to_dict(self) -> dict:
        return {
            "item": self.item.to_dict(),
            "summary": self.summary,
            "harmonizer": self.harmonizer.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HarmonizedItem":
        return cls(
            item=EnrichedItem.from_dict(data["item"]),
            summary=data["summary"],
            harmonizer=HarmonizerKind(data["harmonizer"]),
        )


@dataclass(frozen=True)
class EmbeddedItem:
    """A harmonized summary's d-dimensional semantic vector."""

    item_id: str
    vector: tuple[float, ...]
    norm: float

    def to_dict(self) -> dict:
        return {"item_id": self.item_id, "vector": list(self.vector), "norm": self.norm}

    @classmethod
    def from_dict(cls, data: dict) -> "EmbeddedItem":
        return cls(item_id=data["item_id"], vector=tuple(data["vector"]), norm=data["norm"])


@dataclass(frozen=True)
class MapPoint:
    """A 2D layout coordinate for one item."""

    item_id: str
    x: float
    y: float
    platform: Platform
    watched_at: datetime
    topic_id: str | None = None

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "x": self.x,
            "y": self.y,
            "platform": self.platform.value,
            "watched_at": format_timestamp(self.watched_at),
            "topic_id": self.topic_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MapPoint":
        return cls(
            item_id=data["item_id"],
            x=data["x"],
            y=data["y"],
            platform=Platform(data["platform"]),
            watched_at=parse_timestamp(data["watched_at"]),
            topic_id=data.get("topic_id"),
        )


@dataclass(frozen=True)
class TopicLabel:
    """A ranked cluster label with its position and zoom visibility level."""

    topic_id: str
    label: str
    frequency: int
    centroid: tuple[float, float]
    min_zoom: int

    def to_dict(self) -> dict:
        return {
            "topic_id": self.topic_id,
            "label": self.label,
            "frequency": self.frequency,
            "centroid": list(self.centroid),
            "min_zoom": self.min_zoom,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TopicLabel":
        return cls(
            topic_id=data["topic_id"],
            label=data["label"],
            frequency=data["frequency"],
            centroid=tuple(data["centroid"]),
            min_zoom=data["min_zoom"],
        )
