"""mirror: watch-history exports in, explorable semantic map out.

The pipeline parses YouTube/Netflix/TikTok export files, enriches and
harmonizes the metadata, embeds every item, lays the collection out in 2D,
clusters and labels topics, and serves the result over HTTP with a timeline.
"""

from .config import DEFAULT_CONFIG, DatasetConfig
from .model import (EmbeddedItem, EnrichedItem, EnrichmentSource, HarmonizedItem,
                    HarmonizerKind, MapPoint, Platform, TopicLabel, WatchEvent,
                    event_id)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CONFIG",
    "DatasetConfig",
    "EmbeddedItem",
    "EnrichedItem",
    "EnrichmentSource",
    "HarmonizedItem",
    "HarmonizerKind",
    "MapPoint",
    "Platform",
    "TopicLabel",
    "WatchEvent",
    "event_id",
    "__version__",
]
