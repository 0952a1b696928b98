"""Dataset-level configuration.

Every tunable that affects pipeline output lives here so a dataset's results
are reproducible from its config snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict, field, fields


@dataclass(frozen=True)
class DatasetConfig:
    # Ingestion
    timezone: str = "UTC"  # IANA name; Netflix date-only rows resolve to midnight here
    day_first_dates: bool = True
    include_ads: bool = True
    max_upload_bytes: int = 256 * 1024 * 1024

    # Enrichment / harmonization
    transcript_max_chars: int = 2000
    max_summary_words: int = 40
    provider_concurrency: int = 4
    provider_retries: int = 3
    retry_base_seconds: float = 0.05

    # Embedding
    embedding_dim: int = 1536
    embedding_seed: int = 0
    embedding_batch_size: int = 256

    # Layout
    n_neighbors: int = 15
    min_dist: float = 0.1
    n_epochs: int | None = None  # None: 500 when N <= 10_000 else 200
    learning_rate: float = 1.0
    negative_sample_rate: int = 5
    layout_seed: int = 42
    layout_init: str = "spectral"  # or "random"

    # Topics
    min_cluster_size: int = 5
    label_zoom_levels: int = 5  # quantile buckets for topic min_zoom

    # Serving
    map_zoom_levels: int = 6  # viewer zoom range [0, 5]
    default_max_points: int = 2000

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


DEFAULT_CONFIG = DatasetConfig()
