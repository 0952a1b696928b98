from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pytest

from mirror.config import DatasetConfig
from mirror.enrichment import FixtureProvider, ProviderKind
from mirror.ingestion import ExportBundle
from mirror.model import Platform, WatchEvent

FIXTURES = Path(__file__).parent / "fixtures"

PII_SENTINELS = [
    "PII_SENTINEL_EMAIL_a8b4@example.com",
    "PII-SENTINEL-ACCOUNT-0042",
    "PII_SENTINEL_IP_10.99.88.77",
    "PII-SENTINEL-PHONE-0042",
]

# Fixture exports are dated in 2023-2025; pin "now" so future-timestamp
# rejection is stable forever.
NOW = datetime(2026, 1, 1, tzinfo=timezone.utc)


def load_fixture(name: str) -> bytes:
    return (FIXTURES / name).read_bytes()


def bundle_for(platform: Platform, *names: str) -> ExportBundle:
    return ExportBundle(platform=platform,
                        files=[(name, load_fixture(name)) for name in names])


@pytest.fixture
def youtube_bundle() -> ExportBundle:
    return bundle_for(Platform.YOUTUBE, "youtube_watch_history.json")


@pytest.fixture
def netflix_bundle() -> ExportBundle:
    return bundle_for(Platform.NETFLIX, "netflix_viewing_activity.csv")


@pytest.fixture
def tiktok_bundle() -> ExportBundle:
    return bundle_for(Platform.TIKTOK, "tiktok_export.json")


@pytest.fixture
def all_fixture_files() -> list[tuple[str, bytes]]:
    names = ["youtube_watch_history.json", "netflix_viewing_activity.csv",
             "tiktok_export.json"]
    return [(n, load_fixture(n)) for n in names]


def fixture_providers() -> dict[Platform, FixtureProvider]:
    return {
        Platform.NETFLIX: FixtureProvider(directory=FIXTURES / "providers",
                                          mimic=ProviderKind.TMDB),
        Platform.TIKTOK: FixtureProvider(directory=FIXTURES / "providers",
                                         mimic=ProviderKind.URL_RESOLVER),
        Platform.YOUTUBE: FixtureProvider(directory=FIXTURES / "providers",
                                          mimic=ProviderKind.TRANSCRIPT_API),
    }


@pytest.fixture
def providers() -> dict[Platform, FixtureProvider]:
    return fixture_providers()


@pytest.fixture
def config() -> DatasetConfig:
    return DatasetConfig()


def make_event(platform=Platform.YOUTUBE, title="video", url=None,
               watched_at=None) -> WatchEvent:
    watched_at = watched_at or datetime(2024, 1, 1, tzinfo=timezone.utc)
    return WatchEvent.create(platform, title, url, watched_at)


def three_gaussian_vectors(n_per_cluster: int = 100, dim: int = 10, scale: float = 0.05,
                           seed: int = 7) -> tuple[np.ndarray, np.ndarray]:
    """Unit-norm vectors in three tight, mutually distant clusters."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(3, dim)) * 5.0
    points = np.concatenate(
        [c + rng.normal(scale=scale, size=(n_per_cluster, dim)) for c in centers])
    labels = np.repeat(np.arange(3), n_per_cluster)
    points /= np.linalg.norm(points, axis=1, keepdims=True)
    return points, labels


def kmeans_purity(coords: np.ndarray, true_labels: np.ndarray, k: int = 3) -> float:
    """Independent oracle: sklearn k-means with 10 restarts, majority purity."""
    from collections import Counter

    from sklearn.cluster import KMeans

    pred = KMeans(n_clusters=k, n_init=10, random_state=0).fit_predict(coords)
    matched = sum(Counter(true_labels[pred == c]).most_common(1)[0][1]
                  for c in range(k) if (pred == c).any())
    return matched / len(coords)


def brute_force_trustworthiness(high: np.ndarray, low: np.ndarray, k: int = 15) -> float:
    """Standard trustworthiness, computed directly from full distance matrices."""
    n = len(high)
    d_high = np.linalg.norm(high[:, None] - high[None], axis=2)
    d_low = np.linalg.norm(low[:, None] - low[None], axis=2)
    np.fill_diagonal(d_high, np.inf)
    np.fill_diagonal(d_low, np.inf)
    rank_high = np.argsort(np.argsort(d_high, axis=1), axis=1)  # 0 = nearest
    penalty = 0.0
    for i in range(n):
        high_nn = set(np.argsort(d_high[i])[:k])
        for j in np.argsort(d_low[i])[:k]:
            if j not in high_nn:
                penalty += rank_high[i, j] + 1 - k
    return 1.0 - 2.0 / (n * k * (2 * n - 3 * k - 1)) * penalty
