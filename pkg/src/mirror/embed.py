"""Map harmonized summaries to d-dimensional unit vectors.

Providers are pluggable: a remote HTTP embedder for real deployments, and a
local deterministic embedder for offline runs and tests. Vectors are always
L2-normalized after retrieval so cosine similarity equals the dot product.

Privacy note: only harmonized summaries are ever handed to a provider; raw
export fields stay local.
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import EmbeddingAborted, ProviderUnavailable
from .model import EmbeddedItem, HarmonizedItem

# splitmix64 constants; fixed so hashes agree across machines
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_POLY = np.uint64(0x100000001B3)
_SEED_SALT = np.uint64(0x9E3779B97F4A7C15)


class EmbeddingProvider(ABC):
    """Batch text embedder. Results must not depend on batching boundaries."""

    dimension: int
    provider_id: str

    @abstractmethod
    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        """Return an array of shape (len(texts), dimension), one row per text."""


def _mix(h: np.ndarray) -> np.ndarray:
    h = h.copy()
    h ^= h >> np.uint64(30)
    h *= _MIX1
    h ^= h >> np.uint64(27)
    h *= _MIX2
    h ^= h >> np.uint64(31)
    return h


def local_deterministic_embed(text: str, dimension: int = 1536, seed: int = 0) -> np.ndarray:
    """Hashed character n-gram bag (n = 3..5) with signed feature hashing.

    Each n-gram hashes to a bucket and a sign through a seeded 64-bit mix
    with wraparound arithmetic, so outputs are bit-identical across machines.
    The accumulated bag is L2-normalized; empty or degenerate input maps to
    the first unit basis vector.
    """
    vec = np.zeros(dimension, dtype=np.float64)
    data = np.frombuffer(text.lower().encode("utf-8"), dtype=np.uint8).astype(np.uint64)
    seed_mix = _mix(np.array([np.uint64(seed) ^ _SEED_SALT], dtype=np.uint64))[0]
    with np.errstate(over="ignore"):
        for n in (3, 4, 5):
            if len(data) < n:
                continue
            windows = np.lib.stride_tricks.sliding_window_view(data, n)
            h = np.full(len(windows), seed_mix ^ np.uint64(n), dtype=np.uint64)
            for col in range(n):
                h = h * _POLY + windows[:, col]
            h = _mix(h)
            signs = np.where((h >> np.uint64(61)) & np.uint64(1), 1.0, -1.0)
            buckets = (h % np.uint64(dimension)).astype(np.int64)
            np.add.at(vec, buckets, signs)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        vec[0] = 1.0
        return vec
    return vec / norm


class LocalDeterministicEmbedder(EmbeddingProvider):
    def __init__(self, dimension: int = 1536, seed: int = 0):
        self.dimension = dimension
        self.seed = seed
        self.provider_id = f"local-ngram-hash-d{dimension}-s{seed}"

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        out = np.empty((len(texts), self.dimension), dtype=np.float64)
        for i, text in enumerate(texts):
            out[i] = local_deterministic_embed(text, self.dimension, self.seed)
        return out


class RemoteEmbeddingProvider(EmbeddingProvider):
    """HTTP JSON embedder: POST {"model": ..., "input": [...]} -> {"data": [{"embedding": [...]}]}.

    Endpoint, model name, and key come from config/env; the transport is an
    injectable callable so tests never touch the network.
    """

    def __init__(self, endpoint: str, model: str, api_key: str, dimension: int,
                 post_json: Callable[[str, dict, dict], tuple[int, dict]] | None = None):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.dimension = dimension
        self.provider_id = f"remote-{model}"
        self._post_json = post_json or self._default_post

    @staticmethod
    def _default_post(url: str, payload: dict, headers: dict) -> tuple[int, dict]:
        import requests

        resp = requests.post(url, json=payload, headers=headers, timeout=60)
        return resp.status_code, resp.json() if resp.content else {}

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        status, doc = self._post_json(self.endpoint, {"model": self.model, "input": list(texts)},
                                      headers)
        if status != 200:
            raise ProviderUnavailable(f"embedding endpoint returned HTTP {status}")
        rows = [entry["embedding"] for entry in doc["data"]]
        arr = np.asarray(rows, dtype=np.float64)
        if arr.shape != (len(texts), self.dimension):
            raise ProviderUnavailable(f"embedding shape {arr.shape} does not match request")
        return arr


def embedder_from_env(env: dict | None = None,
                      default_dim: int = 1536, default_seed: int = 0) -> EmbeddingProvider:
    """Remote embedder when MIRROR_EMBED_URL/MODEL/KEY are set, else the
    local deterministic one."""
    import os

    env = env if env is not None else dict(os.environ)
    endpoint = env.get("MIRROR_EMBED_URL")
    if endpoint:
        return RemoteEmbeddingProvider(
            endpoint=endpoint,
            model=env.get("MIRROR_EMBED_MODEL", "text-embedding-3-small"),
            api_key=env.get("MIRROR_EMBED_KEY", ""),
            dimension=int(env.get("MIRROR_EMBED_DIM", default_dim)))
    return LocalDeterministicEmbedder(default_dim, default_seed)


def _normalize_rows(arr: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(arr, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return arr / norms


def embed_dataset(items: Sequence[HarmonizedItem], provider: EmbeddingProvider,
                  batch_size: int = 256,
                  checkpoint: dict[str, Sequence[float]] | None = None) -> list[EmbeddedItem]:
    """Embed every summary, order-aligned with the input.

    Already-embedded items from a checkpoint are not re-sent. If the provider
    becomes unavailable partway, EmbeddingAborted carries everything embedded
    so far so the job can resume.
    """
    checkpoint = checkpoint or {}
    done: dict[str, EmbeddedItem] = {}
    for item in items:
        ck = checkpoint.get(item.item.event.id)
        if ck is not None and len(ck) == provider.dimension:
            vec = np.asarray(ck, dtype=np.float64)
            done[item.item.event.id] = EmbeddedItem(
                item_id=item.item.event.id, vector=tuple(vec.tolist()),
                norm=float(np.linalg.norm(vec)))

    pending = [item for item in items if item.item.event.id not in done]
    for start in range(0, len(pending), batch_size):
        batch = pending[start:start + batch_size]
        try:
            raw = provider.embed_batch([item.summary for item in batch])
        except ProviderUnavailable as exc:
            partial = [done[i.item.event.id] for i in items if i.item.event.id in done]
            raise EmbeddingAborted(str(exc), partial=partial) from exc
        if not np.isfinite(raw).all():
            raise ValueError("provider returned non-finite vector components")
        vectors = _normalize_rows(np.asarray(raw, dtype=np.float64))
        for item, vec in zip(batch, vectors):
            done[item.item.event.id] = EmbeddedItem(
                item_id=item.item.event.id, vector=tuple(vec.tolist()),
                norm=float(np.linalg.norm(vec)))
    return [done[item.item.event.id] for item in items]


# ---------------------------------------------------------------------------
# On-disk vector store: little-endian float32 matrix + JSON sidecar
# ---------------------------------------------------------------------------

def write_vectors(path: Path, embedded: Sequence[EmbeddedItem], provider_id: str) -> None:
    path = Path(path)
    matrix = np.asarray([e.vector for e in embedded], dtype="<f4")
    path.write_bytes(matrix.tobytes())
    sidecar = {
        "dimension": int(matrix.shape[1]) if len(embedded) else 0,
        "count": len(embedded),
        "item_ids": [e.item_id for e in embedded],
        "provider_id": provider_id,
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar))


def read_vectors(path: Path) -> tuple[np.ndarray, list[str], str]:
    """Returns (matrix float64, item ids, provider id)."""
    path = Path(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    raw = np.frombuffer(path.read_bytes(), dtype="<f4")
    matrix = raw.reshape(sidecar["count"], sidecar["dimension"]).astype(np.float64)
    return matrix, sidecar["item_ids"], sidecar["provider_id"]
