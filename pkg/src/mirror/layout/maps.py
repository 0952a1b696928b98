"""Layout builders: the semantic map plus the grid and semantic-axes views."""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from ..errors import ConceptEmbedFailed
from ..embed import EmbeddingProvider
from ..model import EmbeddedItem, MapPoint, WatchEvent
from ..topics import TopicTree
from .base import FuzzyGraph, Layout2D, LayoutConfig
from .fuzzy import fuzzy_simplicial_set
from .knn import knn_graph
from .optimize import optimize_layout


def compute_semantic_map(vectors: np.ndarray, config: LayoutConfig,
                         knn_method: str = "auto") -> tuple[np.ndarray, FuzzyGraph | None]:
    """Full reduction pipeline: kNN graph, fuzzy weights, 2D optimization."""
    n = len(vectors)
    if n == 1:
        return np.zeros((1, 2)), None
    if n == 2:
        return np.array([[0.0, 0.0], [1.0, 0.0]]), None
    k = min(config.n_neighbors, n - 1)
    if k != config.n_neighbors:
        config = LayoutConfig(**{**config.to_dict(), "n_neighbors": k})
    config.validate(n)
    graph = knn_graph(vectors, k, seed=config.seed, method=knn_method)
    fuzzy = fuzzy_simplicial_set(graph)
    coords = optimize_layout(fuzzy, config)
    return coords, fuzzy


def _points_from_coords(coords: np.ndarray, embedded: Sequence[EmbeddedItem],
                        events: Mapping[str, WatchEvent],
                        topic_of: Mapping[str, str] | None = None) -> list[MapPoint]:
    points = []
    for row, item in zip(coords, embedded):
        event = events[item.item_id]
        topic = (topic_of or {}).get(item.item_id) or None
        points.append(MapPoint(item_id=item.item_id, x=float(row[0]), y=float(row[1]),
                               platform=event.platform, watched_at=event.watched_at,
                               topic_id=topic))
    return points


def semantic_map_layout(embedded: Sequence[EmbeddedItem], events: Mapping[str, WatchEvent],
                        config: LayoutConfig, layout_id: str = "semantic_map",
                        knn_method: str = "auto") -> tuple[Layout2D, FuzzyGraph | None]:
    matrix = np.asarray([e.vector for e in embedded], dtype=np.float64)
    coords, fuzzy = compute_semantic_map(matrix, config, knn_method)
    layout = Layout2D(layout_id=layout_id, kind="semantic_map",
                      points=_points_from_coords(coords, embedded, events),
                      config=config.to_dict())
    return layout, fuzzy


def _near_square(n: int) -> tuple[int, int]:
    cols = max(1, math.ceil(math.sqrt(n)))
    rows = max(1, math.ceil(n / cols))
    return rows, cols


def grid_layout(points: Sequence[MapPoint], tree: TopicTree,
                layout_id: str = "grid") -> Layout2D:
    """Topics as grid cells ordered by descending frequency (ties by label);
    items inside a cell form a watch-order sub-grid. Re-flows identically for
    the same input, so removing a topic reproduces the smaller layout.
    """
    by_id = {p.item_id: p for p in points}
    cells: list[tuple[str, list[MapPoint]]] = []
    ordered = sorted(tree.topics, key=lambda t: (-t.label.frequency, t.label.label,
                                                 t.label.topic_id))
    clustered_ids = set()
    for node in ordered:
        members = [by_id[i] for i in node.member_ids if i in by_id]
        clustered_ids.update(m.item_id for m in members)
        if members:
            cells.append((node.label.topic_id, members))
    noise = [p for p in points if p.item_id not in clustered_ids]
    if noise:
        cells.append((None, noise))

    rows, cols = _near_square(len(cells))
    out: list[MapPoint] = []
    for cell_index, (topic_id, members) in enumerate(cells):
        cell_r, cell_c = divmod(cell_index, cols)
        members = sorted(members, key=lambda p: (p.watched_at, p.item_id))
        sub_rows, sub_cols = _near_square(len(members))
        for i, p in enumerate(members):
            sr, sc = divmod(i, sub_cols)
            x = cell_c + 0.05 + 0.9 * (sc + 0.5) / sub_cols
            y = cell_r + 0.05 + 0.9 * (sr + 0.5) / sub_rows
            out.append(MapPoint(item_id=p.item_id, x=x, y=y, platform=p.platform,
                                watched_at=p.watched_at, topic_id=topic_id))
    out.sort(key=lambda p: (p.watched_at, p.item_id))
    return Layout2D(layout_id=layout_id, kind="grid", points=out,
                    config={"cells": len(cells), "cols": cols, "rows": rows})


def _rescale_axis(values: np.ndarray) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 0.0:
        return np.full_like(values, 0.5)  # degenerate axis pins to the middle
    return (values - lo) / (hi - lo)


def semantic_axes_layout(embedded: Sequence[EmbeddedItem], x_concept: str, y_concept: str,
                         provider: EmbeddingProvider, events: Mapping[str, WatchEvent],
                         topic_of: Mapping[str, str] | None = None,
                         time_x: bool = False, layout_id: str = "axes") -> Layout2D:
    """Place each item by cosine similarity to two concept embeddings,
    min-max rescaled to [0, 1] per axis. With time_x, the x axis becomes
    normalized watch time instead."""
    if not x_concept.strip() and not time_x:
        raise ValueError("x_concept must be non-empty")
    if not y_concept.strip():
        raise ValueError("y_concept must be non-empty")
    matrix = np.asarray([e.vector for e in embedded], dtype=np.float64)

    def concept_vector(text: str) -> np.ndarray:
        try:
            vec = np.asarray(provider.embed_batch([text])[0], dtype=np.float64)
        except Exception as exc:
            raise ConceptEmbedFailed(f"could not embed concept {text!r}: {exc}") from exc
        norm = np.linalg.norm(vec)
        if not np.isfinite(norm) or norm == 0.0:
            raise ConceptEmbedFailed(f"degenerate embedding for concept {text!r}")
        return vec / norm

    if time_x:
        times = np.array([events[e.item_id].watched_at.timestamp() for e in embedded])
        xs = _rescale_axis(times)
        x_name = "time"
    else:
        xs = _rescale_axis(matrix @ concept_vector(x_concept))
        x_name = x_concept
    ys = _rescale_axis(matrix @ concept_vector(y_concept))

    coords = np.stack([xs, ys], axis=1)
    return Layout2D(layout_id=layout_id, kind="semantic_axes",
                    points=_points_from_coords(coords, embedded, events, topic_of),
                    config={"time_x": time_x},
                    axis_concepts=(x_name, y_concept))
