from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from mirror.embed import LocalDeterministicEmbedder
from mirror.errors import ConceptEmbedFailed
from mirror.layout import grid_layout, semantic_axes_layout
from mirror.model import EmbeddedItem, MapPoint, Platform, TopicLabel, WatchEvent
from mirror.topics import TopicNode, TopicTree

T0 = datetime(2024, 1, 1, tzinfo=timezone.utc)


def make_points(n, topic_ids=None):
    points = []
    for i in range(n):
        points.append(MapPoint(item_id=f"i{i:03d}", x=float(i), y=0.0,
                               platform=Platform.YOUTUBE,
                               watched_at=T0 + timedelta(hours=i),
                               topic_id=(topic_ids or {}).get(i)))
    return points


def tree_of(*groups):
    """groups: (topic_id, label, [point indices])"""
    topics = []
    for topic_id, label, members in groups:
        topics.append(TopicNode(
            label=TopicLabel(topic_id=topic_id, label=label, frequency=len(members),
                             centroid=(0.0, 0.0), min_zoom=0),
            member_ids=[f"i{i:03d}" for i in members]))
    return TopicTree(topics=topics)


class TestGridLayout:
    def test_single_topic_four_items_is_2x2(self):
        points = make_points(4)
        tree = tree_of(("t0", "alpha", [0, 1, 2, 3]))
        layout = grid_layout(points, tree)
        coords = {p.item_id: (p.x, p.y) for p in layout.points}
        xs = sorted({round(x, 3) for x, _ in coords.values()})
        ys = sorted({round(y, 3) for _, y in coords.values()})
        assert len(xs) == 2 and len(ys) == 2  # 2x2 sub-grid
        assert all(0.0 <= x <= 1.0 and 0.0 <= y <= 1.0 for x, y in coords.values())
        # watch order fills row-major: earliest item at the top-left
        assert coords["i000"] == (min(xs), min(ys))

    def test_topic_cells_ordered_by_frequency_then_label(self):
        points = make_points(20)
        tree = tree_of(("tb", "zebra", list(range(10))),
                       ("ta", "apple", [10, 11, 12, 13, 14]),
                       ("tc", "mango", [15, 16, 17, 18, 19]))
        layout = grid_layout(points, tree)
        cell_of = {p.item_id: (int(p.y), int(p.x)) for p in layout.points}
        # 10-item topic first; 5/5 tie broken lexicographically: apple before mango
        assert cell_of["i000"] == (0, 0)
        assert cell_of["i010"] == (0, 1)  # apple
        assert cell_of["i015"] == (1, 0)  # mango wraps to next row (2-col grid)

    def test_removing_topic_reflows_identically(self):
        points = make_points(12)
        full = tree_of(("t0", "a", [0, 1, 2, 3]), ("t1", "b", [4, 5, 6, 7]),
                       ("t2", "c", [8, 9, 10, 11]))
        reduced = tree_of(("t0", "a", [0, 1, 2, 3]), ("t1", "b", [4, 5, 6, 7]))
        layout_reduced = grid_layout(points[:8], reduced)
        layout_full_minus = grid_layout(points[:8], reduced)
        assert layout_reduced.to_dict()["points"] == layout_full_minus.to_dict()["points"]

    def test_noise_points_get_trailing_cell(self):
        points = make_points(6)
        tree = tree_of(("t0", "a", [0, 1, 2, 3]))
        layout = grid_layout(points, tree)
        noise = [p for p in layout.points if p.topic_id is None]
        assert len(noise) == 2
        assert all(p.x >= 1.0 for p in noise)  # after the only topic cell


def embedded_fixture():
    provider = LocalDeterministicEmbedder(32, 0)
    texts = ["cats playing piano", "dogs in the park", "piano practice session",
             "city travel guide", "cooking rice properly"]
    vectors = provider.embed_batch(texts)
    items, events = [], {}
    for i, row in enumerate(vectors):
        item_id = f"i{i:03d}"
        items.append(EmbeddedItem(item_id=item_id, vector=tuple(row.tolist()),
                                  norm=float(np.linalg.norm(row))))
        events[item_id] = WatchEvent.create(
            Platform.YOUTUBE, texts[i], None, T0 + timedelta(days=i))
    return provider, items, events, vectors


class TestSemanticAxes:
    def test_matches_independent_cosine_script(self):
        provider, items, events, vectors = embedded_fixture()
        layout = semantic_axes_layout(items, "piano music", "outdoor animals",
                                      provider, events)
        # independent recomputation: raw cosine then min-max, straight numpy
        x_vec = provider.embed_batch(["piano music"])[0]
        y_vec = provider.embed_batch(["outdoor animals"])[0]
        for vec, name in [(x_vec, "x"), (y_vec, "y")]:
            cos = vectors @ (vec / np.linalg.norm(vec))
            expected = (cos - cos.min()) / (cos.max() - cos.min())
            got = np.array([getattr(p, name) for p in layout.points])
            assert np.allclose(got, expected, atol=1e-9)

    def test_item_equal_to_concept_is_axis_max(self):
        provider, items, events, vectors = embedded_fixture()
        layout = semantic_axes_layout(items, "cats playing piano", "dogs in the park",
                                      provider, events)
        assert layout.points[0].x == max(p.x for p in layout.points) == 1.0
        assert layout.points[1].y == max(p.y for p in layout.points) == 1.0

    def test_degenerate_axis_pins_to_half(self):
        provider, items, events, _ = embedded_fixture()
        same = [EmbeddedItem(item_id=i.item_id, vector=items[0].vector, norm=1.0)
                for i in items]
        layout = semantic_axes_layout(same, "anything", "else", provider, events)
        assert all(p.x == 0.5 for p in layout.points)
        assert all(p.y == 0.5 for p in layout.points)

    def test_time_x_orders_by_watched_at(self):
        provider, items, events, _ = embedded_fixture()
        layout = semantic_axes_layout(items, "time", "piano music", provider, events,
                                      time_x=True)
        xs = [p.x for p in layout.points]
        assert xs == sorted(xs)
        assert xs[0] == 0.0 and xs[-1] == 1.0
        assert layout.axis_concepts[0] == "time"

    def test_empty_concept_rejected(self):
        provider, items, events, _ = embedded_fixture()
        with pytest.raises(ValueError):
            semantic_axes_layout(items, " ", "valid", provider, events)
        with pytest.raises(ValueError):
            semantic_axes_layout(items, "valid", "", provider, events)

    def test_provider_failure_is_concept_embed_failed(self):
        class Broken(LocalDeterministicEmbedder):
            def embed_batch(self, texts):
                raise RuntimeError("no embeddings today")

        provider, items, events, _ = embedded_fixture()
        with pytest.raises(ConceptEmbedFailed):
            semantic_axes_layout(items, "a", "b", Broken(32, 0), events)

    def test_axis_concepts_required_on_kind(self):
        from mirror.layout import Layout2D

        with pytest.raises(ValueError):
            Layout2D(layout_id="x", kind="semantic_axes", points=[])
