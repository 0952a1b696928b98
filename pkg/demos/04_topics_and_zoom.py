"""Cluster a layout into labeled topics with zoom-dependent visibility.

Bigger topics earn lower min_zoom: they are visible from the overview, while
rare topics and subtopics only appear as you zoom in.
"""

import numpy as np

from mirror.topics import build_topic_tree

rng = np.random.default_rng(5)
blobs = {
    "minecraft survival build": ((0, 0), 60),
    "piano practice session": ((12, 0), 25),
    "sourdough baking guide": ((6, 10), 8),
}
points, texts = [], []
for theme, (center, count) in blobs.items():
    for i in range(count):
        points.append(np.array(center) + rng.normal(scale=0.6, size=2))
        texts.append(f"{theme} part {i % 9}")
points = np.array(points)
item_ids = [f"item-{i}" for i in range(len(points))]

tree, _ = build_topic_tree(points, item_ids, texts, min_cluster_size=5, levels=5)

print("topic tree (frequency -> min_zoom):")
for major in tree.topics:
    lab = major.label
    print(f"  [{lab.topic_id}] {lab.label!r:32} freq={lab.frequency:3}  "
          f"visible from zoom {lab.min_zoom}")
    for sub in major.subtopics:
        s = sub.label
        print(f"      [{s.topic_id}] {s.label!r:28} freq={s.frequency:3}  zoom {s.min_zoom}")

max_zoom = max(lab.label.min_zoom for lab in tree.topics) + 1
for zoom in range(max_zoom + 1):
    visible = [n.label.label for n, _ in tree.all_nodes() if n.label.min_zoom <= zoom]
    print(f"zoom {zoom}: {len(visible):2} labels -> {', '.join(visible[:6])}")
