"""Time-lapse over a viewing history: the map fills in cumulatively.

The layout itself never moves; the timeline only filters which points are
visible up to each frame's cutoff, so interests appearing over time read as
regions lighting up.
"""

from datetime import datetime, timedelta, timezone

from mirror.model import MapPoint, Platform, TopicLabel
from mirror.temporal import build_timeline_index, timelapse_frames
from mirror.topics import TopicNode, TopicTree

start = datetime(2021, 1, 1, tzinfo=timezone.utc)
phases = [("cartoons", 0), ("cartoons", 1), ("minecraft", 2), ("minecraft", 3),
          ("minecraft", 4), ("study music", 5), ("study music", 6)]

points, groups = [], {}
for i in range(140):
    theme, _ = phases[min(i * len(phases) // 140, len(phases) - 1)]
    point = MapPoint(item_id=f"v{i:03d}", x=float(hash(theme) % 7), y=float(i % 5),
                     platform=Platform.YOUTUBE,
                     watched_at=start + timedelta(days=i * 9), topic_id=theme)
    points.append(point)
    groups.setdefault(theme, []).append(point.item_id)

tree = TopicTree(topics=[
    TopicNode(label=TopicLabel(topic_id=theme, label=theme, frequency=len(ids),
                               centroid=(0.0, 0.0), min_zoom=0), member_ids=ids)
    for theme, ids in groups.items()])

index = build_timeline_index(points, tree)
print(f"range {index.start:%Y-%m} .. {index.end:%Y-%m}, "
      f"{len(index.bins)} {index.granularity} bins\n")

for frame in timelapse_frames(points, tree, n_frames=8):
    bar = "#" * (len(frame.visible_ids) // 4)
    top = ", ".join(f"{label} ({count})" for _, label, count in frame.top_topics[:2])
    print(f"{frame.t:%Y-%m}  {len(frame.visible_ids):3} videos {bar:36} top: {top}")
