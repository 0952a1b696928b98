"""Time-index the dataset for timeline-slider and time-lapse queries.

The map's coordinates are computed once from the full dataset; the timeline
only filters visibility ("up to time t"). Stable positions keep the
evolution legible, where re-running the layout per frame would make points
jump around.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Sequence

from .model import MapPoint, format_timestamp
from .topics import TopicTree

DAILY_BIN_THRESHOLD = timedelta(days=90)


@dataclass
class TimeBin:
    start: datetime
    end: datetime  # exclusive, except the final bin which closes the range
    total: int = 0
    by_platform: dict = field(default_factory=dict)
    top_topics: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "start": format_timestamp(self.start),
            "end": format_timestamp(self.end),
            "total": self.total,
            "by_platform": self.by_platform,
            "top_topics": self.top_topics,
        }


@dataclass
class TimelineIndex:
    """Sorted event order with precomputed bins; immutable once built."""

    item_ids: list[str]  # sorted by (watched_at, item_id)
    timestamps: list[datetime]  # aligned with item_ids
    bins: list[TimeBin]
    granularity: str  # "monthly" | "daily"

    @property
    def start(self) -> datetime:
        return self.timestamps[0]

    @property
    def end(self) -> datetime:
        return self.timestamps[-1]

    def ids_until(self, t: datetime) -> list[str]:
        return self.item_ids[: bisect_right(self.timestamps, t)]

    def to_dict(self) -> dict:
        return {
            "granularity": self.granularity,
            "start": format_timestamp(self.start),
            "end": format_timestamp(self.end),
            "total": len(self.item_ids),
            "bins": [b.to_dict() for b in self.bins],
        }


def _month_start(t: datetime) -> datetime:
    return t.replace(day=1, hour=0, minute=0, second=0, microsecond=0)


def _next_month(t: datetime) -> datetime:
    return t.replace(year=t.year + 1, month=1) if t.month == 12 else t.replace(month=t.month + 1)


def _day_start(t: datetime) -> datetime:
    return t.replace(hour=0, minute=0, second=0, microsecond=0)


def build_timeline_index(points: Sequence[MapPoint], tree: TopicTree | None = None,
                         top_n: int = 5) -> TimelineIndex:
    """Build bins that partition [min, max] with per-platform counts and the
    top topics per bin. Monthly bins, or daily when the range is short."""
    if not points:
        raise ValueError("cannot index an empty point set")
    ordered = sorted(points, key=lambda p: (p.watched_at, p.item_id))
    t_min, t_max = ordered[0].watched_at, ordered[-1].watched_at
    daily = (t_max - t_min) < DAILY_BIN_THRESHOLD
    granularity = "daily" if daily else "monthly"

    edges = []
    cursor = _day_start(t_min) if daily else _month_start(t_min)
    while cursor <= t_max:
        edges.append(cursor)
        cursor = cursor + timedelta(days=1) if daily else _next_month(cursor)
    edges.append(cursor)

    bins = [TimeBin(start=max(edges[i], t_min) if i == 0 else edges[i],
                    end=min(edges[i + 1], t_max) if i == len(edges) - 2 else edges[i + 1])
            for i in range(len(edges) - 1)]

    bin_points: list[list[MapPoint]] = [[] for _ in bins]
    b = 0
    for p in ordered:
        while b + 1 < len(bins) and p.watched_at >= edges[b + 1]:
            b += 1
        bins[b].total += 1
        platform = p.platform.value
        bins[b].by_platform[platform] = bins[b].by_platform.get(platform, 0) + 1
        bin_points[b].append(p)

    if tree is not None:
        label_of = {t.label.topic_id: t.label.label for t in tree.topics}
        membership = {item_id: t.label.topic_id
                      for t in tree.topics for item_id in t.member_ids}
        for tbin, members in zip(bins, bin_points):
            counts: dict[str, int] = {}
            for p in members:
                tid = membership.get(p.item_id)
                if tid is not None:
                    counts[tid] = counts.get(tid, 0) + 1
            ranked = sorted(counts.items(), key=lambda kv: (-kv[1], label_of[kv[0]], kv[0]))
            tbin.top_topics = [{"topic_id": tid, "label": label_of[tid], "count": count}
                               for tid, count in ranked[:top_n]]

    return TimelineIndex(item_ids=[p.item_id for p in ordered],
                         timestamps=[p.watched_at for p in ordered],
                         bins=bins, granularity=granularity)


def slice_until(points: Sequence[MapPoint], t: datetime) -> list[MapPoint]:
    """All points watched at or before t; coordinates untouched.

    Monotone in t: earlier cutoffs give subsets of later ones.
    """
    return [p for p in points if p.watched_at <= t]


def window_topics(tree: TopicTree, points: Sequence[MapPoint], t_from: datetime,
                  t_to: datetime, top_n: int) -> list[tuple[str, str, int]]:
    """Major topics ranked by member count within [from, to]; ties pick the
    lexicographically smaller label. Returns (topic_id, label, count) rows."""
    if t_from > t_to:
        raise ValueError("t_from must not exceed t_to")
    in_window = {p.item_id for p in points if t_from <= p.watched_at <= t_to}
    counts = []
    for major in tree.topics:
        count = sum(1 for item_id in major.member_ids if item_id in in_window)
        if count > 0:
            counts.append((major.label.topic_id, major.label.label, count))
    counts.sort(key=lambda row: (-row[2], row[1], row[0]))
    return counts[:top_n]


@dataclass
class TimelapseFrame:
    t: datetime
    visible_ids: list[str]
    top_topics: list[tuple[str, str, int]]

    def to_dict(self) -> dict:
        return {
            "t": format_timestamp(self.t),
            "visible_ids": self.visible_ids,
            "top_topics": [{"topic_id": tid, "label": label, "count": count}
                           for tid, label, count in self.top_topics],
        }


def timelapse_frames(points: Sequence[MapPoint], tree: TopicTree,
                     n_frames: int, top_n: int = 5) -> list[TimelapseFrame]:
    """Cumulative frames at evenly spaced times across the dataset range.

    Frame i shows everything watched up to t_i plus the top topics so far;
    visible sets are nested because the cutoff only grows.
    """
    if n_frames < 2:
        raise ValueError("need at least 2 frames")
    ordered = sorted(points, key=lambda p: (p.watched_at, p.item_id))
    t_min, t_max = ordered[0].watched_at, ordered[-1].watched_at
    span = (t_max - t_min).total_seconds()
    frames = []
    for i in range(n_frames):
        t_i = (t_min + timedelta(seconds=span * i / (n_frames - 1))).replace(microsecond=0)
        if i == n_frames - 1:
            t_i = t_max
        visible = [p for p in ordered if p.watched_at <= t_i]
        frames.append(TimelapseFrame(
            t=t_i,
            visible_ids=[p.item_id for p in visible],
            top_topics=window_topics(tree, visible, t_min, t_i, top_n) if visible else [],
        ))
    return frames
