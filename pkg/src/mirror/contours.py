"""Density contours for crowded viewports.

When a viewport holds more points than the client asked for, the response
carries iso-level polylines of the point-density field instead of every dot:
points are binned on a grid and each iso level is traced with marching
squares (linear interpolation along cell edges, segments chained into
polylines).
"""

from __future__ import annotations

import numpy as np

GRID_SIZE = 64
DEFAULT_LEVEL_FRACTIONS = (0.2, 0.5, 0.8)


def bin_density(xy: np.ndarray, bbox: tuple[float, float, float, float],
                grid: int = GRID_SIZE) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Histogram the points over the bbox; returns (counts, x_centers, y_centers)."""
    xmin, ymin, xmax, ymax = bbox
    counts, x_edges, y_edges = np.histogram2d(
        xy[:, 0], xy[:, 1], bins=grid, range=[[xmin, xmax], [ymin, ymax]])
    x_centers = (x_edges[:-1] + x_edges[1:]) / 2.0
    y_centers = (y_edges[:-1] + y_edges[1:]) / 2.0
    return counts, x_centers, y_centers


def _interp(p1, p2, v1, v2, iso):
    t = 0.5 if v2 == v1 else (iso - v1) / (v2 - v1)
    return (p1[0] + t * (p2[0] - p1[0]), p1[1] + t * (p2[1] - p1[1]))


def _cell_segments(x0, x1, y0, y1, v00, v10, v11, v01, iso):
    """Marching-squares case table for one cell.

    Corners: (x0,y0)=v00, (x1,y0)=v10, (x1,y1)=v11, (x0,y1)=v01.
    Emits 0, 1, or 2 segments of the iso line.
    """
    case = (v00 >= iso) | ((v10 >= iso) << 1) | ((v11 >= iso) << 2) | ((v01 >= iso) << 3)
    if case in (0, 15):
        return []
    bottom = _interp((x0, y0), (x1, y0), v00, v10, iso)
    right = _interp((x1, y0), (x1, y1), v10, v11, iso)
    top = _interp((x0, y1), (x1, y1), v01, v11, iso)
    left = _interp((x0, y0), (x0, y1), v00, v01, iso)
    table = {
        1: [(left, bottom)], 2: [(bottom, right)], 3: [(left, right)],
        4: [(right, top)], 5: [(left, top), (bottom, right)], 6: [(bottom, top)],
        7: [(left, top)], 8: [(top, left)], 9: [(top, bottom)],
        10: [(bottom, left), (top, right)], 11: [(top, right)],
        12: [(right, left)], 13: [(right, bottom)], 14: [(bottom, left)],
    }
    return table[case]


def _chain_segments(segments: list, decimals: int = 9) -> list[list[tuple[float, float]]]:
    """Join segments that share endpoints into polylines."""
    from collections import deque

    def key(p):
        return (round(p[0], decimals), round(p[1], decimals))

    adjacency: dict = {}  # endpoint key -> [(segment index, endpoint side)]
    for i, (a, b) in enumerate(segments):
        adjacency.setdefault(key(a), []).append((i, 0))
        adjacency.setdefault(key(b), []).append((i, 1))

    used = [False] * len(segments)
    polylines = []
    for i, (a, b) in enumerate(segments):
        if used[i]:
            continue
        used[i] = True
        line = deque([a, b])
        for extend_front in (False, True):
            while True:
                tip = line[0] if extend_front else line[-1]
                nxt = None
                for j, side in adjacency.get(key(tip), []):
                    if not used[j]:
                        nxt = (j, side)
                        break
                if nxt is None:
                    break
                j, side = nxt
                used[j] = True
                other_end = segments[j][1 - side]
                if extend_front:
                    line.appendleft(other_end)
                else:
                    line.append(other_end)
        polylines.append([(float(x), float(y)) for x, y in line])
    return polylines


def marching_squares(values: np.ndarray, x_centers: np.ndarray, y_centers: np.ndarray,
                     iso: float) -> list[list[tuple[float, float]]]:
    segments = []
    for i in range(values.shape[0] - 1):
        for j in range(values.shape[1] - 1):
            segs = _cell_segments(
                x_centers[i], x_centers[i + 1], y_centers[j], y_centers[j + 1],
                values[i, j], values[i + 1, j], values[i + 1, j + 1], values[i, j + 1],
                iso)
            segments.extend(segs)
    return _chain_segments(segments)


def density_contours(xy: np.ndarray, bbox: tuple[float, float, float, float],
                     grid: int = GRID_SIZE,
                     level_fractions=DEFAULT_LEVEL_FRACTIONS) -> list[dict]:
    """Iso-level polylines of point density inside the bbox."""
    if len(xy) == 0:
        return []
    counts, x_centers, y_centers = bin_density(xy, bbox, grid)
    peak = counts.max()
    if peak <= 0:
        return []
    out = []
    for frac in level_fractions:
        iso = frac * peak
        polylines = marching_squares(counts, x_centers, y_centers, iso)
        if polylines:
            out.append({
                "level": float(iso),
                "polylines": [[[round(x, 6), round(y, 6)] for x, y in line]
                              for line in polylines],
            })
    return out


def density_rank(xy: np.ndarray, bbox: tuple[float, float, float, float],
                 grid: int = GRID_SIZE) -> np.ndarray:
    """Per-point local density (its bin's count); used to thin viewports
    while keeping visual cluster shape."""
    xmin, ymin, xmax, ymax = bbox
    xi = np.clip(((xy[:, 0] - xmin) / max(xmax - xmin, 1e-12) * grid).astype(int), 0, grid - 1)
    yi = np.clip(((xy[:, 1] - ymin) / max(ymax - ymin, 1e-12) * grid).astype(int), 0, grid - 1)
    counts, _, _ = bin_density(xy, bbox, grid)
    return counts[xi, yi]
