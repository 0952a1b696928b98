/** Pure scene building: API payload + view state in, display list out.
 *
 * Platform toggles and timeline scrubbing re-filter the cached payload here
 * without another fetch; the canvas renderer just draws whatever scene it is
 * handed. No per-point DOM nodes are ever created, so thinned 60k-point
 * responses stay cheap.
 */

import type { Lod, MapResponse, Platform } from './types.js';
import type { ViewState } from './viewState.js';

export const PLATFORM_COLORS: Record<Platform, string> = {
  youtube: '#e8554e',
  netflix: '#4ec9b0',
  tiktok: '#6f93f5',
};

export interface SceneDot {
  itemId: string;
  x: number;
  y: number;
  color: string;
  lod: Lod;
  topicId: string | null;
}

export interface SceneLabel {
  topicId: string;
  text: string;
  x: number;
  y: number;
  weight: number; // frequency, for font sizing
}

export interface ScenePolyline {
  level: number;
  points: [number, number][];
}

export interface MapScene {
  dots: SceneDot[];
  labels: SceneLabel[];
  contours: ScenePolyline[];
}

export function buildMapScene(data: MapResponse, view: ViewState): MapScene {
  const selected = new Set<Platform>(view.platforms);
  const cutoff = view.t;
  const dots: SceneDot[] = [];
  for (const point of data.points) {
    if (!selected.has(point.platform)) continue; // toggle: no refetch needed
    if (cutoff !== null && point.watched_at > cutoff) continue;
    dots.push({
      itemId: point.item_id,
      x: point.x,
      y: point.y,
      color: PLATFORM_COLORS[point.platform],
      lod: point.lod,
      topicId: point.topic_id,
    });
  }

  const labels: SceneLabel[] = data.labels
    .filter((label) => label.min_zoom <= view.zoom)
    .map((label) => ({
      topicId: label.topic_id,
      text: label.label,
      x: label.centroid[0],
      y: label.centroid[1],
      weight: label.frequency,
    }));

  const contours: ScenePolyline[] = data.contours.flatMap((contour) =>
    contour.polylines.map((line) => ({
      level: contour.level,
      points: line.map(([x, y]) => [x, y] as [number, number]),
    })));

  return { dots, labels, contours };
}

/** Scene bounds, used to fit the viewport transform. */
export function sceneBounds(scene: MapScene):
    { xmin: number; ymin: number; xmax: number; ymax: number } | null {
  if (!scene.dots.length) return null;
  let xmin = Infinity, ymin = Infinity, xmax = -Infinity, ymax = -Infinity;
  for (const dot of scene.dots) {
    if (dot.x < xmin) xmin = dot.x;
    if (dot.x > xmax) xmax = dot.x;
    if (dot.y < ymin) ymin = dot.y;
    if (dot.y > ymax) ymax = dot.y;
  }
  return { xmin, ymin, xmax, ymax };
}

/** Label under the cursor, if any (hit radius in scene units). */
export function hitTestLabel(scene: MapScene, x: number, y: number,
                             radius: number): SceneLabel | null {
  let best: SceneLabel | null = null;
  let bestDist = radius;
  for (const label of scene.labels) {
    const dist = Math.hypot(label.x - x, label.y - y);
    if (dist <= bestDist) {
      best = label;
      bestDist = dist;
    }
  }
  return best;
}
