/** The whole view is one serializable value, kept in the URL fragment so a
 * view can be shared or restored: restoring a fragment reproduces the same
 * fetches and the same scene. */

import type { Platform } from './types.js';

export const ALL_PLATFORMS: Platform[] = ['netflix', 'tiktok', 'youtube'];

export interface ViewState {
  bbox: [number, number, number, number] | null;
  zoom: number;
  platforms: Platform[]; // selected subset, kept sorted
  t: string | null; // timeline cutoff (RFC 3339), null = everything
  playing: boolean;
  layoutId: string;
}

export function defaultViewState(): ViewState {
  return {
    bbox: null,
    zoom: 0,
    platforms: [...ALL_PLATFORMS],
    t: null,
    playing: false,
    layoutId: 'semantic_map',
  };
}

export function encodeViewState(view: ViewState): string {
  const params = new URLSearchParams();
  if (view.bbox) params.set('bbox', view.bbox.map((v) => String(v)).join(','));
  params.set('zoom', String(view.zoom));
  params.set('platforms', [...view.platforms].sort().join(','));
  if (view.t) params.set('t', view.t);
  if (view.playing) params.set('playing', '1');
  params.set('layout', view.layoutId);
  return params.toString();
}

export function decodeViewState(fragment: string): ViewState {
  const params = new URLSearchParams(fragment.replace(/^#/, ''));
  const view = defaultViewState();
  const bbox = params.get('bbox');
  if (bbox) {
    const parts = bbox.split(',').map(Number);
    if (parts.length === 4 && parts.every(Number.isFinite)
        && parts[0] < parts[2] && parts[1] < parts[3]) {
      view.bbox = parts as [number, number, number, number];
    }
  }
  const zoom = Number(params.get('zoom'));
  if (Number.isInteger(zoom) && zoom >= 0) view.zoom = zoom;
  const platforms = params.get('platforms');
  if (platforms !== null) {
    view.platforms = platforms
      .split(',')
      .filter((p): p is Platform => (ALL_PLATFORMS as string[]).includes(p))
      .sort() as Platform[];
  }
  view.t = params.get('t');
  view.playing = params.get('playing') === '1';
  view.layoutId = params.get('layout') ?? view.layoutId;
  return view;
}

export function togglePlatform(view: ViewState, platform: Platform): ViewState {
  const selected = new Set(view.platforms);
  if (selected.has(platform)) selected.delete(platform);
  else selected.add(platform);
  return { ...view, platforms: [...selected].sort() as Platform[] };
}
