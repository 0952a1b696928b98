/** Application wiring: upload, poll, explore.
 *
 * State lives in a single ViewState mirrored to the URL fragment; every
 * change re-renders from cached payloads and only view changes that need
 * fresh data (zoom, bbox, cutoff, layout) trigger a fetch. At most one map
 * request is in flight; a newer view abandons the older response.
 */

import { ApiClient, NotReadyError } from './api.js';
import { LayoutSwitcher } from './layoutSwitcher.js';
import { buildMapScene, hitTestLabel, sceneBounds, PLATFORM_COLORS } from './scene.js';
import { drawScene, fitViewport, toScene, Viewport } from './renderer.js';
import { thumbnailUrl } from './thumbnails.js';
import { TimelineController } from './timeline.js';
import type { MapResponse, Platform } from './types.js';
import {
  ALL_PLATFORMS, decodeViewState, defaultViewState, encodeViewState, togglePlatform,
  ViewState,
} from './viewState.js';

const PLAY_INTERVAL_MS = 700;

interface AppState {
  datasetId: string | null;
  view: ViewState;
  mapData: MapResponse | null;
  titles: Map<string, string>;
  urls: Map<string, string>;
  thumbnails: Map<string, CanvasImageSource>;
  timeline: TimelineController | null;
  switcher: LayoutSwitcher | null;
  fetchSeq: number;
  playTimer: number | null;
}

const api = new ApiClient('');
const state: AppState = {
  datasetId: null,
  view: defaultViewState(),
  mapData: null,
  titles: new Map(),
  urls: new Map(),
  thumbnails: new Map(),
  timeline: null,
  switcher: null,
  fetchSeq: 0,
  playTimer: null,
};

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function setStatus(text: string): void {
  $('status').textContent = text;
}

function syncUrl(): void {
  const fragment = encodeViewState(state.view);
  const dataset = state.datasetId ? `dataset=${state.datasetId}&` : '';
  window.history.replaceState(null, '', `#${dataset}${fragment}`);
}

function loadThumbnailsLazily(scene: ReturnType<typeof buildMapScene>): void {
  // highest zoom only, and each image is requested at most once
  for (const dot of scene.dots) {
    if (dot.lod !== 'thumbnail' || state.thumbnails.has(dot.itemId)) continue;
    const url = thumbnailUrl(state.urls.get(dot.itemId) ?? null);
    if (!url) continue;
    const image = new Image();
    image.onload = () => {
      state.thumbnails.set(dot.itemId, image);
      render();
    };
    image.src = url;
    state.thumbnails.set(dot.itemId, image); // placeholder stops re-requests
  }
}

function render(): void {
  if (!state.mapData) return;
  const canvas = $('map') as HTMLCanvasElement;
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  const scene = buildMapScene(state.mapData, state.view);
  loadThumbnailsLazily(scene);
  const bounds = sceneBounds(scene);
  const viewport: Viewport = bounds
    ? fitViewport(bounds, canvas.width, canvas.height)
    : { scale: 1, offsetX: 0, offsetY: 0 };
  drawScene(ctx, scene, viewport, state.titles, state.thumbnails);
  canvas.onclick = async (event) => {
    const rect = canvas.getBoundingClientRect();
    const [sx, sy] = toScene(viewport, event.clientX - rect.left, event.clientY - rect.top);
    const hit = hitTestLabel(scene, sx, sy, 24 / viewport.scale);
    if (hit && state.datasetId) {
      const items = await api.getTopicItems(state.datasetId, hit.topicId);
      const rows = items.items.map(
        (item) => `<li><span class="pf ${item.platform}"></span>${item.title}</li>`);
      $('topic-panel').innerHTML =
        `<h3>${items.label} (${items.items.length})</h3><ul>${rows.join('')}</ul>`;
    }
  };
}

async function refetchMap(): Promise<void> {
  if (!state.datasetId) return;
  const seq = ++state.fetchSeq;
  try {
    const data = await api.getMap(state.datasetId, {
      zoom: state.view.zoom,
      until: state.view.t ?? undefined,
      layout: state.view.layoutId,
      bbox: state.view.bbox ?? undefined,
    });
    if (seq !== state.fetchSeq) return; // a newer view superseded this fetch
    state.mapData = data;
    setStatus(`${data.points.length} of ${data.total_candidates} points`);
    render();
  } catch (error) {
    if (error instanceof NotReadyError) {
      setStatus('processing…');
    } else {
      setStatus(String(error));
    }
  }
}

function applyView(next: ViewState, needsFetch: boolean): void {
  state.view = next;
  syncUrl();
  if (needsFetch) void refetchMap();
  else render();
}

async function loadDataset(datasetId: string): Promise<void> {
  state.datasetId = datasetId;
  state.switcher = new LayoutSwitcher(api, datasetId);
  const timeline = await api.getTimeline(datasetId);
  state.timeline = new TimelineController(timeline);
  const topics = await api.getTopics(datasetId);
  state.titles = new Map();
  state.urls = new Map();
  for (const major of topics.topics) {
    const items = await api.getTopicItems(datasetId, major.label.topic_id);
    for (const item of items.items) {
      state.titles.set(item.item_id, item.title);
      if (item.url) state.urls.set(item.item_id, item.url);
    }
  }
  buildTimelineStrip();
  await refetchMap();
}

function buildPlatformToggles(): void {
  const host = $('platforms');
  host.innerHTML = '';
  for (const platform of ALL_PLATFORMS) {
    const button = document.createElement('button');
    button.textContent = platform;
    button.style.borderColor = PLATFORM_COLORS[platform];
    const paint = () => {
      button.classList.toggle('off', !state.view.platforms.includes(platform));
    };
    paint();
    button.onclick = () => {
      applyView(togglePlatform(state.view, platform as Platform), false);
      paint();
    };
    host.appendChild(button);
  }
}

function buildTimelineStrip(): void {
  if (!state.timeline) return;
  const slider = $('timeline') as HTMLInputElement;
  const startHandle = $('timeline-start') as HTMLInputElement;
  const frames = state.timeline.frames();
  slider.max = startHandle.max = String(frames.length - 1);
  slider.value = slider.max;
  startHandle.value = '0';
  slider.oninput = () => {
    const t = frames[Number(slider.value)];
    stopPlayback();
    applyView(state.timeline!.setPosition(state.view, t), true);
    showWindowTopics();
  };
  startHandle.oninput = () => {
    if (Number(startHandle.value) > Number(slider.value)) {
      startHandle.value = slider.value; // window start never passes the cutoff
    }
    showWindowTopics();
  };
  $('play').onclick = () => (state.playTimer ? stopPlayback() : startPlayback());
}

function showWindowTopics(): void {
  if (!state.timeline) return;
  const frames = state.timeline.frames();
  const startHandle = $('timeline-start') as HTMLInputElement;
  const from = frames[Number(startHandle.value)] ?? state.timeline.timeline.start;
  const to = state.view.t ?? state.timeline.timeline.end;
  const rows = state.timeline.windowTopics(from, to)
    .map((topic) => `<li>${topic.label} (${topic.count})</li>`);
  $('window-topics').innerHTML = `<h3>themes in window</h3><ul>${rows.join('')}</ul>`;
}

function startPlayback(): void {
  if (!state.timeline) return;
  applyView(state.timeline.startPlayback(state.view), true);
  const slider = $('timeline') as HTMLInputElement;
  state.playTimer = window.setInterval(() => {
    const next = state.timeline!.advance(state.view);
    if (next === null) {
      stopPlayback();
      return;
    }
    slider.value = String(Number(slider.value) + 1);
    applyView(next, true);
    showWindowTopics();
  }, PLAY_INTERVAL_MS);
  ($('play') as HTMLButtonElement).textContent = 'pause';
}

function stopPlayback(): void {
  if (state.playTimer) window.clearInterval(state.playTimer);
  state.playTimer = null;
  state.view = { ...state.view, playing: false };
  ($('play') as HTMLButtonElement).textContent = 'play';
}

function wireLayoutSwitcher(): void {
  $('layout-map').onclick = async () => {
    applyView({ ...state.view, layoutId: 'semantic_map' }, true);
  };
  $('layout-grid').onclick = async () => {
    if (!state.switcher) return;
    setStatus('building grid layout…');
    try {
      const layout = await state.switcher.switchToGrid();
      applyView({ ...state.view, layoutId: layout.layout_id }, true);
    } catch (error) {
      setStatus(`layout failed: ${error} (retry available)`);
    }
  };
  $('layout-axes').onclick = async () => {
    if (!state.switcher) return;
    const x = ($('axis-x') as HTMLInputElement).value.trim();
    const y = ($('axis-y') as HTMLInputElement).value.trim();
    if (!x || !y) {
      setStatus('enter both axis concepts first');
      return; // blocked client-side, the server would 422 anyway
    }
    setStatus('building axes layout…');
    try {
      const layout = await state.switcher.switchToAxes({ xConcept: x, yConcept: y });
      applyView({ ...state.view, layoutId: layout.layout_id }, true);
    } catch (error) {
      setStatus(`layout failed: ${error} (retry available)`);
    }
  };
}

function wireUpload(): void {
  const input = $('file-input') as HTMLInputElement;
  $('upload').onclick = async () => {
    if (!input.files?.length) {
      setStatus('choose export files first');
      return;
    }
    const form = new FormData();
    for (const file of input.files) form.append('files', file);
    setStatus('uploading…');
    const upload = await api.uploadDataset(form);
    setStatus('processing…');
    const job = await api.pollJob(upload.job_id, {
      onProgress: (j) => setStatus(`processing: ${j.progress.join(' → ') || j.state}`),
    });
    if (job.state === 'failed') {
      setStatus(`pipeline failed: ${job.error}`);
      return;
    }
    await loadDataset(upload.dataset_id);
  };
}

export function start(): void {
  buildPlatformToggles();
  wireLayoutSwitcher();
  wireUpload();
  $('zoom-in').onclick = () => applyView(
    { ...state.view, zoom: Math.min(state.view.zoom + 1, 5) }, true);
  $('zoom-out').onclick = () => applyView(
    { ...state.view, zoom: Math.max(state.view.zoom - 1, 0) }, true);

  const fragment = window.location.hash.replace(/^#/, '');
  const datasetMatch = fragment.match(/dataset=([\w-]+)&?/);
  state.view = decodeViewState(fragment.replace(/dataset=[\w-]+&?/, ''));
  if (datasetMatch) {
    void loadDataset(datasetMatch[1]);
  }
}

if (typeof document !== 'undefined' && document.getElementById('map')) {
  start();
}
