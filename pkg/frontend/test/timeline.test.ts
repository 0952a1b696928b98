import { describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { TimelineController } from '../src/timeline.js';
import type { MapResponse, TimelineResponse } from '../src/types.js';
import { defaultViewState } from '../src/viewState.js';
import { MockServer, fixture } from './mockServer.js';

const timeline = fixture<TimelineResponse>('timeline.json');

describe('playback', () => {
  it('advances through cumulative frames to the end of the range', () => {
    const controller = new TimelineController(timeline);
    let view = controller.startPlayback(defaultViewState());
    expect(view.playing).toBe(true);
    const cutoffs: string[] = [view.t!];
    for (;;) {
      const next = controller.advance(view);
      if (next === null) break;
      view = next;
      cutoffs.push(view.t!);
    }
    expect(cutoffs).toEqual([...cutoffs].sort());
    expect(cutoffs[cutoffs.length - 1]).toBe(timeline.end);
  });

  it('playing from the start grows the visible set monotonically', async () => {
    // sets come from the API at the recorded playback cutoffs (oracle payloads)
    const server = new MockServer();
    const api = new ApiClient('', server.fetch);
    const cutoffs = ['2024-01-15T00:00:00Z', '2024-02-10T00:00:00Z',
                     '2024-03-05T00:00:00Z', '2025-12-31T00:00:00Z'];
    let previous = new Set<string>();
    for (const until of cutoffs) {
      const response: MapResponse = await api.getMap('ds1', { zoom: 3, until });
      const ids = new Set(response.points.map((p) => p.item_id));
      for (const id of previous) expect(ids.has(id)).toBe(true);
      expect(ids.size).toBeGreaterThanOrEqual(previous.size);
      previous = ids;
    }
    expect(previous.size).toBeGreaterThan(0);
  });

  it('dragging sets the position and pauses playback', () => {
    const controller = new TimelineController(timeline);
    let view = controller.startPlayback(defaultViewState());
    view = controller.setPosition(view, timeline.bins[0].end);
    expect(view.playing).toBe(false);
    expect(view.t).toBe(timeline.bins[0].end);
    // playback resumes from the dragged position, not the start
    view = controller.startPlayback(view, view.t!);
    expect(view.t! >= timeline.bins[0].end).toBe(true);
  });
});

describe('window topics', () => {
  it('full window matches the per-bin aggregate ordering', () => {
    const controller = new TimelineController(timeline);
    const topics = controller.windowTopics(timeline.start, timeline.end, 10);
    expect(topics.length).toBeGreaterThan(0);
    for (let i = 1; i < topics.length; i++) {
      expect(topics[i - 1].count).toBeGreaterThanOrEqual(topics[i].count);
    }
    const expectTotal = timeline.bins.flatMap((b) => b.top_topics)
      .reduce((acc, t) => acc + t.count, 0);
    expect(topics.reduce((acc, t) => acc + t.count, 0)).toBe(expectTotal);
  });

  it('narrow windows only include overlapping bins', () => {
    const controller = new TimelineController(timeline);
    const bin = timeline.bins.find((b) => b.total > 0)!;
    const topics = controller.windowTopics(bin.start, bin.start, 10);
    const expected = bin.top_topics.map((t) => t.topic_id).sort();
    expect(topics.map((t) => t.topic_id).sort()).toEqual(expected);
  });

  it('histogram mirrors bin totals', () => {
    const controller = new TimelineController(timeline);
    expect(controller.histogram().map((h) => h.total))
      .toEqual(timeline.bins.map((b) => b.total));
  });
});
