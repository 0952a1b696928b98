/** Timeline controller: scrub position, playback frames, window topics.
 *
 * Playback walks cumulative frame cutoffs derived from the timeline bins;
 * the visible set only ever grows while playing forward. The window handles
 * aggregate per-bin topic counts client-side so dragging them needs no
 * round trip.
 */

import type { TimelineResponse } from './types.js';
import type { ViewState } from './viewState.js';

export interface WindowTopic {
  topic_id: string;
  label: string;
  count: number;
}

export class TimelineController {
  private frameIndex = -1;

  constructor(public readonly timeline: TimelineResponse) {}

  /** Cumulative playback cutoffs: each bin's end, ending at the range max. */
  frames(): string[] {
    const cutoffs = this.timeline.bins.map((bin) => bin.end);
    if (cutoffs.length === 0 || cutoffs[cutoffs.length - 1] !== this.timeline.end) {
      cutoffs.push(this.timeline.end);
    }
    return cutoffs;
  }

  /** Drag: set t directly; playback resumes from the nearest frame. */
  setPosition(view: ViewState, t: string | null): ViewState {
    if (t !== null) {
      const frames = this.frames();
      this.frameIndex = frames.findIndex((f) => f >= t);
    }
    return { ...view, t, playing: false };
  }

  startPlayback(view: ViewState, from?: string): ViewState {
    const frames = this.frames();
    this.frameIndex = from ? frames.findIndex((f) => f >= from) : 0;
    if (this.frameIndex < 0) this.frameIndex = 0;
    return { ...view, t: frames[this.frameIndex], playing: true };
  }

  /** Advance one frame; returns null at the end of the range. */
  advance(view: ViewState): ViewState | null {
    const frames = this.frames();
    if (this.frameIndex >= frames.length - 1) return null;
    this.frameIndex += 1;
    return { ...view, t: frames[this.frameIndex], playing: true };
  }

  stop(view: ViewState): ViewState {
    return { ...view, playing: false };
  }

  /** Top themes inside [from, to], aggregated from the precomputed bins. */
  windowTopics(from: string, to: string, topN = 5): WindowTopic[] {
    const counts = new Map<string, WindowTopic>();
    for (const bin of this.timeline.bins) {
      if (bin.end <= from || bin.start > to) continue;
      for (const topic of bin.top_topics) {
        const entry = counts.get(topic.topic_id);
        if (entry) entry.count += topic.count;
        else counts.set(topic.topic_id, { ...topic });
      }
    }
    return [...counts.values()]
      .sort((a, b) => b.count - a.count || a.label.localeCompare(b.label))
      .slice(0, topN);
  }

  /** Per-bin totals for drawing the histogram strip under the slider. */
  histogram(): { start: string; total: number }[] {
    return this.timeline.bins.map((bin) => ({ start: bin.start, total: bin.total }));
  }
}
