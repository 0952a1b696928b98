/** Switch between the semantic map, grid, and semantic-axes layouts.
 *
 * Alternative layouts are separate artifacts computed by the server:
 * switching POSTs a layout job, polls it, then fetches the coordinates.
 * Fetched layouts are cached, so switching back shows the original
 * coordinates untouched and an already-built layout renders immediately.
 */

import type { ApiClient } from './api.js';
import type { LayoutResponse } from './types.js';

export interface AxesRequest {
  xConcept: string;
  yConcept: string;
  timeX?: boolean;
}

export class LayoutSwitcher {
  private cache = new Map<string, LayoutResponse>();

  constructor(
    private api: ApiClient,
    private datasetId: string,
    private pollIntervalMs = 500,
    private sleep: (ms: number) => Promise<void> =
      (ms) => new Promise((resolve) => setTimeout(resolve, ms)),
  ) {}

  cached(layoutId: string): LayoutResponse | undefined {
    return this.cache.get(layoutId);
  }

  async fetchLayout(layoutId: string): Promise<LayoutResponse> {
    const hit = this.cache.get(layoutId);
    if (hit) return hit;
    const layout = await this.api.getLayout(this.datasetId, layoutId);
    this.cache.set(layoutId, layout);
    return layout;
  }

  async switchToGrid(): Promise<LayoutResponse> {
    return this.requestAndAwait({ kind: 'grid' });
  }

  async switchToAxes(request: AxesRequest): Promise<LayoutResponse> {
    const x = request.xConcept.trim();
    const y = request.yConcept.trim();
    if ((!x && !request.timeX) || !y) {
      throw new Error('both axis concepts are required'); // blocked client-side
    }
    return this.requestAndAwait({
      kind: 'semantic_axes', x_concept: x, y_concept: y, time_x: request.timeX ?? false,
    });
  }

  async switchToSemanticMap(): Promise<LayoutResponse> {
    return this.fetchLayout('semantic_map');
  }

  private async requestAndAwait(
    body: { kind: string; x_concept?: string; y_concept?: string; time_x?: boolean },
  ): Promise<LayoutResponse> {
    const created = await this.api.createLayout(this.datasetId, body);
    const job = await this.api.pollJob(created.job_id, {
      intervalMs: this.pollIntervalMs,
      sleep: this.sleep,
    });
    if (job.state !== 'done') {
      throw new Error(job.error ?? 'layout job failed');
    }
    const layout = await this.api.getLayout(this.datasetId, created.layout_id);
    this.cache.set(created.layout_id, layout);
    return layout;
  }
}
