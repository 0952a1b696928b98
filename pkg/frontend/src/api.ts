/** Typed client for the map server.
 *
 * Every request the UI makes goes through this module, and only the
 * documented endpoints exist here; contract tests mock `fetchFn` and check
 * exactly which routes were called.
 */

import type {
  JobDto, LayoutCreateResponse, LayoutResponse, MapResponse, TimelineResponse,
  TopicItemsResponse, TopicsResponse, UploadResponse,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface MapQuery {
  bbox?: [number, number, number, number];
  zoom?: number;
  platforms?: string[];
  until?: string;
  maxPoints?: number;
  layout?: string;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class NotReadyError extends ApiError {}

export class ApiClient {
  constructor(
    private baseUrl: string = '',
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        detail = ((await response.json()) as { detail?: string }).detail ?? detail;
      } catch {
        /* non-JSON error body */
      }
      if (response.status === 409) throw new NotReadyError(409, detail);
      throw new ApiError(response.status, detail);
    }
    if (response.status === 204) return undefined as T;
    return (await response.json()) as T;
  }

  uploadDataset(form: FormData): Promise<UploadResponse> {
    return this.request('/datasets', { method: 'POST', body: form });
  }

  getJob(jobId: string): Promise<JobDto> {
    return this.request(`/jobs/${jobId}`);
  }

  async pollJob(
    jobId: string,
    opts: { intervalMs?: number; timeoutMs?: number;
            sleep?: (ms: number) => Promise<void>;
            onProgress?: (job: JobDto) => void } = {},
  ): Promise<JobDto> {
    const interval = opts.intervalMs ?? 1000;
    const deadline = Date.now() + (opts.timeoutMs ?? 15 * 60 * 1000);
    const sleep = opts.sleep ?? ((ms) => new Promise((r) => setTimeout(r, ms)));
    for (;;) {
      const job = await this.getJob(jobId);
      opts.onProgress?.(job);
      if (job.state === 'done' || job.state === 'failed') return job;
      if (Date.now() > deadline) throw new Error(`job ${jobId} timed out`);
      await sleep(interval);
    }
  }

  getMap(datasetId: string, query: MapQuery = {}): Promise<MapResponse> {
    const params = new URLSearchParams();
    if (query.bbox) params.set('bbox', query.bbox.join(','));
    if (query.zoom !== undefined) params.set('zoom', String(query.zoom));
    if (query.platforms?.length) params.set('platforms', query.platforms.join(','));
    if (query.until) params.set('until', query.until);
    if (query.maxPoints !== undefined) params.set('max_points', String(query.maxPoints));
    if (query.layout) params.set('layout', query.layout);
    const qs = params.toString();
    return this.request(`/datasets/${datasetId}/map${qs ? `?${qs}` : ''}`);
  }

  getTimeline(datasetId: string): Promise<TimelineResponse> {
    return this.request(`/datasets/${datasetId}/timeline`);
  }

  getTopics(datasetId: string): Promise<TopicsResponse> {
    return this.request(`/datasets/${datasetId}/topics`);
  }

  getTopicItems(datasetId: string, topicId: string): Promise<TopicItemsResponse> {
    return this.request(`/datasets/${datasetId}/topics/${topicId}/items`);
  }

  createLayout(
    datasetId: string,
    body: { kind: string; x_concept?: string; y_concept?: string; time_x?: boolean },
  ): Promise<LayoutCreateResponse> {
    return this.request(`/datasets/${datasetId}/layouts`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  getLayout(datasetId: string, layoutId: string): Promise<LayoutResponse> {
    return this.request(`/datasets/${datasetId}/layouts/${layoutId}`);
  }

  deleteDataset(datasetId: string): Promise<void> {
    return this.request(`/datasets/${datasetId}`, { method: 'DELETE' });
  }
}
