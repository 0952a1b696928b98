/** Wire types for the map server's JSON API. */

export type Platform = 'youtube' | 'netflix' | 'tiktok';

export type Lod = 'dot' | 'title' | 'thumbnail';

export interface MapPointDto {
  item_id: string;
  x: number;
  y: number;
  platform: Platform;
  watched_at: string;
  topic_id: string | null;
  lod: Lod;
}

export interface TopicLabelDto {
  topic_id: string;
  label: string;
  frequency: number;
  centroid: [number, number];
  min_zoom: number;
}

export interface ContourDto {
  level: number;
  polylines: number[][][];
}

export interface MapResponse {
  points: MapPointDto[];
  labels: TopicLabelDto[];
  contours: ContourDto[];
  total_candidates: number;
  zoom: number;
}

export interface TimelineBinDto {
  start: string;
  end: string;
  total: number;
  by_platform: Partial<Record<Platform, number>>;
  top_topics: { topic_id: string; label: string; count: number }[];
}

export interface TimelineResponse {
  granularity: 'daily' | 'monthly';
  start: string;
  end: string;
  total: number;
  bins: TimelineBinDto[];
}

export interface JobDto {
  job_id: string;
  dataset_id: string;
  kind: string;
  state: 'queued' | 'running' | 'failed' | 'done';
  progress: string[];
  error: string | null;
  result: Record<string, unknown>;
}

export interface UploadResponse {
  dataset_id: string;
  job_id: string;
}

export interface LayoutPointDto {
  item_id: string;
  x: number;
  y: number;
  platform: Platform;
  watched_at: string;
  topic_id: string | null;
}

export interface LayoutResponse {
  layout_id: string;
  kind: 'semantic_map' | 'grid' | 'semantic_axes';
  points: LayoutPointDto[];
  config: Record<string, unknown>;
  axis_concepts: [string, string] | null;
}

export interface LayoutCreateResponse {
  layout_id: string;
  job_id: string;
}

export interface TopicItemsResponse {
  topic_id: string;
  label: string;
  items: {
    item_id: string;
    title: string;
    platform: Platform;
    watched_at: string;
    url: string | null;
  }[];
}

export interface TopicNodeDto {
  label: TopicLabelDto;
  member_ids: string[];
  subtopics: TopicNodeDto[];
}

export interface TopicsResponse {
  topics: TopicNodeDto[];
}
