"""End-to-end pipeline: uploads in, explorable map out.

Stages run forward-only and each one persists its artifact before the
manifest advances, so a crashed or failed job resumes from the last durable
stage instead of starting over. Raw upload bytes are deleted as soon as
normalized events exist (see store module).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import DatasetConfig
from .embed import (EmbeddingProvider, LocalDeterministicEmbedder, embed_dataset,
                    read_vectors, write_vectors)
from .enrichment import EnrichmentCache, MetadataProvider, enrich
from .errors import EmbeddingAborted, UnknownExport
from .harmonize import Harmonizer, harmonize_items
from .ingestion import ExportBundle, detect_platform, parse_bundle
from .layout import Layout2D, LayoutConfig, semantic_map_layout
from .model import (EmbeddedItem, EnrichedItem, HarmonizedItem, MapPoint, Platform,
                    WatchEvent)
from .store import DatasetStore, Stage, stage_index
from .temporal import build_timeline_index
from .topics import TopicLabeler, build_topic_tree

log = logging.getLogger(__name__)

ProgressCallback = Callable[[Stage], None]


@dataclass
class PipelineContext:
    """Everything a pipeline run needs besides the dataset itself."""

    store: DatasetStore
    config: DatasetConfig = field(default_factory=DatasetConfig)
    providers: dict[Platform, MetadataProvider] = field(default_factory=dict)
    cache: EnrichmentCache | None = None
    harmonizer: Harmonizer | None = None
    embedder: EmbeddingProvider | None = None
    labeler: TopicLabeler | None = None

    def resolve_embedder(self) -> EmbeddingProvider:
        if self.embedder is not None:
            return self.embedder
        return LocalDeterministicEmbedder(self.config.embedding_dim,
                                          self.config.embedding_seed)


def layout_config_from(config: DatasetConfig) -> LayoutConfig:
    return LayoutConfig(
        n_neighbors=config.n_neighbors,
        min_dist=config.min_dist,
        n_epochs=config.n_epochs,
        learning_rate=config.learning_rate,
        negative_sample_rate=config.negative_sample_rate,
        seed=config.layout_seed,
        init=config.layout_init,
    )


def group_files_by_platform(files: list[tuple[str, bytes]]) -> dict[Platform, list]:
    """Sniff each file; a multi-platform upload becomes one bundle per platform."""
    groups: dict[Platform, list] = {}
    for name, data in files:
        platform = detect_platform([(name, data)])
        groups.setdefault(platform, []).append((name, data))
    if not groups:
        raise UnknownExport("no recognizable export files")
    return groups


def _load_events(store: DatasetStore, dataset_id: str) -> list[WatchEvent]:
    payload = json.loads(store.get_artifact(dataset_id, "events.json"))
    return [WatchEvent.from_dict(e) for e in payload]


def _load_harmonized(store: DatasetStore, dataset_id: str) -> list[HarmonizedItem]:
    payload = json.loads(store.get_artifact(dataset_id, "harmonized.json"))
    return [HarmonizedItem.from_dict(h) for h in payload]


def run_pipeline(ctx: PipelineContext, dataset_id: str,
                 on_stage: ProgressCallback | None = None) -> None:
    """Run every remaining stage for the dataset, resuming where it left off."""
    store = ctx.store
    config = DatasetConfig.from_dict(store.get(dataset_id).config)

    def reached(stage: Stage) -> bool:
        return stage_index(store.get(dataset_id).stage) >= stage_index(stage)

    def advance(stage: Stage) -> None:
        store.advance_stage(dataset_id, stage)
        if on_stage:
            on_stage(stage)

    with store.writer_lock(dataset_id):
        if not reached(Stage.PARSED):
            files = store.read_raw(dataset_id)
            groups = group_files_by_platform(files)
            events: list[WatchEvent] = []
            reports: dict[str, dict] = {}
            for platform, group in sorted(groups.items(), key=lambda kv: kv[0].value):
                bundle = ExportBundle(platform=platform, files=group)
                parsed, report = parse_bundle(bundle, config)
                events.extend(parsed)
                reports[platform.value] = report.to_dict()
            events.sort(key=lambda e: (e.watched_at, e.id))
            store.put_artifact(dataset_id, "events.json",
                               json.dumps([e.to_dict() for e in events]).encode())
            store.put_artifact(dataset_id, "parse_report.json",
                               json.dumps(reports, sort_keys=True).encode())
            advance(Stage.PARSED)

        if not reached(Stage.ENRICHED):
            events = _load_events(store, dataset_id)
            items, report = enrich(events, ctx.providers, ctx.cache, config)
            store.put_artifact(dataset_id, "enriched.json",
                               json.dumps([i.to_dict() for i in items]).encode())
            store.put_artifact(dataset_id, "enrichment_report.json",
                               json.dumps(report.to_dict(), sort_keys=True).encode())
            advance(Stage.ENRICHED)  # raw uploads are purged here

        if not reached(Stage.HARMONIZED):
            items = [EnrichedItem.from_dict(d) for d in
                     json.loads(store.get_artifact(dataset_id, "enriched.json"))]
            harmonized = harmonize_items(items, ctx.harmonizer, config)
            store.put_artifact(dataset_id, "harmonized.json",
                               json.dumps([h.to_dict() for h in harmonized]).encode())
            advance(Stage.HARMONIZED)

        if not reached(Stage.EMBEDDED):
            harmonized = _load_harmonized(store, dataset_id)
            embedder = ctx.resolve_embedder()
            checkpoint = {}
            ck_path = store.artifact_path(dataset_id, "vectors.partial.f32")
            if ck_path.exists():
                matrix, ids, _ = read_vectors(ck_path)
                checkpoint = {i: row for i, row in zip(ids, matrix)}
            try:
                embedded = embed_dataset(harmonized, embedder,
                                         batch_size=config.embedding_batch_size,
                                         checkpoint=checkpoint)
            except EmbeddingAborted as exc:
                if exc.partial:
                    write_vectors(ck_path, exc.partial, embedder.provider_id)
                raise
            vec_path = store.artifact_path(dataset_id, "vectors.f32")
            write_vectors(vec_path, embedded, embedder.provider_id)
            store.put_artifact(dataset_id, "vectors.f32", vec_path.read_bytes())
            sidecar = vec_path.with_suffix(vec_path.suffix + ".json")
            store.put_artifact(dataset_id, "vectors.f32.json", sidecar.read_bytes())
            ck_path.unlink(missing_ok=True)
            ck_path.with_suffix(ck_path.suffix + ".json").unlink(missing_ok=True)
            advance(Stage.EMBEDDED)

        if not reached(Stage.LAID_OUT):
            harmonized = _load_harmonized(store, dataset_id)
            events_by_id = {h.item.event.id: h.item.event for h in harmonized}
            matrix, ids, provider_id = read_vectors(
                store.artifact_path(dataset_id, "vectors.f32"))
            embedded = [EmbeddedItem(item_id=i, vector=tuple(row.tolist()),
                                     norm=float(np.linalg.norm(row)))
                        for i, row in zip(ids, matrix)]
            layout, _ = semantic_map_layout(embedded, events_by_id,
                                            layout_config_from(config))
            store.put_artifact(dataset_id, "layouts/semantic_map.json",
                               json.dumps(layout.to_dict()).encode())
            coords = np.asarray([[p.x, p.y] for p in layout.points], dtype="<f4")
            store.put_artifact(dataset_id, "layouts/semantic_map.f32", coords.tobytes())
            advance(Stage.LAID_OUT)

        if not reached(Stage.READY):
            harmonized = _load_harmonized(store, dataset_id)
            layout = Layout2D.from_dict(json.loads(
                store.get_artifact(dataset_id, "layouts/semantic_map.json")))
            summaries_by_id = {h.item.event.id: h.summary for h in harmonized}
            xy = np.array([[p.x, p.y] for p in layout.points])
            item_ids = [p.item_id for p in layout.points]
            summaries = [summaries_by_id[i] for i in item_ids]
            tree, topic_of = build_topic_tree(xy, item_ids, summaries,
                                              min_cluster_size=config.min_cluster_size,
                                              labeler=ctx.labeler,
                                              levels=config.label_zoom_levels)
            layout.points = [
                MapPoint(item_id=p.item_id, x=p.x, y=p.y, platform=p.platform,
                         watched_at=p.watched_at, topic_id=str(topic) or None)
                for topic, p in zip(topic_of, layout.points)
            ]
            store.put_artifact(dataset_id, "layouts/semantic_map.json",
                               json.dumps(layout.to_dict()).encode())
            store.put_artifact(dataset_id, "topics.json",
                               json.dumps(tree.to_dict()).encode())
            index = build_timeline_index(layout.points, tree)
            store.put_artifact(dataset_id, "timeline.json",
                               json.dumps(index.to_dict()).encode())
            advance(Stage.READY)

    log.info("dataset %s pipeline complete", dataset_id)


def ingest_and_run(ctx: PipelineContext, files: list[tuple[str, bytes]],
                   dataset_id: str | None = None,
                   on_stage: ProgressCallback | None = None) -> str:
    """Create a dataset from uploaded files and run the whole pipeline."""
    total = sum(len(data) for _, data in files)
    if total > ctx.config.max_upload_bytes:
        raise ValueError(f"upload of {total} bytes exceeds the configured limit")
    group_files_by_platform(files)  # validates recognizability before committing
    dataset = ctx.store.create_dataset(ctx.config, dataset_id)
    ctx.store.save_raw(dataset.dataset_id, files)
    run_pipeline(ctx, dataset.dataset_id, on_stage)
    return dataset.dataset_id
