import json
from datetime import datetime, timezone
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from mirror.config import DatasetConfig
from mirror.pipeline import PipelineContext
from mirror.server import create_app
from mirror.store import DatasetStore

from conftest import PII_SENTINELS, fixture_providers, load_fixture

SCHEMA = json.loads((Path(__file__).parent / "data" / "api_schema.json").read_text())


def check_schema(value, spec, name="root"):
    """Validate a payload against the frozen schema notation.

    Types: str, int, float, bool, dict, list, list[T] (T a type or a named
    schema), unions with |, and null.
    """
    if isinstance(spec, dict):
        assert isinstance(value, dict), f"{name}: expected object"
        missing = set(spec) - set(value)
        extra = set(value) - set(spec)
        assert not missing, f"{name}: missing keys {missing}"
        assert not extra, f"{name}: undocumented keys {extra}"
        for key, sub in spec.items():
            check_schema(value[key], sub, f"{name}.{key}")
        return
    for option in spec.split("|"):
        try:
            _check_type(value, option, name)
            return
        except AssertionError:
            continue
    raise AssertionError(f"{name}: {value!r} matches none of {spec!r}")


def _check_type(value, option, name):
    if option == "null":
        assert value is None, name
    elif option == "str":
        assert isinstance(value, str), name
    elif option == "int":
        assert isinstance(value, int) and not isinstance(value, bool), name
    elif option == "float":
        assert isinstance(value, (int, float)) and not isinstance(value, bool), name
    elif option == "bool":
        assert isinstance(value, bool), name
    elif option == "dict":
        assert isinstance(value, dict), name
    elif option == "list":
        assert isinstance(value, list), name
    elif option.startswith("list[") and option.endswith("]"):
        assert isinstance(value, list), name
        inner = option[5:-1]
        for i, element in enumerate(value):
            if inner in SCHEMA:
                check_schema(element, SCHEMA[inner], f"{name}[{i}]")
            else:
                _check_type(element, inner, f"{name}[{i}]")
    elif option in SCHEMA:
        check_schema(value, SCHEMA[option], name)
    else:  # pragma: no cover
        raise ValueError(f"unknown schema type {option!r}")


def themed_takeout(n_per_theme=12) -> bytes:
    themes = ["minecraft gameplay", "piano practice", "pasta cooking"]
    records = []
    for t, theme in enumerate(themes):
        for i in range(n_per_theme):
            records.append({
                "title": f"Watched {theme} episode {i}",
                "titleUrl": f"https://www.youtube.com/watch?v=v{t}{i:02d}",
                "time": f"2024-0{t + 1}-{(i % 27) + 1:02d}T10:00:00Z",
            })
    return json.dumps(records).encode()


@pytest.fixture(scope="module")
def client(tmp_path_factory):
    root = tmp_path_factory.mktemp("server")
    config = DatasetConfig(embedding_dim=64, default_max_points=2000)
    ctx = PipelineContext(store=DatasetStore(root / "data"), config=config,
                          providers=fixture_providers())
    app = create_app(root / "data", ctx=ctx)
    with TestClient(app) as test_client:
        test_client.app_state = app.state
        yield test_client


@pytest.fixture(scope="module")
def ready_dataset(client) -> dict:
    files = [
        ("files", ("watch-history.json", themed_takeout(), "application/json")),
        ("files", ("ViewingActivity.csv", load_fixture("netflix_viewing_activity.csv"),
                   "text/csv")),
        ("files", ("tiktok.json", load_fixture("tiktok_export.json"), "application/json")),
    ]
    response = client.post("/datasets", files=files)
    assert response.status_code == 202
    body = response.json()
    job = client.app_state.jobs.wait(body["job_id"], timeout=180)
    assert job.state == "done", job.error
    return body


class TestUpload:
    def test_upload_returns_ids_and_job_completes(self, client, ready_dataset):
        check_schema(ready_dataset, SCHEMA["upload_response"])
        job = client.get(f"/jobs/{ready_dataset['job_id']}").json()
        check_schema(job, SCHEMA["job"])
        assert job["state"] == "done"
        assert job["progress"] == ["parsed", "enriched", "harmonized", "embedded",
                                   "laid_out", "ready"]

    def test_empty_multipart_rejected(self, client):
        response = client.post("/datasets", data={})
        assert response.status_code == 422

    def test_unknown_export_rejected(self, client):
        files = [("files", ("junk.bin", b"\x00\x01 junk", "application/octet-stream"))]
        response = client.post("/datasets", files=files)
        assert response.status_code == 422
        check_schema(response.json(), SCHEMA["error_response"])

    def test_oversized_upload_rejected(self, tmp_path):
        config = DatasetConfig(max_upload_bytes=64)
        ctx = PipelineContext(store=DatasetStore(tmp_path / "d"), config=config)
        app = create_app(tmp_path / "d", ctx=ctx)
        with TestClient(app) as small_client:
            files = [("files", ("big.json", themed_takeout(), "application/json"))]
            assert small_client.post("/datasets", files=files).status_code == 413

    def test_reupload_same_files_same_event_ids(self, client, ready_dataset):
        files = [("files", ("watch-history.json", themed_takeout(), "application/json"))]
        response = client.post("/datasets", files=files)
        job = client.app_state.jobs.wait(response.json()["job_id"], timeout=180)
        assert job.state == "done"
        first = client.get(f"/datasets/{ready_dataset['dataset_id']}/map").json()
        second = client.get(f"/datasets/{response.json()['dataset_id']}/map").json()
        youtube_ids = {p["item_id"] for p in first["points"]
                       if p["platform"] == "youtube"}
        assert {p["item_id"] for p in second["points"]} == youtube_ids

    def test_unknown_job_404(self, client):
        assert client.get("/jobs/nope").status_code == 404


class TestMap:
    def test_full_extent_schema_and_lod(self, client, ready_dataset):
        dataset_id = ready_dataset["dataset_id"]
        response = client.get(f"/datasets/{dataset_id}/map", params={"zoom": 5})
        assert response.status_code == 200
        body = response.json()
        check_schema(body, SCHEMA["map_response"])
        assert len(body["points"]) == 43  # 36 youtube + 4 netflix + 3 tiktok
        assert all(p["lod"] == "thumbnail" for p in body["points"])

    def test_lod_thresholds(self, client, ready_dataset):
        dataset_id = ready_dataset["dataset_id"]
        for zoom, lod in [(0, "dot"), (2, "dot"), (3, "title"), (4, "title"),
                          (5, "thumbnail")]:
            body = client.get(f"/datasets/{dataset_id}/map", params={"zoom": zoom}).json()
            assert all(p["lod"] == lod for p in body["points"]), zoom

    def test_platform_filter(self, client, ready_dataset):
        dataset_id = ready_dataset["dataset_id"]
        body = client.get(f"/datasets/{dataset_id}/map",
                          params={"platforms": "netflix"}).json()
        assert len(body["points"]) == 4
        assert all(p["platform"] == "netflix" for p in body["points"])

    def test_until_matches_temporal_slice(self, client, ready_dataset):
        dataset_id = ready_dataset["dataset_id"]
        full = client.get(f"/datasets/{dataset_id}/map").json()
        cutoff = "2024-02-15T00:00:00Z"
        body = client.get(f"/datasets/{dataset_id}/map", params={"until": cutoff}).json()
        boundary = datetime(2024, 2, 15, tzinfo=timezone.utc)
        expected = {p["item_id"] for p in full["points"]
                    if datetime.fromisoformat(p["watched_at"].replace("Z", "+00:00"))
                    <= boundary}
        assert {p["item_id"] for p in body["points"]} == expected

    def test_zoom_reveals_more_labels(self, client, ready_dataset):
        dataset_id = ready_dataset["dataset_id"]
        low = client.get(f"/datasets/{dataset_id}/map", params={"zoom": 0}).json()
        high = client.get(f"/datasets/{dataset_id}/map", params={"zoom": 5}).json()
        low_ids = {lab["topic_id"] for lab in low["labels"]}
        high_ids = {lab["topic_id"] for lab in high["labels"]}
        assert low_ids <= high_ids
        assert all(lab["min_zoom"] == 0 for lab in low["labels"])
        assert len(high_ids) > len(low_ids)  # subtopics appear on zoom-in

    def test_bbox_filters_points(self, client, ready_dataset):
        dataset_id = ready_dataset["dataset_id"]
        full = client.get(f"/datasets/{dataset_id}/map").json()
        xs = sorted(p["x"] for p in full["points"])
        mid = xs[len(xs) // 2]
        ys = [p["y"] for p in full["points"]]
        bbox = f"{min(xs) - 1},{min(ys) - 1},{mid},{max(ys) + 1}"
        body = client.get(f"/datasets/{dataset_id}/map", params={"bbox": bbox}).json()
        assert 0 < len(body["points"]) < len(full["points"])
        assert all(p["x"] <= mid for p in body["points"])

    def test_thinning_and_contours_when_over_budget(self, client, ready_dataset):
        dataset_id = ready_dataset["dataset_id"]
        body = client.get(f"/datasets/{dataset_id}/map", params={"max_points": 10}).json()
        assert len(body["points"]) == 10
        assert body["total_candidates"] == 43
        assert body["contours"], "over-budget responses carry density contours"
        check_schema(body, SCHEMA["map_response"])

    def test_invalid_queries(self, client, ready_dataset):
        dataset_id = ready_dataset["dataset_id"]
        assert client.get(f"/datasets/{dataset_id}/map",
                          params={"zoom": 99}).status_code == 422
        assert client.get(f"/datasets/{dataset_id}/map",
                          params={"bbox": "3,0,1,1"}).status_code == 422
        assert client.get(f"/datasets/{dataset_id}/map",
                          params={"bbox": "a,b,c,d"}).status_code == 422
        assert client.get(f"/datasets/{dataset_id}/map",
                          params={"until": "not-a-time"}).status_code == 422

    def test_unknown_dataset_404(self, client):
        assert client.get("/datasets/nope/map").status_code == 404

    def test_identical_queries_byte_identical(self, client, ready_dataset):
        dataset_id = ready_dataset["dataset_id"]
        params = {"zoom": 3, "platforms": "youtube,netflix", "max_points": 20}
        first = client.get(f"/datasets/{dataset_id}/map", params=params)
        second = client.get(f"/datasets/{dataset_id}/map", params=params)
        assert first.content == second.content


class TestTimelineAndTopics:
    def test_timeline_schema(self, client, ready_dataset):
        body = client.get(f"/datasets/{ready_dataset['dataset_id']}/timeline").json()
        check_schema(body, SCHEMA["timeline_response"])
        assert body["total"] == 43
        assert sum(b["total"] for b in body["bins"]) == 43

    def test_topic_items_exact_member_set(self, client, ready_dataset):
        dataset_id = ready_dataset["dataset_id"]
        topics = client.get(f"/datasets/{dataset_id}/topics").json()
        assert topics["topics"], "expected at least one topic"
        node = topics["topics"][0]
        body = client.get(
            f"/datasets/{dataset_id}/topics/{node['label']['topic_id']}/items").json()
        check_schema(body, SCHEMA["topic_items_response"])
        assert sorted(i["item_id"] for i in body["items"]) == sorted(node["member_ids"])

    def test_unknown_topic_404(self, client, ready_dataset):
        dataset_id = ready_dataset["dataset_id"]
        assert client.get(f"/datasets/{dataset_id}/topics/t999/items").status_code == 404


class TestLayouts:
    def test_axes_layout_job_and_fetch(self, client, ready_dataset):
        dataset_id = ready_dataset["dataset_id"]
        response = client.post(f"/datasets/{dataset_id}/layouts",
                               json={"kind": "semantic_axes", "x_concept": "gaming",
                                     "y_concept": "music"})
        assert response.status_code == 202
        body = response.json()
        check_schema(body, SCHEMA["layout_create_response"])
        job = client.app_state.jobs.wait(body["job_id"], timeout=60)
        assert job.state == "done", job.error
        layout = client.get(f"/datasets/{dataset_id}/layouts/{body['layout_id']}").json()
        check_schema(layout, SCHEMA["layout_response"])
        assert layout["kind"] == "semantic_axes"
        assert layout["axis_concepts"] == ["gaming", "music"]
        for p in layout["points"]:
            assert 0.0 <= p["x"] <= 1.0 and 0.0 <= p["y"] <= 1.0

    def test_grid_layout(self, client, ready_dataset):
        dataset_id = ready_dataset["dataset_id"]
        response = client.post(f"/datasets/{dataset_id}/layouts", json={"kind": "grid"})
        job = client.app_state.jobs.wait(response.json()["job_id"], timeout=60)
        assert job.state == "done", job.error
        layout = client.get(f"/datasets/{dataset_id}/layouts/grid").json()
        assert layout["kind"] == "grid"
        assert len(layout["points"]) == 43

    def test_empty_concept_rejected(self, client, ready_dataset):
        dataset_id = ready_dataset["dataset_id"]
        response = client.post(f"/datasets/{dataset_id}/layouts",
                               json={"kind": "semantic_axes", "x_concept": " ",
                                     "y_concept": "music"})
        assert response.status_code == 422

    def test_unknown_kind_rejected(self, client, ready_dataset):
        response = client.post(f"/datasets/{ready_dataset['dataset_id']}/layouts",
                               json={"kind": "spiral"})
        assert response.status_code == 422

    def test_semantic_map_unchanged_after_alt_layouts(self, client, ready_dataset):
        dataset_id = ready_dataset["dataset_id"]
        first = client.get(f"/datasets/{dataset_id}/layouts/semantic_map").content
        second = client.get(f"/datasets/{dataset_id}/layouts/semantic_map").content
        assert first == second


class TestPrivacyAndDeletion:
    def test_no_endpoint_serves_raw_or_pii(self, client, ready_dataset):
        dataset_id = ready_dataset["dataset_id"]
        payloads = [
            client.get(f"/datasets/{dataset_id}/map", params={"zoom": 5}).content,
            client.get(f"/datasets/{dataset_id}/timeline").content,
            client.get(f"/datasets/{dataset_id}/topics").content,
            client.get("/datasets").content,
        ]
        for payload in payloads:
            for sentinel in PII_SENTINELS:
                assert sentinel.encode() not in payload

    def test_delete_then_404(self, client):
        files = [("files", ("watch-history.json", themed_takeout(4), "application/json"))]
        upload = client.post("/datasets", files=files).json()
        job = client.app_state.jobs.wait(upload["job_id"], timeout=120)
        assert job.state == "done"
        dataset_id = upload["dataset_id"]
        assert client.delete(f"/datasets/{dataset_id}").status_code == 204
        assert client.get(f"/datasets/{dataset_id}/map").status_code == 404
        assert client.get(f"/datasets/{dataset_id}/timeline").status_code == 404
        assert client.delete(f"/datasets/{dataset_id}").status_code == 404

    def test_not_ready_is_409(self, tmp_path):
        ctx = PipelineContext(store=DatasetStore(tmp_path / "d"))
        ctx.store.create_dataset(dataset_id="pending")
        app = create_app(tmp_path / "d", ctx=ctx)
        with TestClient(app) as local_client:
            assert local_client.get("/datasets/pending/map").status_code == 409
            assert local_client.get("/datasets/pending/timeline").status_code == 409


class TestWebhook:
    def test_webhook_fires_on_completion(self, tmp_path):
        received = []
        ctx = PipelineContext(store=DatasetStore(tmp_path / "d"),
                              config=DatasetConfig(embedding_dim=32))
        app = create_app(tmp_path / "d", ctx=ctx,
                         webhook_post=lambda url, payload: received.append((url, payload)))
        with TestClient(app) as local_client:
            files = [("files", ("wh.json", themed_takeout(4), "application/json"))]
            upload = local_client.post("/datasets?webhook_url=http://cb.example/hook",
                                       files=files).json()
            job = app.state.jobs.wait(upload["job_id"], timeout=120)
            assert job.state == "done"
        assert received and received[0][0] == "http://cb.example/hook"
        assert received[0][1]["state"] == "done"
