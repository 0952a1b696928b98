"""The full loop over HTTP: upload exports, poll the job, query the map.

Runs the real app in-process (no network); `mirror serve --store DIR` runs
the same app behind uvicorn.
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from mirror.pipeline import PipelineContext
from mirror.server import create_app
from mirror.store import DatasetStore
from mirror.config import DatasetConfig

FIXTURES = Path(__file__).parent.parent / "tests" / "fixtures"

root = Path(tempfile.mkdtemp())
ctx = PipelineContext(store=DatasetStore(root / "data"),
                      config=DatasetConfig(embedding_dim=64))
app = create_app(root / "data", ctx=ctx)

with TestClient(app) as client:
    files = [("files", (name, (FIXTURES / name).read_bytes()))
             for name in ["youtube_watch_history.json", "netflix_viewing_activity.csv",
                          "tiktok_export.json"]]
    upload = client.post("/datasets", files=files).json()
    print("uploaded ->", upload)

    job = app.state.jobs.wait(upload["job_id"], timeout=120)
    print("job state:", job.state, "progress:", job.progress)

    dataset_id = upload["dataset_id"]
    map_doc = client.get(f"/datasets/{dataset_id}/map", params={"zoom": 3}).json()
    print(f"\nmap: {len(map_doc['points'])} points, {len(map_doc['labels'])} labels")
    for point in map_doc["points"][:4]:
        print(f"  ({point['x']:6.2f}, {point['y']:6.2f}) {point['platform']:8} "
              f"lod={point['lod']}")

    timeline = client.get(f"/datasets/{dataset_id}/timeline").json()
    print(f"\ntimeline: {timeline['granularity']} bins over "
          f"{timeline['start']} .. {timeline['end']}")

    axes = client.post(f"/datasets/{dataset_id}/layouts",
                       json={"kind": "semantic_axes", "x_concept": "gaming",
                             "y_concept": "music"}).json()
    app.state.jobs.wait(axes["job_id"], timeout=60)
    layout = client.get(f"/datasets/{dataset_id}/layouts/{axes['layout_id']}").json()
    print(f"\naxes layout {axes['layout_id']}: x=gaming, y=music, "
          f"{len(layout['points'])} points placed")
