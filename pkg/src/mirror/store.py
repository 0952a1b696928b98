"""Dataset persistence with a data-minimizing retention policy.

One directory per dataset with a JSON manifest; no database needed at this
scale. Raw upload bytes exist only through the parsed stage and are deleted
the moment the pipeline advances to enriched; everything persisted beyond
that point is derived metadata, embeddings, and layouts. Stage transitions
are forward-only and manifest writes are atomic (tmp + rename) so a crashed
pipeline resumes from its last durable stage.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import uuid
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from .config import DatasetConfig
from .errors import DatasetLocked, NotFound, StageIncomplete, StageOrderViolation


class Stage(str, Enum):
    UPLOADED = "uploaded"
    PARSED = "parsed"
    ENRICHED = "enriched"
    HARMONIZED = "harmonized"
    EMBEDDED = "embedded"
    LAID_OUT = "laid_out"
    READY = "ready"


STAGE_ORDER = list(Stage)

# Primary artifact filename per stage (extra artifacts allowed alongside).
STAGE_ARTIFACTS = {
    Stage.PARSED: "events.json",
    Stage.ENRICHED: "enriched.json",
    Stage.HARMONIZED: "harmonized.json",
    Stage.EMBEDDED: "vectors.f32",
    Stage.LAID_OUT: "layouts/semantic_map.json",
    Stage.READY: "topics.json",
}


def stage_index(stage: Stage) -> int:
    return STAGE_ORDER.index(Stage(stage))


@dataclass
class Dataset:
    dataset_id: str
    created_at: str
    stage: Stage
    config: dict
    artifacts: dict = field(default_factory=dict)  # name -> sha256

    def to_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "created_at": self.created_at,
            "stage": self.stage.value,
            "config": self.config,
            "artifacts": self.artifacts,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Dataset":
        return cls(dataset_id=data["dataset_id"], created_at=data["created_at"],
                   stage=Stage(data["stage"]), config=data["config"],
                   artifacts=data.get("artifacts", {}))


class DatasetStore:
    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    # -- paths ------------------------------------------------------------

    def _dir(self, dataset_id: str) -> Path:
        return self.root / dataset_id

    def _manifest_path(self, dataset_id: str) -> Path:
        return self._dir(dataset_id) / "manifest.json"

    def raw_dir(self, dataset_id: str) -> Path:
        return self._dir(dataset_id) / "raw"

    def artifact_path(self, dataset_id: str, name: str) -> Path:
        return self._dir(dataset_id) / name

    # -- lifecycle ----------------------------------------------------------

    def create_dataset(self, config: DatasetConfig | dict | None = None,
                       dataset_id: str | None = None) -> Dataset:
        dataset_id = dataset_id or uuid.uuid4().hex[:12]
        if self._manifest_path(dataset_id).exists():
            raise ValueError(f"dataset {dataset_id} already exists")
        if isinstance(config, DatasetConfig):
            config = config.to_dict()
        dataset = Dataset(dataset_id=dataset_id,
                          created_at=datetime.now(timezone.utc).isoformat(),
                          stage=Stage.UPLOADED, config=config or DatasetConfig().to_dict())
        self._dir(dataset_id).mkdir(parents=True)
        self._write_manifest(dataset)
        return dataset

    def get(self, dataset_id: str) -> Dataset:
        path = self._manifest_path(dataset_id)
        if not path.exists():
            raise NotFound(f"dataset {dataset_id} not found")
        return Dataset.from_dict(json.loads(path.read_text()))

    def list_datasets(self) -> list[str]:
        return sorted(p.parent.name for p in self.root.glob("*/manifest.json"))

    def delete_dataset(self, dataset_id: str) -> None:
        """Remove every artifact of the dataset (withdrawal support)."""
        path = self._dir(dataset_id)
        if not path.exists():
            raise NotFound(f"dataset {dataset_id} not found")
        shutil.rmtree(path)

    def _write_manifest(self, dataset: Dataset) -> None:
        path = self._manifest_path(dataset.dataset_id)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(dataset.to_dict(), indent=2, sort_keys=True))
        os.replace(tmp, path)

    # -- raw uploads --------------------------------------------------------

    def save_raw(self, dataset_id: str, files: list[tuple[str, bytes]]) -> None:
        dataset = self.get(dataset_id)
        if stage_index(dataset.stage) > stage_index(Stage.PARSED):
            raise StageOrderViolation("raw files cannot be added after parsing")
        raw = self.raw_dir(dataset_id)
        raw.mkdir(exist_ok=True)
        for name, data in files:
            (raw / Path(name).name).write_bytes(data)

    def read_raw(self, dataset_id: str) -> list[tuple[str, bytes]]:
        self.get(dataset_id)
        raw = self.raw_dir(dataset_id)
        if not raw.exists():
            raise NotFound(f"dataset {dataset_id} has no raw files")
        return [(p.name, p.read_bytes()) for p in sorted(raw.iterdir())]

    def purge_raw(self, dataset_id: str) -> bool:
        """Delete raw upload bytes; normalized events are retained."""
        raw = self.raw_dir(dataset_id)
        if raw.exists():
            shutil.rmtree(raw)
            return True
        return False

    # -- stage artifacts ------------------------------------------------------

    def put_artifact(self, dataset_id: str, name: str, payload: bytes) -> str:
        """Content-addressed write: the manifest records the payload digest."""
        dataset = self.get(dataset_id)
        path = self.artifact_path(dataset_id, name)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_bytes(payload)
        os.replace(tmp, path)
        digest = hashlib.sha256(payload).hexdigest()
        dataset.artifacts[name] = digest
        self._write_manifest(dataset)
        return digest

    def get_artifact(self, dataset_id: str, name: str) -> bytes:
        self.get(dataset_id)
        path = self.artifact_path(dataset_id, name)
        if not path.exists():
            raise NotFound(f"artifact {name} not found for dataset {dataset_id}")
        return path.read_bytes()

    def put_stage(self, dataset_id: str, stage: Stage, payload: bytes) -> str:
        name = STAGE_ARTIFACTS.get(Stage(stage))
        if name is None:
            raise ValueError(f"stage {stage} has no primary artifact")
        return self.put_artifact(dataset_id, name, payload)

    def get_stage(self, dataset_id: str, stage: Stage) -> bytes:
        stage = Stage(stage)
        dataset = self.get(dataset_id)
        if stage_index(stage) > stage_index(dataset.stage):
            raise StageIncomplete(
                f"dataset {dataset_id} is at {dataset.stage.value}, {stage.value} not done")
        name = STAGE_ARTIFACTS.get(stage)
        if name is None:
            raise ValueError(f"stage {stage} has no primary artifact")
        return self.get_artifact(dataset_id, name)

    def advance_stage(self, dataset_id: str, stage: Stage) -> Dataset:
        """Forward-only transition; entering enriched purges raw uploads."""
        stage = Stage(stage)
        dataset = self.get(dataset_id)
        if stage_index(stage) < stage_index(dataset.stage):
            raise StageOrderViolation(
                f"cannot go back from {dataset.stage.value} to {stage.value}")
        dataset.stage = stage
        self._write_manifest(dataset)
        if stage_index(stage) >= stage_index(Stage.ENRICHED):
            self.purge_raw(dataset_id)
        return dataset

    # -- locking --------------------------------------------------------------

    @contextmanager
    def writer_lock(self, dataset_id: str):
        """Single pipeline writer per dataset; readers are unaffected."""
        lock_path = self._dir(dataset_id) / ".lock"
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise DatasetLocked(f"dataset {dataset_id} is locked by another writer") from None
        try:
            os.write(fd, str(os.getpid()).encode())
            yield
        finally:
            os.close(fd)
            lock_path.unlink(missing_ok=True)

    # -- maintenance ------------------------------------------------------------

    def gc(self) -> list[str]:
        """Remove leftover tmp files and stale locks; report what was removed."""
        removed = []
        for tmp in self.root.glob("*/**/*.tmp"):
            tmp.unlink()
            removed.append(str(tmp.relative_to(self.root)))
        for lock in self.root.glob("*/.lock"):
            lock.unlink()
            removed.append(str(lock.relative_to(self.root)))
        return removed
