import json

import pytest

from mirror.config import DatasetConfig
from mirror.errors import (DatasetLocked, NotFound, StageIncomplete, StageOrderViolation)
from mirror.store import Dataset, DatasetStore, Stage


@pytest.fixture
def store(tmp_path):
    return DatasetStore(tmp_path / "data")


@pytest.fixture
def dataset(store):
    return store.create_dataset(DatasetConfig())


class TestArtifacts:
    def test_write_then_read_identical(self, store, dataset):
        payload = b'{"events": []}'
        store.advance_stage(dataset.dataset_id, Stage.PARSED)
        digest = store.put_stage(dataset.dataset_id, Stage.PARSED, payload)
        assert store.get_stage(dataset.dataset_id, Stage.PARSED) == payload
        assert len(digest) == 64  # content-addressed record

    def test_read_future_stage_incomplete(self, store, dataset):
        store.put_stage(dataset.dataset_id, Stage.PARSED, b"x")
        with pytest.raises(StageIncomplete):
            store.get_stage(dataset.dataset_id, Stage.EMBEDDED)

    def test_missing_artifact_not_found(self, store, dataset):
        store.advance_stage(dataset.dataset_id, Stage.PARSED)
        with pytest.raises(NotFound):
            store.get_stage(dataset.dataset_id, Stage.PARSED)

    def test_manifest_round_trip(self, store, dataset):
        loaded = store.get(dataset.dataset_id)
        assert loaded.dataset_id == dataset.dataset_id
        assert loaded.stage is Stage.UPLOADED
        assert Dataset.from_dict(loaded.to_dict()) == loaded


class TestStages:
    def test_forward_only(self, store, dataset):
        store.advance_stage(dataset.dataset_id, Stage.HARMONIZED)
        with pytest.raises(StageOrderViolation):
            store.advance_stage(dataset.dataset_id, Stage.PARSED)

    def test_raw_files_live_until_enriched(self, store, dataset):
        store.save_raw(dataset.dataset_id, [("a.json", b"[]")])
        store.advance_stage(dataset.dataset_id, Stage.PARSED)
        assert store.read_raw(dataset.dataset_id) == [("a.json", b"[]")]
        store.advance_stage(dataset.dataset_id, Stage.ENRICHED)
        assert not store.raw_dir(dataset.dataset_id).exists()
        with pytest.raises(NotFound):
            store.read_raw(dataset.dataset_id)

    def test_raw_upload_blocked_after_parse(self, store, dataset):
        store.advance_stage(dataset.dataset_id, Stage.ENRICHED)
        with pytest.raises(StageOrderViolation):
            store.save_raw(dataset.dataset_id, [("late.json", b"[]")])


class TestPurgeAndDelete:
    def test_purge_raw_removes_bytes(self, store, dataset):
        store.save_raw(dataset.dataset_id, [("export.csv", b"Title,Date\n")])
        assert store.purge_raw(dataset.dataset_id) is True
        with pytest.raises(NotFound):
            store.read_raw(dataset.dataset_id)
        # normalized artifacts survive a purge
        store.put_artifact(dataset.dataset_id, "events.json", b"[]")
        store.purge_raw(dataset.dataset_id)
        assert store.get_artifact(dataset.dataset_id, "events.json") == b"[]"

    def test_delete_removes_everything(self, store, dataset):
        store.save_raw(dataset.dataset_id, [("export.csv", b"x")])
        store.put_artifact(dataset.dataset_id, "events.json", b"[]")
        store.delete_dataset(dataset.dataset_id)
        assert not (store.root / dataset.dataset_id).exists()
        with pytest.raises(NotFound):
            store.get(dataset.dataset_id)
        with pytest.raises(NotFound):
            store.delete_dataset(dataset.dataset_id)

    def test_list_datasets(self, store):
        a = store.create_dataset()
        b = store.create_dataset()
        assert set(store.list_datasets()) == {a.dataset_id, b.dataset_id}


class TestCrashResume:
    def test_restart_resumes_from_last_durable_stage(self, tmp_path):
        """Simulated kill: artifacts written, then the process 'dies' before
        the next stage; a fresh store instance sees the durable state."""
        root = tmp_path / "data"
        store = DatasetStore(root)
        ds = store.create_dataset()
        store.put_stage(ds.dataset_id, Stage.PARSED, b'["events"]')
        store.advance_stage(ds.dataset_id, Stage.PARSED)
        # crash here: nothing else runs

        reopened = DatasetStore(root)
        recovered = reopened.get(ds.dataset_id)
        assert recovered.stage is Stage.PARSED
        assert reopened.get_stage(ds.dataset_id, Stage.PARSED) == b'["events"]'

    def test_tmp_files_never_visible_as_artifacts(self, store, dataset):
        store.put_artifact(dataset.dataset_id, "events.json", b"[]")
        leftovers = list((store.root / dataset.dataset_id).glob("*.tmp"))
        assert leftovers == []


class TestLocking:
    def test_single_writer(self, store, dataset):
        with store.writer_lock(dataset.dataset_id):
            with pytest.raises(DatasetLocked):
                with store.writer_lock(dataset.dataset_id):
                    pass
        # released: can lock again
        with store.writer_lock(dataset.dataset_id):
            pass

    def test_gc_clears_stale_locks_and_tmp(self, store, dataset):
        (store.root / dataset.dataset_id / ".lock").write_text("1234")
        (store.root / dataset.dataset_id / "junk.tmp").write_bytes(b"zz")
        removed = store.gc()
        assert len(removed) == 2
        with store.writer_lock(dataset.dataset_id):
            pass
