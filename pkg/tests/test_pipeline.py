import json

from orchard_edge.gateway import parse_capture_meta
from orchard_edge.pipeline import Pipeline
from orchard_edge.store import open_store

from conftest import make_image_bytes, make_meta


def ingest_one(pipeline, image_bytes, **meta_over):
    meta = parse_capture_meta(json.dumps(make_meta(**meta_over)))
    return pipeline.ingest(meta, image_bytes, 64, 48)


def test_fifo_processing(pipeline):
    recs = [ingest_one(pipeline, make_image_bytes(seed=i)) for i in range(3)]
    pipeline.start()
    assert pipeline.drain(10)
    pipeline.stop()
    for rec in recs:
        assert pipeline.store.get_image(rec.image_id).status == "processed"
        assert pipeline.store.get_result(rec.image_id) is not None
    # result ids were assigned in job order
    result_ids = [pipeline.store.get_result(r.image_id)["result_id"] for r in recs]
    assert result_ids == sorted(result_ids)


def test_corrupt_image_isolated(pipeline):
    good1 = ingest_one(pipeline, make_image_bytes(seed=1))
    # valid JPEG header so ingest passes, then truncated body
    bad_bytes = make_image_bytes(seed=2)[:200]
    bad = ingest_one(pipeline, make_image_bytes(seed=2))
    with open(bad.stored_path, "wb") as fh:
        fh.write(bad_bytes)
    good2 = ingest_one(pipeline, make_image_bytes(seed=3))
    pipeline.start()
    assert pipeline.drain(10)
    pipeline.stop()
    assert pipeline.store.get_image(bad.image_id).status == "failed"
    assert pipeline.store.get_image(bad.image_id).failure_reason
    for rec in (good1, good2):
        assert pipeline.store.get_image(rec.image_id).status == "processed"
    assert pipeline.store.conservation_holds()


def test_classification_and_detection_payload_shapes(pipeline):
    leaf = ingest_one(pipeline, make_image_bytes(seed=4), frame_kind="leaf_closeup")
    fruit = ingest_one(pipeline, make_image_bytes(seed=5), frame_kind="fruit_closeup")
    wide = ingest_one(pipeline, make_image_bytes(seed=6), frame_kind="canopy_wide")
    pipeline.start()
    assert pipeline.drain(15)
    pipeline.stop()
    leaf_res = pipeline.store.get_result(leaf.image_id)
    assert leaf_res["task"] == "leaf_disease"
    assert len(leaf_res["payload"]["probs"]) == 4
    assert abs(sum(leaf_res["payload"]["probs"]) - 1.0) < 1e-6
    fruit_res = pipeline.store.get_result(fruit.image_id)
    assert fruit_res["payload"]["label"] in ("fresh", "rotten")
    wide_res = pipeline.store.get_result(wide.image_id)
    assert isinstance(wide_res["payload"], list)
    for det in wide_res["payload"]:
        x1, y1, x2, y2 = det["box"]
        assert 0 <= x1 < x2 <= 64 and 0 <= y1 < y2 <= 48
        assert det["score"] >= 0.25


def test_sequential_execution_never_overlaps(pipeline):
    for i in range(10):
        ingest_one(pipeline, make_image_bytes(seed=10 + i))
    pipeline.start()
    assert pipeline.drain(20)
    pipeline.stop()
    assert pipeline.max_in_flight_seen == 1


def test_queue_survives_restart(tmp_path, stub_slots):
    store = open_store(str(tmp_path / "s.db"))
    pl = Pipeline(store, str(tmp_path / "data"), stub_slots)
    recs = [ingest_one(pl, make_image_bytes(seed=20 + i)) for i in range(4)]
    store.close()  # no worker ran: simulated power cut with queued jobs

    store2 = open_store(str(tmp_path / "s.db"))
    pl2 = Pipeline(store2, str(tmp_path / "data"), stub_slots)
    assert store2.queued_count() == 4
    pl2.start()
    assert pl2.drain(10)
    pl2.stop()
    for rec in recs:
        assert store2.get_image(rec.image_id).status == "processed"
    store2.close()


def test_stub_end_to_end_determinism(tmp_path, stub_slots):
    """Same bytes through two fresh pipelines give identical payload JSON."""
    payloads = []
    for run in range(2):
        store = open_store(str(tmp_path / f"det{run}.db"))
        pl = Pipeline(store, str(tmp_path / f"data{run}"), stub_slots)
        recs = [ingest_one(pl, make_image_bytes(seed=100 + i),
                           frame_kind=["leaf_closeup", "fruit_closeup",
                                       "canopy_wide"][i % 3])
                for i in range(6)]
        pl.start()
        assert pl.drain(15)
        pl.stop()
        rows = [store.conn.execute(
            "SELECT payload FROM results WHERE image_id=?",
            (r.image_id,)).fetchone()[0] for r in recs]
        payloads.append(rows)
        store.close()
    assert payloads[0] == payloads[1]


def test_pipeline_conservation_after_drain(pipeline):
    for i in range(8):
        ingest_one(pipeline, make_image_bytes(seed=200 + i))
    pipeline.start()
    assert pipeline.drain(20)
    pipeline.stop()
    stats = pipeline.store.stats()
    assert stats["processed"] + stats["failures"] == 8
    assert pipeline.store.conservation_holds()
