"""Annotation service: leases, blindness, append-only persistence."""

import json
import threading

import pytest
from fastapi.testclient import TestClient

from pgdetect.annotation import AnnotationRecord, resolve_label
from pgdetect.service import AnnotationQueue, create_app

TOKENS = {"tok-ann1": "ann1", "tok-ann2": "ann2"}


def _queue_items(n=3):
    return [{"id": f"q{i:03d}", "text": f"blinder beitrag {i}"} for i in range(n)]


@pytest.fixture
def client(tmp_path):
    app = create_app(
        _queue_items(), tokens=TOKENS, records_path=tmp_path / "records.jsonl"
    )
    return TestClient(app)


def _next(client, token="tok-ann1"):
    return client.get("/api/queue/next", headers={"X-Auth-Token": token})


def _submit(client, post_id, token="tok-ann1", **fields):
    body = {"post_id": post_id, **fields}
    return client.post("/api/annotations", json=body, headers={"X-Auth-Token": token})


def test_unknown_token_rejected(client):
    res = client.get("/api/queue/next", headers={"X-Auth-Token": "nope"})
    assert res.status_code == 401
    assert res.json()["error"] == "unauthorized"
    res = client.get("/api/queue/next")
    assert res.status_code == 401


def test_item_payload_is_blind(client):
    res = _next(client)
    assert res.status_code == 200
    item = res.json()["item"]
    assert set(item) == {"id", "text"}


def test_two_fetches_then_submit_advances(client):
    first = _next(client).json()["item"]
    # re-fetch before submitting returns the same leased item
    assert _next(client).json()["item"] == first
    assert _submit(client, first["id"]).status_code == 200
    second = _next(client).json()["item"]
    assert second["id"] != first["id"]


def test_queue_exhaustion(client):
    seen = []
    for _ in range(3):
        item = _next(client).json()["item"]
        seen.append(item["id"])
        _submit(client, item["id"], checked_criteria=["pg_chasing_losses"])
    res = _next(client).json()
    assert res["item"] is None
    assert res["exhausted"] is True
    assert len(set(seen)) == 3


def test_duplicate_submission_conflicts(client):
    item = _next(client).json()["item"]
    assert _submit(client, item["id"]).status_code == 200
    res = _submit(client, item["id"])
    assert res.status_code == 409
    assert res.json()["error"] == "conflict"


def test_unknown_criterion_is_validation_error(client):
    item = _next(client).json()["item"]
    res = _submit(client, item["id"], checked_criteria=["X99"])
    assert res.status_code == 400
    assert res.json()["error"] == "validation"


def test_lease_exclusivity_between_annotators(client):
    a = _next(client, "tok-ann1").json()["item"]
    b = _next(client, "tok-ann2").json()["item"]
    assert a["id"] != b["id"]
    res = _submit(client, a["id"], token="tok-ann2")
    assert res.status_code == 409
    assert res.json()["error"] == "lease_expired"


def test_progress_counts(client):
    assert client.get("/api/progress").json() == {
        "total": 3, "annotated": 0, "inconclusive_so_far": 0, "remaining": 3,
    }
    item = _next(client).json()["item"]
    _submit(client, item["id"], manual_label_override="inconclusive")
    assert client.get("/api/progress").json() == {
        "total": 3, "annotated": 1, "inconclusive_so_far": 1, "remaining": 2,
    }


def test_export_matches_submissions_and_resolves(client, tmp_path):
    item = _next(client).json()["item"]
    _submit(client, item["id"], checked_criteria=["pg_chasing_losses"])
    lines = [l for l in client.get("/api/export").text.splitlines() if l]
    assert len(lines) == 1
    rec = AnnotationRecord.from_dict(json.loads(lines[0]))
    assert rec.post_id == item["id"]
    assert resolve_label(rec).value == "target"


def test_schema_endpoint_matches_catalog(client):
    schema = client.get("/api/schema").json()
    assert set(schema["subdomains"]) == {
        "pathological_gambling", "gambling_related_problems", "cognitive_distortions",
    }
    assert len(schema["flags"]) == 2


def test_records_persist_append_only(tmp_path):
    path = tmp_path / "records.jsonl"
    app = create_app(_queue_items(), tokens=TOKENS, records_path=path)
    client = TestClient(app)
    item = _next(client).json()["item"]
    _submit(client, item["id"])
    # restart: existing records load, resubmission still conflicts
    app2 = create_app(_queue_items(), tokens=TOKENS, records_path=path)
    client2 = TestClient(app2)
    assert client2.get("/api/progress").json()["annotated"] == 1
    assert _submit(client2, item["id"]).status_code == 409


def test_expired_lease_returns_to_queue():
    now = [0.0]
    queue = AnnotationQueue(_queue_items(1), lease_seconds=10, clock=lambda: now[0])
    lease = queue.next_item("ann1")
    assert lease.item["id"] == "q000"
    assert queue.next_item("ann2") is None
    now[0] = 11.0  # ann1's lease lapses
    lease2 = queue.next_item("ann2")
    assert lease2.item["id"] == "q000"
    rec = AnnotationRecord(post_id="q000", annotator_id="ann1")
    with pytest.raises(Exception) as err:
        queue.submit("ann1", rec)
    assert getattr(err.value, "code", None) == "lease_expired"


def test_concurrent_next_item_never_double_leases():
    queue = AnnotationQueue(_queue_items(64))
    got = []
    lock = threading.Lock()

    def worker(annotator):
        while True:
            lease = queue.next_item(annotator)
            if lease is None:
                return
            with lock:
                got.append(lease.item["id"])
            queue.submit(annotator, AnnotationRecord(post_id=lease.item["id"], annotator_id=annotator))

    threads = [threading.Thread(target=worker, args=(f"ann{i}",)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(got) == sorted(i["id"] for i in _queue_items(64))
    assert len(set(got)) == 64


def test_queue_rejects_leaky_items():
    with pytest.raises(ValueError):
        AnnotationQueue([{"id": "a", "text": "x", "subforum": "leak"}])
    with pytest.raises(ValueError):
        AnnotationQueue([{"id": "a", "text": "x"}, {"id": "a", "text": "y"}])


def test_index_lists_endpoints(client):
    body = client.get("/").json()
    assert "/api/queue/next" in body["endpoints"]
