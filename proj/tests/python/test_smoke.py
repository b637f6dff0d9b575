import json
import math

import numpy as np
import pytest

import opengraph as og


@pytest.fixture(scope="module")
def scene(tmp_path_factory):
    root = tmp_path_factory.mktemp("scene")
    spec = {
        "seed": 3,
        "frames": 5,
        "embedding_dim": 128,
        "auto_objects": 6,
        "trajectory": {"shape": "cross"},
    }
    truth = og.generate_scene(json.dumps(spec), root / "seq")
    return root, truth


def test_hash_embedding():
    e = og.hash_embedding("a red car", 64)
    assert e.shape == (64,)
    assert math.isclose(float(np.linalg.norm(e)), 1.0, rel_tol=1e-12)
    with pytest.raises(ValueError):
        og.hash_embedding("", 64)


def test_build_query_patch(scene):
    root, truth = scene
    m = og.build_map(root / "seq")
    assert len(m.instances) == len(truth["objects"])
    assert m.validate() == []
    assert {s["kind"] for s in m.segments} >= {"intersection", "straight"}

    target = truth["objects"][1]["caption"]
    hits = m.retrieve_text(target, k=2)
    assert len(hits) == 2
    assert hits[0][2] == target

    points, labels = m.segment()
    assert points.shape == (labels.shape[0], 3)
    assert (labels >= 0).all()

    removed = hits[0][0]
    patched = m.remove(removed)
    assert patched.validate() == []
    assert len(patched.instances) == len(m.instances) - 1
    assert all(h[0] != removed for h in patched.retrieve_text(target, k=10))

    patched.save(root / "map")
    again = og.Map.load(root / "map")
    assert [i["id"] for i in again.instances] == [i["id"] for i in patched.instances]

    route = m.plan("S0", "S1")
    assert route is not None and route[1] >= 0.0


def test_lane_graph(scene):
    root, _ = scene
    nodes, edges = og.lane_graph(root / "seq")
    kinds = sorted(kind for _, kind, _ in nodes)
    assert kinds.count("intersection") == 1
    assert kinds.count("breakpoint") == 4
    assert len(edges) == 4


def test_metrics():
    gt = [0] * 50 + [1] * 10 + [0] * 20
    pred = [0] * 50 + [0] * 10 + [1] * 20
    r = og.segmentation_metrics(gt, pred, ["car", "other"])
    iou, f1 = r["classes"]["car"]
    assert abs(iou - 0.625) <= 1e-9
    assert abs(f1 - 10 / 13) <= 1e-9
    assert og.recall_at_k([[1, 2, 3]], [{3}], 2) == 0.0
    assert og.recall_at_k([[1, 2, 3]], [{3}], 3) == 1.0


def test_errors(tmp_path):
    (tmp_path / "empty").mkdir()
    with pytest.raises(og.DataError, match="no frames found"):
        og.build_map(tmp_path / "empty")
    with pytest.raises(ValueError):
        og.build_map(tmp_path / "empty", {"lane.radius": "abc"})
    with pytest.raises(og.DataError):
        og.Map.load(tmp_path / "missing")
