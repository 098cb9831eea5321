import json
import math

import pytest
from fastapi.testclient import TestClient

from cornerbox.geometry import Corner, corners_from_box
from cornerbox.pipeline import Dataset, recover_annotation, result_to_record
from cornerbox.service import create_app
from cornerbox.synthetic import generate_dataset
from cornerbox.weak_labels import WeakAnnotation, weak_to_full
from cornerbox.recovery import fit_rectangle


@pytest.fixture(scope="module")
def served(tmp_path_factory):
    root = tmp_path_factory.mktemp("served")
    manifest = generate_dataset(root, frames=2, seed=31)
    client = TestClient(create_app(root))
    return client, Dataset(root), manifest


def first_recoverable(dataset, manifest):
    for frame, entry in manifest["frames"].items():
        for ann in dataset.annotations(frame):
            if len(ann.corners) >= 3 and ann.image_box is not None:
                truth = next(o for o in entry["objects"] if o["id"] == ann.object_id)
                return frame, ann, truth
    raise AssertionError("dataset has no recoverable annotation")


class TestFrames:
    def test_listing(self, served):
        client, dataset, _ = served
        res = client.get("/frames")
        assert res.status_code == 200
        assert res.json() == {"frames": dataset.frames()}


class TestBev:
    def test_full_cloud_when_under_limit(self, served):
        client, dataset, _ = served
        frame = dataset.frames()[0]
        res = client.get(f"/frames/{frame}/bev")
        assert res.status_code == 200
        body = res.json()
        cloud = dataset.cloud(frame)
        assert body["frame"] == frame
        assert body["total"] == len(cloud)
        assert body["count"] == len(cloud)
        assert body["x"] == [float(v) for v in cloud.xy[:, 0]]

    def test_decimation_is_stride_based(self, served):
        client, dataset, _ = served
        frame = dataset.frames()[0]
        cloud = dataset.cloud(frame)
        limit = max(1, len(cloud) // 3)
        res = client.get(f"/frames/{frame}/bev", params={"decimate": limit})
        body = res.json()
        stride = math.ceil(len(cloud) / limit)
        expected = cloud.xy[::stride]
        assert body["count"] == len(expected)
        assert body["count"] <= limit
        assert body["x"] == [float(v) for v in expected[:, 0]]

    def test_unknown_frame(self, served):
        client, _, _ = served
        assert client.get("/frames/zzz/bev").status_code == 404

    def test_bad_decimate(self, served):
        client, dataset, _ = served
        frame = dataset.frames()[0]
        res = client.get(f"/frames/{frame}/bev", params={"decimate": 0})
        assert res.status_code == 422


class TestAnnotations:
    def test_get_matches_disk(self, served):
        client, dataset, _ = served
        frame = dataset.frames()[0]
        res = client.get(f"/frames/{frame}/annotations")
        assert res.status_code == 200
        body = res.json()
        assert body["frame"] == frame
        stored = dataset.annotations(frame)
        assert len(body["records"]) == len(stored)
        for rec, ann in zip(body["records"], stored):
            assert rec["object"] == ann.object_id
            assert len(rec["corners"]) == len(ann.corners)

    def test_put_then_get_identical(self, served):
        client, dataset, _ = served
        frame = dataset.frames()[1]
        records = [{
            "frame": frame,
            "object": "edited",
            "corners": [
                {"n": 0, "x": 12.0, "y": 6.0, "zg": 0.05},
                {"n": 1, "x": 12.0, "y": 4.0, "zg": 0.04},
            ],
            "image_box": [100.0, 150.0, 200.0, 250.0],
        }]
        put = client.put(f"/frames/{frame}/annotations",
                         json={"records": records})
        assert put.status_code == 200
        got = client.get(f"/frames/{frame}/annotations")
        assert got.json()["records"] == put.json()["records"]
        assert got.json()["records"][0]["corners"] == records[0]["corners"]
        stored = dataset.annotations(frame)
        assert stored[0].object_id == "edited"

    def test_put_wrong_frame_rejected(self, served):
        client, dataset, _ = served
        frame = dataset.frames()[0]
        records = [{"frame": "other", "object": "x", "corners": [],
                    "image_box": None}]
        res = client.put(f"/frames/{frame}/annotations",
                         json={"records": records})
        assert res.status_code == 422

    def test_put_duplicate_corner_indices_rejected(self, served):
        client, dataset, _ = served
        frame = dataset.frames()[0]
        records = [{
            "frame": frame, "object": "x",
            "corners": [{"n": 0, "x": 1, "y": 2, "zg": 0},
                        {"n": 0, "x": 2, "y": 3, "zg": 0}],
            "image_box": None,
        }]
        res = client.put(f"/frames/{frame}/annotations",
                         json={"records": records})
        assert res.status_code == 422

    def test_put_non_finite_rejected(self, served):
        client, dataset, _ = served
        frame = dataset.frames()[0]
        records = [{
            "frame": frame, "object": "x",
            "corners": [{"n": 0, "x": "NaN", "y": 2, "zg": 0}],
            "image_box": None,
        }]
        res = client.put(f"/frames/{frame}/annotations",
                         json={"records": records})
        assert res.status_code == 422

    def test_put_extra_field_rejected(self, served):
        client, dataset, _ = served
        frame = dataset.frames()[0]
        records = [{
            "frame": frame, "object": "x", "corners": [], "image_box": None,
            "surprise": 1,
        }]
        res = client.put(f"/frames/{frame}/annotations",
                         json={"records": records})
        assert res.status_code == 422

    def test_unknown_frame(self, served):
        client, _, _ = served
        assert client.get("/frames/zzz/annotations").status_code == 404
        res = client.put("/frames/zzz/annotations", json={"records": []})
        assert res.status_code == 404


class TestRecover:
    def test_parity_with_library_on_stored_annotation(self, served):
        client, dataset, manifest = served
        frame, ann, truth = first_recoverable(dataset, manifest)
        body = {
            "object": ann.object_id,
            "corners": [{"n": c.index, "x": c.x, "y": c.y, "zg": c.z_g}
                        for c in ann.corners],
            "image_box": list(ann.image_box),
        }
        res = client.post(f"/frames/{frame}/recover", json=body)
        assert res.status_code == 200
        got = res.json()

        expected = result_to_record(recover_annotation(
            ann, calib=dataset.calib(frame), ground=dataset.ground(frame)))
        assert got["status"] == expected["status"] == "ok"
        for field in ("x", "y", "l", "w", "theta"):
            assert got["bev"][field] == expected["bev"][field]
        for field in ("x", "y", "z", "l", "w", "h", "theta"):
            assert got["box3d"][field] == expected["box3d"][field]
        tx, ty, tz, tl, tw, th, _ = truth["box"]
        assert got["box3d"]["x"] == pytest.approx(tx, abs=0.05)
        assert got["box3d"]["h"] == pytest.approx(th, abs=0.05)

    def test_two_adjacent_corners_match_weak_to_full(self, served):
        client, dataset, manifest = served
        frame = dataset.frames()[0]
        entry = manifest["frames"][frame]
        box = entry["objects"][0]["box"]
        from cornerbox.geometry import BoxBEV

        bev = BoxBEV(box[0], box[1], box[3], box[4], box[6])
        cs = corners_from_box(bev)
        corners = [{"n": n, "x": cs.by_index(n).x, "y": cs.by_index(n).y,
                    "zg": None} for n in (0, 3)]
        res = client.post(f"/frames/{frame}/recover",
                          json={"corners": corners})
        assert res.status_code == 200
        got = res.json()
        assert got["status"] == "partial"
        assert got["reason"] == "Underdetermined"
        target = weak_to_full(WeakAnnotation(
            frame, "live",
            tuple(Corner(c["n"], c["x"], c["y"]) for c in corners)))
        assert got["bev"]["l"] == pytest.approx(target.l, abs=1e-6)
        assert abs(math.remainder(got["bev"]["theta"] - target.theta,
                                  2 * math.pi)) < 1e-6
        fit = fit_rectangle([(c["x"], c["y"], c["n"]) for c in corners])
        assert got["bev"]["x"] == pytest.approx(fit.box.x, abs=1e-9)

    def test_zg_filled_from_ground_plane(self, served):
        client, dataset, _ = served
        frame = dataset.frames()[0]
        ground = dataset.ground(frame)
        corners = [{"n": 0, "x": 12.0, "y": 6.0, "zg": None},
                   {"n": 1, "x": 12.0, "y": 4.0}]
        res = client.post(f"/frames/{frame}/recover",
                          json={"corners": corners, "object": "probe"})
        assert res.status_code == 200
        got = res.json()
        assert got["object"] == "probe"
        for c in got["corners"]:
            assert c["zg"] == pytest.approx(
                ground.height_at(c["x"], c["y"]), abs=1e-12)

    def test_explicit_zg_preserved(self, served):
        client, dataset, _ = served
        frame = dataset.frames()[0]
        corners = [{"n": 0, "x": 12.0, "y": 6.0, "zg": 0.123},
                   {"n": 1, "x": 12.0, "y": 4.0, "zg": 0.456}]
        res = client.post(f"/frames/{frame}/recover", json={"corners": corners})
        assert [c["zg"] for c in res.json()["corners"]] == [0.123, 0.456]

    def test_single_corner_reports_reason(self, served):
        client, dataset, _ = served
        frame = dataset.frames()[0]
        res = client.post(f"/frames/{frame}/recover",
                          json={"corners": [{"n": 0, "x": 12.0, "y": 6.0}]})
        assert res.status_code == 200
        got = res.json()
        assert got["status"] == "failed"
        assert got["reason"] == "LocalizeOnly"
        assert got["bev"] is None

    def test_duplicate_indices_rejected(self, served):
        client, dataset, _ = served
        frame = dataset.frames()[0]
        res = client.post(f"/frames/{frame}/recover", json={
            "corners": [{"n": 0, "x": 1, "y": 2}, {"n": 0, "x": 3, "y": 4}]})
        assert res.status_code == 422

    def test_bad_prior_rejected(self, served):
        client, dataset, _ = served
        frame = dataset.frames()[0]
        res = client.post(f"/frames/{frame}/recover", json={
            "corners": [{"n": 0, "x": 1, "y": 2}], "l_prior": -1.0})
        assert res.status_code == 422

    def test_unknown_frame(self, served):
        client, _, _ = served
        res = client.post("/frames/zzz/recover", json={"corners": []})
        assert res.status_code == 404


class TestServiceIsReadOnlyForSensorData:
    def test_cloud_and_calib_untouched(self, served):
        client, dataset, _ = served
        frame = dataset.frames()[0]
        cloud_path = dataset.velodyne_dir / f"{frame}.bin"
        calib_path = dataset.calib_dir / f"{frame}.txt"
        before = (cloud_path.read_bytes(), calib_path.read_text())
        client.get(f"/frames/{frame}/bev")
        client.post(f"/frames/{frame}/recover",
                    json={"corners": [{"n": 0, "x": 1, "y": 2}]})
        client.put(f"/frames/{frame}/annotations", json={"records": []})
        after = (cloud_path.read_bytes(), calib_path.read_text())
        assert after == before
