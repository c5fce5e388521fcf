import json
import threading
import urllib.error
import urllib.request

import numpy as np
import pytest

from crashsynth.scenario import (
    RoadSpec,
    ScenarioSpec,
    VehicleSpec,
    export_scenario,
)
from crashsynth.server import serve_editor


def demo_scenario():
    n = 51
    road = RoadSpec(np.column_stack([np.linspace(0, 100, n), np.zeros(n)]), 2, 3.7)
    vehicles = [
        VehicleSpec(0, "ego", 0.0, np.array([[-4.0, 0.0], [-2.0, 0.0], [0.0, 0.0]]),
                    np.array([[0.0, 0.0], [2.0, 0.0], [4.0, 0.0]]),
                    np.array([20.0, 20.0, 20.0])),
        VehicleSpec(1, "D0T1", 0.0, np.empty((0, 2)),
                    np.array([[20.0, 0.0], [22.0, 0.0]]), np.array([18.0, 18.0])),
    ]
    return ScenarioSpec(road, vehicles, 10.0, meta={"origin": "test"})


@pytest.fixture()
def editor(tmp_path):
    path = tmp_path / "scenario.json"
    export_scenario(demo_scenario(), path)
    server = serve_editor(str(path), port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    yield base, path
    server.shutdown()
    server.server_close()
    thread.join(timeout=5)


def http(method, url, body=None):
    req = urllib.request.Request(url, data=body, method=method)
    if body is not None:
        req.add_header("Content-Type", "application/json")
    with urllib.request.urlopen(req) as resp:
        return resp.status, resp.read()


class TestEditorService:
    def test_get_scenario_byte_identical_to_file(self, editor):
        base, path = editor
        status, body = http("GET", base + "/scenario")
        assert status == 200
        assert body == path.read_bytes()

    def test_put_valid_scenario_persists(self, editor):
        base, path = editor
        _, body = http("GET", base + "/scenario")
        doc = json.loads(body)
        doc["vehicles"][1]["waypoints"][0][1] = 1.5
        status, reply = http("PUT", base + "/scenario", json.dumps(doc).encode())
        assert status == 200
        assert json.loads(reply) == {"ok": True}
        on_disk = json.loads(path.read_bytes())
        assert on_disk["vehicles"][1]["waypoints"][0][1] == 1.5
        # served copy matches the canonical re-export
        _, again = http("GET", base + "/scenario")
        assert again == path.read_bytes()

    def test_put_gap_rejected_with_invariant(self, editor):
        base, path = editor
        before = path.read_bytes()
        doc = json.loads(before)
        doc["vehicles"][0]["lead_in"][-1] = [-5.0, 0.0]  # 5 m seam
        with pytest.raises(urllib.error.HTTPError) as err:
            http("PUT", base + "/scenario", json.dumps(doc).encode())
        assert err.value.code == 422
        errors = json.loads(err.value.read())["errors"]
        assert any("continuity" in e for e in errors)
        assert path.read_bytes() == before  # rejected saves change nothing

    def test_put_garbage_rejected(self, editor):
        base, _ = editor
        with pytest.raises(urllib.error.HTTPError) as err:
            http("PUT", base + "/scenario", b"not json")
        assert err.value.code == 422

    def test_check_reports_conflicts(self, editor):
        base, _ = editor
        _, body = http("GET", base + "/scenario")
        doc = json.loads(body)
        # move the agent's start within 3 m of the ego lead-in start
        doc["vehicles"][1]["waypoints"] = [[-4.0, 3.0], [-2.0, 3.0]]
        doc["vehicles"][1]["speeds"] = [18.0, 18.0]
        http("PUT", base + "/scenario", json.dumps(doc).encode())
        status, reply = http("POST", base + "/check")
        assert status == 200
        conflicts = json.loads(reply)["conflicts"]
        assert len(conflicts) == 1
        assert conflicts[0]["distance"] == pytest.approx(3.0)
        assert {conflicts[0]["vehicle_a"], conflicts[0]["vehicle_b"]} == {0, 1}

    def test_unknown_route_404(self, editor):
        base, _ = editor
        with pytest.raises(urllib.error.HTTPError) as err:
            http("GET", base + "/nonsense")
        assert err.value.code == 404

    def test_port_busy_raises(self, editor, tmp_path):
        base, path = editor
        port = int(base.rsplit(":", 1)[1])
        with pytest.raises(OSError):
            serve_editor(str(path), port=port)


def test_static_assets_served(tmp_path):
    path = tmp_path / "scenario.json"
    export_scenario(demo_scenario(), path)
    static = tmp_path / "static"
    static.mkdir()
    (static / "index.html").write_text("<html>editor</html>")
    (static / "app.js").write_text("console.log('hi')")
    server = serve_editor(str(path), port=0, static_dir=str(static))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    try:
        status, body = http("GET", base + "/")
        assert status == 200 and b"editor" in body
        status, body = http("GET", base + "/app.js")
        assert status == 200 and b"console" in body
    finally:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)
