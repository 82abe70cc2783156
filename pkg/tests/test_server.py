import numpy as np
import pytest

from dynlab.fractals import Viewport, julia_grid
from dynlab.protocol import (FrameDecoder, LabClient, ProtocolError,
                             encode_message, pack_array, unpack_array)
from dynlab.server import ServerHandle


@pytest.fixture(scope="module")
def server():
    handle = ServerHandle({"port": 0, "run_pace_seconds": 0.001,
                           "replay_buffer": 64})
    yield handle
    handle.stop()


@pytest.fixture()
def client(server):
    with LabClient(server.host, server.port) as c:
        yield c


def test_framing_roundtrip():
    decoder = FrameDecoder()
    messages = [{"a": 1}, {"b": [1, 2, 3]}, {"c": "x" * 10_000}]
    blob = b"".join(encode_message(m) for m in messages)
    out = []
    for i in range(0, len(blob), 7):  # drip-feed in awkward pieces
        out.extend(decoder.feed(blob[i:i + 7]))
    assert out == messages


def test_array_packing_roundtrip():
    arr = np.arange(12, dtype=float).reshape(3, 4)
    packed = pack_array(arr)
    assert packed["dtype"] == "f32le" and packed["shape"] == [3, 4]
    assert np.array_equal(unpack_array(packed), arr)


def test_create_starts_paused_with_distinct_ids(client):
    a = client.create("logistic")
    b = client.create("logistic")
    assert a["status"] == "paused" and a["step_count"] == 0
    assert a["param_epoch"] == 0
    assert a["id"] != b["id"]
    client.close_session(a["id"])
    client.close_session(b["id"])


def test_create_unknown_experiment_names_valid_ones(client):
    with pytest.raises(ProtocolError) as info:
        client.request({"type": "create", "experiment": "warp-drive"})
    assert "lorenz" in str(info.value)


def test_step_zero_no_frames(client):
    sess = client.create("lorenz")
    client.subscribe(sess["id"])
    snap = client.control(sess["id"], "step", 0)
    assert snap["step_count"] == 0
    snap = client.control(sess["id"], "step", 5)
    assert snap["step_count"] == 5
    frame = client.next_frame(timeout=5)
    assert frame["type"] == "frame" and frame["kind"] == "trajectory-batch"
    assert unpack_array(frame["payload"]["states"]).shape == (5, 3)
    client.close_session(sess["id"])


def test_epoch_increments_on_next_frame(client):
    sess = client.create("logistic", {"r": 3.2}, steps_per_frame=8)
    client.subscribe(sess["id"])
    client.control(sess["id"], "step", 8)
    f1 = client.next_frame(timeout=5)
    assert f1["param_epoch"] == 0
    assert f1["payload"]["r"] == 3.2
    ack = client.update(sess["id"], {"r": 3.5})
    assert ack["param_epoch"] == 1
    client.control(sess["id"], "step", 8)
    f2 = client.next_frame(timeout=5)
    assert f2["param_epoch"] == 1
    assert f2["payload"]["r"] == 3.5
    client.close_session(sess["id"])


def test_cold_key_patch_restart_required(client):
    sess = client.create("turing", {"nx": 16, "ny": 16, "n_steps": 0})
    with pytest.raises(ProtocolError) as info:
        client.update(sess["id"], {"nx": 512})
    assert info.value.code == "restart-required"
    snap = client.control(sess["id"], "pause")
    assert snap["params"]["nx"] == 16
    client.close_session(sess["id"])


def test_invalid_value_leaves_session_unchanged(client):
    sess = client.create("logistic", {"r": 3.2})
    with pytest.raises(ProtocolError) as info:
        client.update(sess["id"], {"r": 5})
    assert info.value.code == "validation"
    snap = client.control(sess["id"], "pause")
    assert snap["params"]["r"] == 3.2
    assert snap["param_epoch"] == 0
    client.close_session(sess["id"])


def test_engine_guard_patch_rejected(client):
    # B=200 would break the dt stability guard at the default dt.
    sess = client.create("turing", {"nx": 16, "ny": 16})
    with pytest.raises(ProtocolError) as info:
        client.update(sess["id"], {"B": 200.0})
    assert info.value.code == "validation"
    client.close_session(sess["id"])


def test_turing_perturb_is_one_shot(client):
    sess = client.create("turing", {"nx": 16, "ny": 16, "noise_amp": 0.0})
    ack = client.update(sess["id"], {"perturb": [8, 8, 2.0, 3.0]})
    assert ack["param_epoch"] == 1
    snap = client.control(sess["id"], "pause")
    assert snap["params"].get("perturb") is None
    client.close_session(sess["id"])


def test_run_then_pause_frames_stop(client):
    sess = client.create("lorenz", steps_per_frame=20)
    client.subscribe(sess["id"])
    client.control(sess["id"], "run")
    while True:  # wait for some progress
        if client.control(sess["id"], "pause")["step_count"] > 0:
            break
        client.control(sess["id"], "run")
    ack_step = client.control(sess["id"], "pause")["step_count"]
    # Drain everything queued; nothing may exceed the acknowledged step.
    seen = []
    while True:
        try:
            frame = client.next_frame(timeout=0.3)
        except (TimeoutError, OSError):
            break
        seen.append(frame["step"])
    assert all(s <= ack_step for s in seen)
    assert seen == sorted(seen)
    client.close_session(sess["id"])


def test_pause_resume_determinism(client):
    """Stepping 60 in one call or three 20-step calls with pauses in between
    yields the identical frame sequence (same chunk boundaries, same bytes)."""
    runs = []
    for plan in ([60], [20, 20, 20]):
        sess = client.create("henon", steps_per_frame=20)
        client.subscribe(sess["id"])
        for n in plan:
            client.control(sess["id"], "step", n)
        frames = [client.next_frame(timeout=5) for _ in range(3)]
        runs.append([(f["step"], f["payload"]["points"]["data"])
                     for f in frames])
        client.close_session(sess["id"])
    assert runs[0] == runs[1]


def test_subscribe_resume_within_window(client):
    sess = client.create("logistic", steps_per_frame=4)
    client.subscribe(sess["id"])
    client.control(sess["id"], "step", 12)
    steps = [client.next_frame(timeout=5)["step"] for _ in range(3)]
    assert steps == [4, 8, 12]
    with LabClient(client._sock.getpeername()[0],
                   client._sock.getpeername()[1]) as other:
        other.subscribe(sess["id"], from_step=4)
        resumed = [other.next_frame(timeout=5)["step"] for _ in range(2)]
        assert resumed == [8, 12]  # no gaps, no duplicates
    client.close_session(sess["id"])


def test_subscribe_beyond_window_keyframe(client):
    # replay_buffer is 64; generate >64 frames of 1 step each.
    sess = client.create("logistic", steps_per_frame=1)
    client.control(sess["id"], "step", 80)
    sub = client.subscribe(sess["id"], from_step=2)
    frame = client.next_frame(timeout=5)
    assert frame["keyframe"] is True
    assert frame["step"] == 80
    nxt_steps = []
    client.control(sess["id"], "step", 2)
    nxt_steps = [client.next_frame(timeout=5)["step"] for _ in range(2)]
    assert nxt_steps == [81, 82]
    client.close_session(sess["id"])


def test_failed_session_reports_original_failure(client):
    sess = client.create("henon", {"x0": 10.0, "y0": 10.0})
    with pytest.raises(ProtocolError) as info:
        client.control(sess["id"], "step", 10)
    assert "escaped" in str(info.value)
    with pytest.raises(ProtocolError) as info2:
        client.control(sess["id"], "step", 1)
    assert "escaped" in str(info2.value)
    client.close_session(sess["id"])


def _collect_epoch_tiles(client, session_id, epoch, total_pixels, kind="counts"):
    tiles = {}
    covered = 0
    while covered < total_pixels:
        frame = client.next_frame(timeout=10)
        if frame.get("type") != "frame":
            continue
        payload = frame["payload"]
        if frame["param_epoch"] != epoch:
            continue
        key = (payload["row0"], payload["col0"])
        if key in tiles:
            continue
        tiles[key] = payload
        covered += payload["rows"] * payload["cols"]
    return tiles


def _assemble(tiles, rows, cols, field):
    out = np.zeros((rows, cols), dtype=np.float32)
    for (r0, c0), payload in tiles.items():
        block = unpack_array(payload[field])
        out[r0:r0 + payload["rows"], c0:c0 + payload["cols"]] = block
    return out


def test_julia_session_renders_and_matches_direct(client):
    params = {"c_re": -0.8, "c_im": 0.156, "width": 4.0, "pixel_cols": 64,
              "pixel_rows": 64, "max_iter": 60, "tile_size": 16,
              "smooth": False}
    sess = client.create("julia", params)
    client.subscribe(sess["id"])
    tiles = _collect_epoch_tiles(client, sess["id"], 0, 64 * 64)
    image = _assemble(tiles, 64, 64, "counts")
    direct = julia_grid(complex(-0.8, 0.156),
                        Viewport(0j, 4.0, 64, 64), 60)
    assert np.array_equal(image, direct.counts.astype(np.float32))
    client.close_session(sess["id"])


def test_julia_mutation_storm_settles_on_final_c(client):
    params = {"c_re": 0.0, "c_im": 0.0, "width": 4.0, "pixel_cols": 32,
              "pixel_rows": 32, "max_iter": 50, "tile_size": 8,
              "smooth": False}
    sess = client.create("julia", params)
    client.subscribe(sess["id"])
    cs = [(-0.4, 0.1), (0.3, -0.2), (-0.7, 0.3), (-0.8, 0.156)]
    final_epoch = None
    for re, im in cs:
        final_epoch = client.update(sess["id"],
                                    {"c_re": re, "c_im": im})["param_epoch"]
    tiles = _collect_epoch_tiles(client, sess["id"], final_epoch, 32 * 32)
    image = _assemble(tiles, 32, 32, "counts")
    direct = julia_grid(complex(-0.8, 0.156), Viewport(0j, 4.0, 32, 32), 50)
    assert np.array_equal(image, direct.counts.astype(np.float32))
    client.close_session(sess["id"])


def test_epoch_never_regresses_per_session(client):
    sess = client.create("julia", {"pixel_cols": 16, "pixel_rows": 16,
                                   "tile_size": 8, "max_iter": 30,
                                   "smooth": False})
    client.subscribe(sess["id"])
    for i in range(4):
        client.update(sess["id"], {"c_re": 0.05 * i})
    seen: list[int] = []
    for _ in range(8):
        try:
            frame = client.next_frame(timeout=1.0)
        except (TimeoutError, OSError):
            break
        if frame.get("type") == "frame":
            seen.append(frame["param_epoch"])
    assert seen == sorted(seen)
    client.close_session(sess["id"])


def test_bsd_session_streams_products(client):
    sess = client.create("bsd", {"d": 1, "x_max": 100}, steps_per_frame=10)
    client.subscribe(sess["id"])
    client.control(sess["id"], "step", 10)
    frame = client.next_frame(timeout=5)
    pts = unpack_array(frame["payload"]["points"])
    assert pts.shape == (10, 2)
    assert pts[0, 0] == 3.0  # first good prime for d=1
    client.close_session(sess["id"])


def test_schema_endpoint_matches_registry(client):
    from dynlab.schema import registry_dump
    assert client.schema() == registry_dump()


def test_health_and_proto_version(client):
    health = client.health()
    assert health["proto_version"] == 1
    assert "sessions" in health


def test_capacity_retry_after():
    handle = ServerHandle({"port": 0, "max_sessions": 2,
                           "run_pace_seconds": 0.001})
    try:
        with LabClient(handle.host, handle.port) as c:
            a = c.create("logistic")
            b = c.create("logistic")
            with pytest.raises(ProtocolError) as info:
                c.create("logistic")
            assert info.value.code == "retry-after"
            c.close_session(a["id"])
            c.close_session(b["id"])
    finally:
        handle.stop()


def test_thousand_sessions_no_leak(server):
    """Create/close 1000 sessions: the server holds no residual state."""
    with LabClient(server.host, server.port) as c:
        for _ in range(1000):
            sess = c.create("logistic")
            c.close_session(sess["id"])
        assert c.health()["sessions"] == 0
    assert len(server.server.sessions) == 0
