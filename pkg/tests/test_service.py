import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from liftguard.network import ArchitectureConfig, init_model, model_forward
from liftguard.pose import Label, SequenceWindow, extract_features
from liftguard.service import (
    Prediction,
    RiskAssessment,
    RiskLevel,
    ServiceOptions,
    SessionError,
    StreamSession,
    assess_risk,
    create_app,
)
from liftguard.synthetic import STYLE_SQUAT, STYLE_STOOP, generate_clip


def small_model(seed=0, input_width=88, filter_head=True):
    arch = ArchitectureConfig(input_width=input_width, lstm_hidden=(6, 6),
                              dense_sizes=(4, 2), filter_head=filter_head)
    return init_model(arch, seed=seed)


def squat_frames(n=30, seed=3):
    frames = []
    idx = 0
    while len(frames) < n:
        clip = generate_clip(STYLE_SQUAT, np.random.default_rng(seed + idx), 0.0, 1.0, 0.0)
        frames.extend(clip)
        idx += 1
    # re-time so timestamps stay monotonic across concatenated cycles
    return [
        type(f)(timestamp_ms=33 * k, landmarks=f.landmarks)
        for k, f in enumerate(frames[:n])
    ]


def stoop_frames(n=30, seed=5):
    frames = []
    idx = 0
    while len(frames) < n:
        clip = generate_clip(STYLE_STOOP, np.random.default_rng(seed + idx), 0.0, 1.0, 0.0)
        frames.extend(clip)
        idx += 1
    return [
        type(f)(timestamp_ms=33 * k, landmarks=f.landmarks)
        for k, f in enumerate(frames[:n])
    ]


def frame_message(frame):
    return json.dumps({"type": "frame", "t": frame.timestamp_ms,
                       "lm": frame.landmarks.tolist()})


def make_prediction(label, confidence):
    probs = np.array([1 - confidence, confidence]) if label is Label.BAD \
        else np.array([confidence, 1 - confidence])
    return Prediction(label=label, probs=probs, window_end_ms=0, confidence=confidence)


class TestAssessRisk:
    def test_all_good_is_low(self):
        log = [make_prediction(Label.GOOD, 0.9)] * 10
        risk = assess_risk(log)
        assert risk == RiskAssessment(level=RiskLevel.LOW, score=0.0, basis=10)

    def test_all_bad_is_high(self):
        risk = assess_risk([make_prediction(Label.BAD, 0.8)] * 10)
        assert risk.level is RiskLevel.HIGH
        assert risk.score == 1.0

    def test_even_split_is_medium(self):
        log = [make_prediction(Label.GOOD, 0.9)] * 5 + [make_prediction(Label.BAD, 0.9)] * 5
        risk = assess_risk(log)
        assert risk.score == pytest.approx(0.5)
        assert risk.level is RiskLevel.MEDIUM

    def test_empty_log_gives_no_assessment(self):
        assert assess_risk([]) is None

    def test_confidence_weighting(self):
        # one hesitant Bad against one certain Good stays below even split
        log = [make_prediction(Label.BAD, 0.55), make_prediction(Label.GOOD, 0.95)]
        risk = assess_risk(log)
        assert risk.score == pytest.approx(0.55 / (0.55 + 0.95))

    def test_boundary_levels(self):
        # thresholds are strict: scores at 0.3 and 0.7 stay Medium
        cases = [(0.29, RiskLevel.LOW), (0.3, RiskLevel.MEDIUM),
                 (0.7, RiskLevel.MEDIUM), (0.71, RiskLevel.HIGH)]
        for score, level in cases:
            log = [make_prediction(Label.BAD, 1.0)] * int(score * 100) + \
                  [make_prediction(Label.GOOD, 1.0)] * (100 - int(score * 100))
            assert assess_risk(log).level is level

    def test_pure_function_of_log(self):
        log = [make_prediction(Label.BAD, 0.8)] * 3
        assert assess_risk(log) == assess_risk(list(log))


class TestStreamSession:
    def test_warmup_emits_nothing(self):
        session = StreamSession(small_model())
        frames = squat_frames(29)
        assert all(session.push_frame(f) is None for f in frames)
        assert not session.warmed_up

    def test_first_prediction_on_frame_30(self):
        session = StreamSession(small_model())
        frames = squat_frames(30)
        for f in frames[:29]:
            assert session.push_frame(f) is None
        result = session.push_frame(frames[29])
        assert result is not None
        prediction, risk = result
        assert prediction.window_end_ms == frames[29].timestamp_ms
        assert 0.5 <= prediction.confidence <= 1.0
        assert risk.basis == 1

    def test_stride_five_prediction_frames(self):
        session = StreamSession(small_model(), ServiceOptions(stride=5))
        hits = []
        for k, f in enumerate(squat_frames(45), start=1):
            if session.push_frame(f) is not None:
                hits.append(k)
        assert hits == [30, 35, 40, 45]

    def test_offline_online_equivalence_stride_30(self):
        model = small_model(seed=9)
        frames = squat_frames(90)
        session = StreamSession(model, ServiceOptions(stride=30))
        online = []
        for f in frames:
            result = session.push_frame(f)
            if result:
                online.append(result[0].probs)
        feats = [extract_features(f, filter_head=True) for f in frames]
        offline = [
            model_forward(model, SequenceWindow(frames=np.stack(feats[k:k + 30])))
            for k in (0, 30, 60)
        ]
        assert len(online) == 3
        for a, b in zip(online, offline):
            np.testing.assert_array_equal(a, b)

    def test_width_mismatch_raises_session_error(self):
        # model expects full 132-wide features but is tagged head-filtered
        model = small_model(input_width=132, filter_head=True)
        session = StreamSession(model)
        with pytest.raises(SessionError):
            session.push_frame(squat_frames(1)[0])

    def test_sessions_are_isolated(self):
        model = small_model(seed=2)
        a = StreamSession(model, session_id="a")
        b = StreamSession(model, session_id="b")
        outs_a, outs_b = [], []
        for fa, fb in zip(squat_frames(32), stoop_frames(32)):
            ra = a.push_frame(fa)
            rb = b.push_frame(fb)
            outs_a.append(ra and ra[0].probs)
            outs_b.append(rb and rb[0].probs)
        # interleaving does not leak: each matches its own solo replay
        solo = StreamSession(model, session_id="solo")
        for k, f in enumerate(squat_frames(32)):
            expected = solo.push_frame(f)
            if expected is None:
                assert outs_a[k] is None
            else:
                np.testing.assert_array_equal(outs_a[k], expected[0].probs)
        assert len(a.prediction_log) == 3 and len(b.prediction_log) == 3

    def test_log_is_bounded(self):
        session = StreamSession(small_model(), ServiceOptions(log_length=4))
        for f in squat_frames(60):
            session.push_frame(f)
        assert len(session.prediction_log) == 4

    def test_canonicalizing_session_matches_offline_path(self):
        from liftguard.pose import canonicalize

        model = small_model(seed=6)
        model.descriptor["canonicalize"] = True
        frames = squat_frames(30)
        session = StreamSession(model)
        result = None
        for f in frames:
            result = session.push_frame(f) or result
        feats = [extract_features(canonicalize(f), filter_head=True) for f in frames]
        expected = model_forward(model, SequenceWindow(frames=np.stack(feats)))
        np.testing.assert_array_equal(result[0].probs, expected)


class TestWireProtocol:
    @pytest.fixture
    def client(self):
        app = create_app(small_model(seed=4))
        with TestClient(app) as client:
            yield client

    def hello(self, ws):
        ws.send_text(json.dumps({"type": "hello", "proto": 1}))
        return json.loads(ws.receive_text())

    def test_hello_then_ready(self, client):
        with client.websocket_connect("/ws") as ws:
            ready = self.hello(ws)
            assert ready["type"] == "ready"
            assert ready["warmup"] == 30
            assert ready["session"]

    def test_thirty_frames_one_prediction(self, client):
        frames = squat_frames(30)
        with client.websocket_connect("/ws") as ws:
            self.hello(ws)
            for f in frames:
                ws.send_text(frame_message(f))
            msg = json.loads(ws.receive_text())
            assert msg["type"] == "prediction"
            assert msg["label"] in ("good", "bad")
            assert msg["t"] == frames[-1].timestamp_ms
            assert len(msg["probs"]) == 2
            assert msg["risk"]["level"] in ("low", "medium", "high")

    def test_bad_frame_keeps_session_open(self, client):
        frames = squat_frames(30)
        with client.websocket_connect("/ws") as ws:
            self.hello(ws)
            bad = {"type": "frame", "t": 0, "lm": [[0, 0, 0, 0]] * 32}
            ws.send_text(json.dumps(bad))
            err = json.loads(ws.receive_text())
            assert err["type"] == "error"
            assert err["code"] == "bad_frame"
            for f in frames:  # session still serves valid traffic
                ws.send_text(frame_message(f))
            assert json.loads(ws.receive_text())["type"] == "prediction"

    def test_missing_hello_is_protocol_error(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.send_text(frame_message(squat_frames(1)[0]))
            err = json.loads(ws.receive_text())
            assert err["type"] == "error"
            assert err["code"] == "proto"

    def test_wrong_proto_version_rejected(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.send_text(json.dumps({"type": "hello", "proto": 99}))
            err = json.loads(ws.receive_text())
            assert err["code"] == "proto"

    def test_oversized_message_rejected(self):
        app = create_app(small_model(), ServiceOptions(max_message_bytes=256))
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                ws.send_text(json.dumps({"type": "hello", "proto": 1, "pad": "x" * 1000}))
                err = json.loads(ws.receive_text())
                assert err["code"] == "proto"
                assert "large" in err["detail"]

    def test_concurrent_sessions_do_not_interleave(self, client):
        squat, stoop = squat_frames(30), stoop_frames(30)
        with client.websocket_connect("/ws") as ws1, \
                client.websocket_connect("/ws") as ws2:
            s1, s2 = self.hello(ws1), self.hello(ws2)
            assert s1["session"] != s2["session"]
            for fa, fb in zip(squat, stoop):
                ws1.send_text(frame_message(fa))
                ws2.send_text(frame_message(fb))
            p1 = json.loads(ws1.receive_text())
            p2 = json.loads(ws2.receive_text())
        model = small_model(seed=4)
        expected1 = model_forward(model, SequenceWindow(frames=np.stack(
            [extract_features(f) for f in squat])))
        expected2 = model_forward(model, SequenceWindow(frames=np.stack(
            [extract_features(f) for f in stoop])))
        assert p1["probs"] == [float(v) for v in expected1]
        assert p2["probs"] == [float(v) for v in expected2]

    def test_health_endpoint(self, client):
        res = client.get("/health")
        assert res.status_code == 200
        body = res.json()
        assert body["service"] == "liftguard"
        assert body["status"] == "ok"
        assert body["model"]["lstm_hidden"] == [6, 6]
        assert body["warmup"] == 30

    def test_idle_session_expires(self):
        import time

        app = create_app(small_model(), ServiceOptions(idle_timeout_s=0.2))
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                self.hello(ws)
                time.sleep(0.5)
                with pytest.raises(Exception):
                    # server closed the idle session; the next read surfaces it
                    ws.send_text(frame_message(squat_frames(1)[0]))
                    ws.receive_text()
