"""Real-time inference sessions over streaming pose frames.

A session buffers the most recent 30 feature vectors; once the buffer is
full it classifies the current window every `stride` frames and folds the
prediction into a rolling risk assessment. The wire protocol is one JSON
object per text frame over a websocket:

    client -> server: {"type":"hello","proto":1}
                      {"type":"frame","t":<ms>,"lm":[[x,y,z,v] x 33]}
    server -> client: {"type":"ready","session":"<id>","warmup":30}
                      {"type":"prediction","t":<ms>,"label":"good"|"bad",
                       "probs":[pg,pb],"confidence":c,
                       "risk":{"level":"low"|"medium"|"high","score":s}}
                      {"type":"error","code":"bad_frame"|"proto"|"internal",
                       "detail":"..."}

GET /health reports service and model metadata.
"""

from __future__ import annotations

import asyncio
import json
import uuid
from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from starlette.concurrency import run_in_threadpool

from .network import ModelParams, model_forward, predict_label_index
from .pose import (
    LANDMARK_COUNT,
    WINDOW_LENGTH,
    Label,
    PoseFrame,
    SequenceWindow,
    ValidationError,
    canonicalize,
    extract_features,
)

PROTO_VERSION = 1


class SessionError(RuntimeError):
    """Frame stream is incompatible with the session's model."""


class RiskLevel(Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


@dataclass(frozen=True)
class Prediction:
    label: Label
    probs: np.ndarray
    window_end_ms: int
    confidence: float


@dataclass(frozen=True)
class RiskAssessment:
    level: RiskLevel
    score: float
    basis: int


@dataclass(frozen=True)
class ServiceOptions:
    stride: int = 1
    log_length: int = 10
    risk_low: float = 0.3
    risk_high: float = 0.7
    idle_timeout_s: float = 60.0
    max_message_bytes: int = 64 * 1024

    def validate(self):
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.log_length < 1:
            raise ValueError("log_length must be >= 1")
        if not 0.0 <= self.risk_low <= self.risk_high <= 1.0:
            raise ValueError("risk thresholds must satisfy 0 <= low <= high <= 1")


def assess_risk(
    log, low: float = 0.3, high: float = 0.7
) -> RiskAssessment | None:
    """Confidence-weighted fraction of Bad predictions, mapped to a level.

    Returns None while the log is empty (warm-up). A hesitant Bad call
    weighs less than a confident one.
    """
    log = list(log)
    if not log:
        return None
    total = sum(p.confidence for p in log)
    bad = sum(p.confidence for p in log if p.label is Label.BAD)
    score = bad / total
    if score < low:
        level = RiskLevel.LOW
    elif score > high:
        level = RiskLevel.HIGH
    else:
        level = RiskLevel.MEDIUM
    return RiskAssessment(level=level, score=score, basis=len(log))


class StreamSession:
    """Single-client sliding-window inference state.

    Not thread-safe by itself: each session has one writer. The model is
    shared immutably across sessions.
    """

    def __init__(self, model: ModelParams, options: ServiceOptions | None = None,
                 session_id: str | None = None):
        self.options = options or ServiceOptions()
        self.options.validate()
        self.model = model
        self.session_id = session_id or uuid.uuid4().hex[:12]
        self.filter_head = bool(model.descriptor.get("filter_head", True))
        self.canonicalize = bool(model.descriptor.get("canonicalize", False))
        self.buffer: deque[np.ndarray] = deque(maxlen=WINDOW_LENGTH)
        self.prediction_log: deque[Prediction] = deque(maxlen=self.options.log_length)
        self.frames_seen = 0

    @property
    def warmed_up(self) -> bool:
        return len(self.buffer) >= WINDOW_LENGTH

    def push_frame(self, frame: PoseFrame) -> tuple[Prediction, RiskAssessment] | None:
        """Buffer one frame; emit (prediction, risk) on prediction frames.

        Nothing is emitted until 30 frames are buffered; afterwards a
        prediction fires every `stride` frames.
        """
        if self.canonicalize:
            frame = canonicalize(frame)
        features = extract_features(frame, filter_head=self.filter_head)
        if features.size != self.model.input_width:
            raise SessionError(
                f"frame features ({features.size}) do not match model input "
                f"({self.model.input_width})"
            )
        self.buffer.append(features)
        self.frames_seen += 1
        if not self.warmed_up:
            return None
        if (self.frames_seen - WINDOW_LENGTH) % self.options.stride != 0:
            return None
        window = SequenceWindow(
            frames=np.stack(self.buffer),
            source_id=self.session_id,
            start_index=self.frames_seen - WINDOW_LENGTH,
        )
        probs = model_forward(self.model, window)
        label = Label(predict_label_index(probs))
        prediction = Prediction(
            label=label,
            probs=probs,
            window_end_ms=frame.timestamp_ms,
            confidence=float(probs.max()),
        )
        self.prediction_log.append(prediction)
        risk = assess_risk(self.prediction_log, self.options.risk_low, self.options.risk_high)
        return prediction, risk


def frame_from_payload(obj: dict) -> PoseFrame:
    """Validate and convert a wire frame message into a PoseFrame."""
    t = obj.get("t")
    if not isinstance(t, int) or isinstance(t, bool):
        raise ValidationError('frame field "t" must be an integer millisecond count')
    lm = obj.get("lm")
    if not isinstance(lm, list) or len(lm) != LANDMARK_COUNT:
        raise ValidationError(f'frame field "lm" must list exactly {LANDMARK_COUNT} landmarks')
    try:
        rows = np.asarray(lm, dtype=np.float64)
    except (TypeError, ValueError):
        raise ValidationError("landmarks must be numeric quadruples") from None
    if rows.shape != (LANDMARK_COUNT, 4):
        raise ValidationError("each landmark must be a quadruple [x, y, z, v]")
    return PoseFrame(timestamp_ms=t, landmarks=rows)


def prediction_message(prediction: Prediction, risk: RiskAssessment) -> dict:
    return {
        "type": "prediction",
        "t": prediction.window_end_ms,
        "label": prediction.label.name.lower(),
        "probs": [float(p) for p in prediction.probs],
        "confidence": prediction.confidence,
        "risk": {"level": risk.level.value, "score": risk.score},
    }


def create_app(model: ModelParams, options: ServiceOptions | None = None) -> FastAPI:
    """Build the FastAPI app serving the wire protocol and /health."""
    options = options or ServiceOptions()
    options.validate()
    app = FastAPI(title="liftguard", docs_url=None, redoc_url=None)
    app.state.model = model
    app.state.options = options
    app.state.sessions: dict[str, StreamSession] = {}

    def _text(payload: dict) -> str:
        return json.dumps(payload, separators=(",", ":"))

    @app.get("/health")
    def health():
        return {
            "service": "liftguard",
            "status": "ok",
            "proto": PROTO_VERSION,
            "model": model.descriptor,
            "warmup": WINDOW_LENGTH,
            "sessions": len(app.state.sessions),
        }

    @app.websocket("/ws")
    async def stream(ws: WebSocket):
        await ws.accept()

        async def reject(code: str, detail: str, close_code: int = 1002):
            await ws.send_text(_text({"type": "error", "code": code, "detail": detail}))
            await ws.close(code=close_code, reason=code)

        async def receive() -> str | None:
            try:
                raw = await asyncio.wait_for(ws.receive_text(), timeout=options.idle_timeout_s)
            except asyncio.TimeoutError:
                await ws.close(code=1000, reason="session expired")
                return None
            if len(raw.encode("utf-8")) > options.max_message_bytes:
                await reject("proto", "message too large", close_code=1009)
                return None
            return raw

        session: StreamSession | None = None
        try:
            raw = await receive()
            if raw is None:
                return
            try:
                hello = json.loads(raw)
            except json.JSONDecodeError:
                await reject("proto", "hello must be a JSON object")
                return
            if not isinstance(hello, dict) or hello.get("type") != "hello":
                await reject("proto", 'first message must be {"type":"hello","proto":1}')
                return
            if hello.get("proto") != PROTO_VERSION:
                await reject("proto", f"unsupported protocol {hello.get('proto')!r}")
                return
            session = StreamSession(model, options)
            app.state.sessions[session.session_id] = session
            await ws.send_text(_text({
                "type": "ready", "session": session.session_id, "warmup": WINDOW_LENGTH,
            }))

            while True:
                raw = await receive()
                if raw is None:
                    return
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await reject("proto", "messages must be JSON objects")
                    return
                if not isinstance(msg, dict) or msg.get("type") != "frame":
                    await reject("proto", f"unexpected message type {msg.get('type')!r}"
                                 if isinstance(msg, dict) else "unexpected message")
                    return
                try:
                    frame = frame_from_payload(msg)
                except ValidationError as exc:
                    await ws.send_text(_text({
                        "type": "error", "code": "bad_frame", "detail": str(exc),
                    }))
                    continue
                try:
                    result = await run_in_threadpool(session.push_frame, frame)
                except SessionError as exc:
                    await ws.send_text(_text({
                        "type": "error", "code": "bad_frame", "detail": str(exc),
                    }))
                    continue
                except Exception as exc:  # pragma: no cover - defensive
                    await ws.send_text(_text({
                        "type": "error", "code": "internal", "detail": str(exc),
                    }))
                    await ws.close(code=1011, reason="internal")
                    return
                if result is not None:
                    prediction, risk = result
                    await ws.send_text(_text(prediction_message(prediction, risk)))
        except WebSocketDisconnect:
            pass
        finally:
            if session is not None:
                app.state.sessions.pop(session.session_id, None)

    return app


def serve(model_path, host: str = "127.0.0.1", port: int = 8765,
          options: ServiceOptions | None = None):
    """Load a model and run the service until interrupted."""
    import uvicorn

    from .data import load_model

    model = load_model(model_path)
    app = create_app(model, options)
    uvicorn.run(app, host=host, port=port, log_level="warning")
