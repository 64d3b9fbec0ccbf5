"""Pose-frame domain types, feature extraction, and sequence windowing.

A frame is 33 body landmarks, each carrying (x, y, z, visibility); the
feature vector for a frame is the landmark-major flattening of those
quadruples, either full (132 values) or with the 11 head landmarks
dropped (88 values).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

# Body landmark indices (full-body topology, 33 points).
NOSE = 0
LEFT_EYE_INNER = 1
LEFT_EYE = 2
LEFT_EYE_OUTER = 3
RIGHT_EYE_INNER = 4
RIGHT_EYE = 5
RIGHT_EYE_OUTER = 6
LEFT_EAR = 7
RIGHT_EAR = 8
MOUTH_LEFT = 9
MOUTH_RIGHT = 10
LEFT_SHOULDER = 11
RIGHT_SHOULDER = 12
LEFT_ELBOW = 13
RIGHT_ELBOW = 14
LEFT_WRIST = 15
RIGHT_WRIST = 16
LEFT_PINKY = 17
RIGHT_PINKY = 18
LEFT_INDEX = 19
RIGHT_INDEX = 20
LEFT_THUMB = 21
RIGHT_THUMB = 22
LEFT_HIP = 23
RIGHT_HIP = 24
LEFT_KNEE = 25
RIGHT_KNEE = 26
LEFT_ANKLE = 27
RIGHT_ANKLE = 28
LEFT_HEEL = 29
RIGHT_HEEL = 30
LEFT_FOOT_INDEX = 31
RIGHT_FOOT_INDEX = 32

LANDMARK_COUNT = 33
# Indices 0-10 sit on the head and are dropped by the model-input filter.
HEAD_LANDMARK_COUNT = 11
VALUES_PER_LANDMARK = 4
FULL_FEATURE_WIDTH = LANDMARK_COUNT * VALUES_PER_LANDMARK            # 132
FILTERED_FEATURE_WIDTH = (LANDMARK_COUNT - HEAD_LANDMARK_COUNT) * VALUES_PER_LANDMARK  # 88

WINDOW_LENGTH = 30

_MIN_TORSO_LENGTH = 1e-6


class ValidationError(ValueError):
    """A frame or feature vector violates the domain invariants."""


class DegeneracyError(ValueError):
    """Skeleton geometry too degenerate for the requested computation."""


class Label(Enum):
    GOOD = 0
    BAD = 1

    @classmethod
    def from_name(cls, name: str) -> "Label":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValidationError(f"unknown class label {name!r}") from None


@dataclass(frozen=True)
class Landmark:
    x: float
    y: float
    z: float
    visibility: float


@dataclass(frozen=True)
class PoseFrame:
    """One timestamped frame of 33 landmarks.

    ``landmarks`` is a read-only float64 array of shape (33, 4) with
    columns (x, y, z, visibility).
    """

    timestamp_ms: int
    landmarks: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.landmarks, dtype=np.float64)
        if arr.shape != (LANDMARK_COUNT, VALUES_PER_LANDMARK):
            raise ValidationError(
                f"expected {LANDMARK_COUNT} landmarks of 4 values, got array of shape {arr.shape}"
            )
        bad = np.where(~np.isfinite(arr).all(axis=1))[0]
        if bad.size:
            raise ValidationError(f"non-finite value at landmark index {int(bad[0])}")
        vis = arr[:, 3]
        bad = np.where((vis < 0.0) | (vis > 1.0))[0]
        if bad.size:
            raise ValidationError(f"visibility out of [0, 1] at landmark index {int(bad[0])}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "landmarks", arr)

    @classmethod
    def from_landmarks(cls, timestamp_ms: int, landmarks) -> "PoseFrame":
        rows = [(lm.x, lm.y, lm.z, lm.visibility) if isinstance(lm, Landmark) else lm
                for lm in landmarks]
        if len(rows) != LANDMARK_COUNT:
            raise ValidationError(f"expected {LANDMARK_COUNT} landmarks, got {len(rows)}")
        return cls(timestamp_ms=int(timestamp_ms), landmarks=np.asarray(rows, dtype=np.float64))

    def landmark(self, index: int) -> Landmark:
        x, y, z, v = self.landmarks[index]
        return Landmark(float(x), float(y), float(z), float(v))


@dataclass(frozen=True)
class SequenceWindow:
    """Window of per-frame feature vectors, shape (length, width).

    Production windows are always WINDOW_LENGTH (30) frames; every
    producer in this package (dataset loading, the streaming service,
    the estimator) builds them that way.
    """

    frames: np.ndarray
    source_id: str = ""
    start_index: int = 0

    def __post_init__(self):
        arr = np.asarray(self.frames, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValidationError(f"window must be a non-empty 2-D sequence, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValidationError("window contains non-finite values")
        if self.start_index < 0:
            raise ValidationError("start_index must be >= 0")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)

    @property
    def length(self) -> int:
        return self.frames.shape[0]

    @property
    def width(self) -> int:
        return self.frames.shape[1]


@dataclass(frozen=True)
class LabeledSequence:
    window: SequenceWindow
    label: Label


def extract_features(frame: PoseFrame, filter_head: bool = True) -> np.ndarray:
    """Flatten a frame into its feature vector.

    Landmark-major order, (x, y, z, visibility) within each landmark.
    With ``filter_head`` the 11 head landmarks (indices 0-10) are dropped,
    leaving landmarks 11-32 and a width of 88; otherwise all 33 landmarks
    yield width 132.
    """
    if not isinstance(frame, PoseFrame):
        raise ValidationError("extract_features expects a PoseFrame")
    arr = frame.landmarks
    if filter_head:
        arr = arr[HEAD_LANDMARK_COUNT:]
    return arr.reshape(-1).copy()


def reconstruct_frame(features: np.ndarray, timestamp_ms: int = 0) -> PoseFrame:
    """Rebuild a PoseFrame from a feature vector (inverse of extract_features).

    An 88-wide vector fills the missing head landmarks with zeros.
    """
    vec = np.asarray(features, dtype=np.float64).reshape(-1)
    if vec.size == FULL_FEATURE_WIDTH:
        rows = vec.reshape(LANDMARK_COUNT, VALUES_PER_LANDMARK)
    elif vec.size == FILTERED_FEATURE_WIDTH:
        rows = np.zeros((LANDMARK_COUNT, VALUES_PER_LANDMARK))
        rows[HEAD_LANDMARK_COUNT:] = vec.reshape(
            LANDMARK_COUNT - HEAD_LANDMARK_COUNT, VALUES_PER_LANDMARK
        )
    else:
        raise ValidationError(
            f"feature vector must have {FULL_FEATURE_WIDTH} or {FILTERED_FEATURE_WIDTH} "
            f"values, got {vec.size}"
        )
    return PoseFrame(timestamp_ms=timestamp_ms, landmarks=rows)


def build_windows(
    features,
    window_len: int = WINDOW_LENGTH,
    stride: int = WINDOW_LENGTH,
    source_id: str = "",
) -> list[SequenceWindow]:
    """Cut a feature sequence into complete fixed-length windows.

    Windows start at 0, stride, 2*stride, ...; a trailing partial window is
    never emitted, so the count is floor((N - window_len)/stride) + 1 when
    N >= window_len and 0 otherwise.
    """
    if window_len < 1:
        raise ValidationError("window_len must be >= 1")
    if stride < 1:
        raise ValidationError("stride must be >= 1")
    rows = [np.asarray(f, dtype=np.float64).reshape(-1) for f in features]
    if rows:
        width = rows[0].size
        for k, r in enumerate(rows):
            if r.size != width:
                raise ValidationError(f"feature length mismatch at frame {k}")
        stacked = np.stack(rows)
    else:
        stacked = np.zeros((0, 0))
    windows = []
    start = 0
    while start + window_len <= len(rows):
        windows.append(
            SequenceWindow(
                frames=stacked[start:start + window_len],
                source_id=source_id,
                start_index=start,
            )
        )
        start += stride
    return windows


def _midpoint(arr: np.ndarray, a: int, b: int) -> np.ndarray:
    return (arr[a, :3] + arr[b, :3]) / 2.0


def canonicalize(frame: PoseFrame) -> PoseFrame:
    """Express a frame in a body-centred, torso-scaled coordinate system.

    Translates so the hip midpoint is the origin and divides x, y, z by
    the hip-to-shoulder midpoint distance; visibility is untouched.
    Idempotent, and invariant to rigid translation and uniform scaling
    of the input.
    """
    arr = frame.landmarks
    hip_mid = _midpoint(arr, LEFT_HIP, RIGHT_HIP)
    shoulder_mid = _midpoint(arr, LEFT_SHOULDER, RIGHT_SHOULDER)
    torso = float(np.linalg.norm(shoulder_mid - hip_mid))
    if torso < _MIN_TORSO_LENGTH:
        raise DegeneracyError(f"hip-shoulder distance {torso:g} below {_MIN_TORSO_LENGTH:g}")
    out = arr.copy()
    out[:, :3] = (arr[:, :3] - hip_mid) / torso
    return PoseFrame(timestamp_ms=frame.timestamp_ms, landmarks=out)


def parse_frame_line(line: str) -> PoseFrame:
    """Parse one frame from the on-disk line format: {"t": ms, "lm": [[x,y,z,v] x 33]}."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON frame line: {exc}") from None
    if not isinstance(obj, dict) or "t" not in obj or "lm" not in obj:
        raise ValidationError('frame line must be an object with "t" and "lm"')
    t = obj["t"]
    if not isinstance(t, int) or isinstance(t, bool):
        raise ValidationError('frame field "t" must be an integer millisecond count')
    lm = obj["lm"]
    if not isinstance(lm, list) or len(lm) != LANDMARK_COUNT:
        raise ValidationError(f'frame field "lm" must list exactly {LANDMARK_COUNT} landmarks')
    for k, quad in enumerate(lm):
        if not isinstance(quad, list) or len(quad) != VALUES_PER_LANDMARK:
            raise ValidationError(f"landmark {k} must be a quadruple [x, y, z, v]")
        for v in quad:
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ValidationError(f"landmark {k} holds a non-numeric or non-finite value")
    return PoseFrame(timestamp_ms=t, landmarks=np.asarray(lm, dtype=np.float64))


def format_frame_line(frame: PoseFrame) -> str:
    """Serialize a frame to the one-line JSON format (numbers round-trip exactly)."""
    lm = [[float(v) for v in row] for row in frame.landmarks]
    return json.dumps({"t": frame.timestamp_ms, "lm": lm}, separators=(",", ":"))
