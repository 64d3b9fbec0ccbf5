"""Synthetic lifting clips from an articulated 33-landmark skeleton.

Each clip animates one lift cycle (stand, descend, grasp, ascend) over 30
frames in a sagittal plane, then applies per-clip camera yaw, uniform
subject scaling, and Gaussian landmark noise. A squat-style lift bends
the knees and keeps the trunk near vertical; a stoop-style lift keeps the
knees near straight and flexes the trunk. The rule-based oracle labels a
clip Bad when it sees deep trunk flexion without bent knees in the same
frame, which is exactly the signal separating the two styles.

Image-space conventions match the pose source: x, y in roughly [0, 1]
with y growing downward, z a relative depth in the same units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import pose
from .pose import DegeneracyError, Label, PoseFrame, ValidationError

STYLE_SQUAT = "squat"
STYLE_STOOP = "stoop"

FRAMES_PER_CLIP = 30
FRAME_INTERVAL_MS = 33  # ~30 fps

TRUNK_FLEXION_THRESHOLD_DEG = 45.0
KNEE_FLEXION_THRESHOLD_DEG = 30.0

# Segment lengths in world units (metres-ish), before subject scaling.
_SHANK = 0.44
_THIGH = 0.42
_TRUNK = 0.50
_NECK = 0.11
_UPPER_ARM = 0.28
_FOREARM = 0.26
_ANKLE_HEIGHT = 0.07
_HIP_HALF = 0.10
_SHOULDER_HALF = 0.18
_ANKLE_HALF = _HIP_HALF  # legs stay vertical columns when standing

_IMAGE_SCALE = 0.25
_GROUND_Y = 0.92

_MIN_SEGMENT = 1e-6


@dataclass(frozen=True)
class SyntheticConfig:
    n_sequences: int
    style_mix: float = 0.5          # fraction of clips generated squat-style
    camera_yaw_range: float = 30.0  # degrees, sampled uniform in +-range
    subject_scale_range: tuple[float, float] = (0.85, 1.15)
    noise_std: float = 0.0          # landmark-coordinate units
    seed: int = 0

    def validate(self):
        if self.n_sequences < 0:
            raise ValidationError("n_sequences must be >= 0")
        if not 0.0 <= self.style_mix <= 1.0:
            raise ValidationError("style_mix must be in [0, 1]")
        if self.camera_yaw_range < 0:
            raise ValidationError("camera_yaw_range must be >= 0")
        lo, hi = self.subject_scale_range
        if not (0 < lo <= hi):
            raise ValidationError("subject_scale_range must be 0 < low <= high")
        if self.noise_std < 0:
            raise ValidationError("noise_std must be >= 0")


def _lift_phase(t: int, total: int) -> float:
    """0 at stand, rising to ~1 at the grasp mid-clip, back to 0."""
    return (1.0 - math.cos(2.0 * math.pi * t / (total - 1))) / 2.0


def _skeleton_world(knee_flex_deg: float, trunk_flex_deg: float, reach_deg: float) -> np.ndarray:
    """World positions (33, 3) as (lateral, up, forward) for one posture.

    The knee flexion budget is split between shank and thigh tilt so the
    interior knee angle equals 180 - knee_flex_deg exactly.
    """
    kf = math.radians(knee_flex_deg)
    tf = math.radians(trunk_flex_deg)
    reach = math.radians(reach_deg)
    shank_tilt = 0.45 * kf
    thigh_tilt = kf - shank_tilt

    pts = np.zeros((pose.LANDMARK_COUNT, 3))

    def put(idx, lateral, up, forward):
        pts[idx] = (lateral, up, forward)

    # Legs; ankles planted, knees travel forward, hips drop back.
    ankle_y = _ANKLE_HEIGHT
    knee_up = ankle_y + _SHANK * math.cos(shank_tilt)
    knee_fwd = _SHANK * math.sin(shank_tilt)
    hip_up = knee_up + _THIGH * math.cos(thigh_tilt)
    hip_fwd = knee_fwd - _THIGH * math.sin(thigh_tilt)
    for side, lat in ((pose.LEFT_ANKLE, _ANKLE_HALF), (pose.RIGHT_ANKLE, -_ANKLE_HALF)):
        put(side, lat, ankle_y, 0.0)
    for side, lat in ((pose.LEFT_KNEE, _ANKLE_HALF), (pose.RIGHT_KNEE, -_ANKLE_HALF)):
        put(side, lat, knee_up, knee_fwd)
    for side, lat in ((pose.LEFT_HIP, _HIP_HALF), (pose.RIGHT_HIP, -_HIP_HALF)):
        put(side, lat, hip_up, hip_fwd)
    for side, lat in ((pose.LEFT_HEEL, _ANKLE_HALF), (pose.RIGHT_HEEL, -_ANKLE_HALF)):
        put(side, lat, 0.02, -0.05)
    for side, lat in ((pose.LEFT_FOOT_INDEX, _ANKLE_HALF), (pose.RIGHT_FOOT_INDEX, -_ANKLE_HALF)):
        put(side, lat, 0.01, 0.16)

    # Trunk and head follow the trunk flexion angle.
    trunk_dir = np.array([0.0, math.cos(tf), math.sin(tf)])
    face_dir = np.array([0.0, -math.sin(tf), math.cos(tf)])
    hip_mid = np.array([0.0, hip_up, hip_fwd])
    shoulder_mid = hip_mid + _TRUNK * trunk_dir
    put(pose.LEFT_SHOULDER, _SHOULDER_HALF, shoulder_mid[1], shoulder_mid[2])
    put(pose.RIGHT_SHOULDER, -_SHOULDER_HALF, shoulder_mid[1], shoulder_mid[2])
    head = shoulder_mid + _NECK * trunk_dir
    nose = head + 0.07 * face_dir
    put(pose.NOSE, 0.0, nose[1], nose[2])
    eye = head + 0.05 * face_dir + 0.02 * trunk_dir
    for idx, lat in ((pose.LEFT_EYE_INNER, 0.015), (pose.LEFT_EYE, 0.03),
                     (pose.LEFT_EYE_OUTER, 0.045), (pose.RIGHT_EYE_INNER, -0.015),
                     (pose.RIGHT_EYE, -0.03), (pose.RIGHT_EYE_OUTER, -0.045)):
        put(idx, lat, eye[1], eye[2])
    ear = head + 0.02 * trunk_dir
    put(pose.LEFT_EAR, 0.07, ear[1], ear[2])
    put(pose.RIGHT_EAR, -0.07, ear[1], ear[2])
    mouth = head + 0.06 * face_dir - 0.02 * trunk_dir
    put(pose.MOUTH_LEFT, 0.02, mouth[1], mouth[2])
    put(pose.MOUTH_RIGHT, -0.02, mouth[1], mouth[2])

    # Arms hang from the shoulders, reaching forward-down toward the load.
    arm_dir = np.array([0.0, -math.cos(reach), math.sin(reach)])
    elbow = shoulder_mid + _UPPER_ARM * arm_dir
    wrist = elbow + _FOREARM * arm_dir
    for side, lat in ((pose.LEFT_ELBOW, _SHOULDER_HALF), (pose.RIGHT_ELBOW, -_SHOULDER_HALF)):
        put(side, lat, elbow[1], elbow[2])
    for side, lat in ((pose.LEFT_WRIST, _SHOULDER_HALF), (pose.RIGHT_WRIST, -_SHOULDER_HALF)):
        put(side, lat, wrist[1], wrist[2])
    hand = wrist + 0.08 * arm_dir
    for idx, lat in ((pose.LEFT_PINKY, _SHOULDER_HALF + 0.01),
                     (pose.RIGHT_PINKY, -_SHOULDER_HALF - 0.01),
                     (pose.LEFT_INDEX, _SHOULDER_HALF - 0.01),
                     (pose.RIGHT_INDEX, -_SHOULDER_HALF + 0.01),
                     (pose.LEFT_THUMB, _SHOULDER_HALF - 0.02),
                     (pose.RIGHT_THUMB, -_SHOULDER_HALF + 0.02)):
        put(idx, lat, hand[1], hand[2])
    return pts


def _project(world: np.ndarray, yaw_deg: float, scale: float, rng, noise_std: float) -> np.ndarray:
    """World (lateral, up, forward) to image (x, y, z, visibility) rows."""
    yaw = math.radians(yaw_deg)
    lateral, up, forward = world[:, 0], world[:, 1], world[:, 2]
    x_rot = lateral * math.cos(yaw) + forward * math.sin(yaw)
    z_rot = -lateral * math.sin(yaw) + forward * math.cos(yaw)
    k = _IMAGE_SCALE * scale
    rows = np.empty((world.shape[0], 4))
    rows[:, 0] = 0.5 + k * x_rot
    rows[:, 1] = _GROUND_Y - k * up
    rows[:, 2] = k * z_rot
    rows[:, 3] = 1.0
    if noise_std > 0:
        rows[:, :3] += rng.normal(0.0, noise_std, size=(world.shape[0], 3))
    return rows


def generate_clip(style: str, rng, yaw_deg: float, scale: float,
                  noise_std: float) -> list[PoseFrame]:
    """One 30-frame lift cycle in the given style."""
    if style == STYLE_SQUAT:
        knee_max = rng.uniform(85.0, 110.0)
        trunk_max = rng.uniform(10.0, 20.0)
    elif style == STYLE_STOOP:
        knee_max = rng.uniform(4.0, 14.0)
        trunk_max = rng.uniform(68.0, 84.0)
    else:
        raise ValidationError(f"unknown style {style!r}")
    reach_max = rng.uniform(15.0, 30.0)
    frames = []
    for t in range(FRAMES_PER_CLIP):
        p = _lift_phase(t, FRAMES_PER_CLIP)
        world = _skeleton_world(p * knee_max, p * trunk_max, p * reach_max)
        rows = _project(world, yaw_deg, scale, rng, noise_std)
        frames.append(PoseFrame(timestamp_ms=t * FRAME_INTERVAL_MS, landmarks=rows))
    return frames


def generate_synthetic(cfg: SyntheticConfig) -> list[tuple[list[PoseFrame], str]]:
    """Generate cfg.n_sequences clips with their style tags.

    Deterministic per seed; each clip draws from its own generator seeded
    seed + clip_index, so clips are independent of generation order.
    """
    cfg.validate()
    n_squat = round(cfg.n_sequences * cfg.style_mix)
    clips = []
    for idx in range(cfg.n_sequences):
        style = STYLE_SQUAT if idx < n_squat else STYLE_STOOP
        rng = np.random.default_rng(cfg.seed + idx)
        yaw = rng.uniform(-cfg.camera_yaw_range, cfg.camera_yaw_range)
        scale = rng.uniform(*cfg.subject_scale_range)
        clips.append((generate_clip(style, rng, yaw, scale, cfg.noise_std), style))
    return clips


def _angle_between_deg(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu < _MIN_SEGMENT or nv < _MIN_SEGMENT:
        raise DegeneracyError("segment too short to measure an angle")
    cosang = float(np.dot(u, v)) / (nu * nv)
    return math.degrees(math.acos(max(-1.0, min(1.0, cosang))))


def trunk_flexion_deg(frame: PoseFrame) -> float:
    """Angle between the hip-to-shoulder axis and vertical, in degrees."""
    arr = frame.landmarks
    hip_mid = (arr[pose.LEFT_HIP, :3] + arr[pose.RIGHT_HIP, :3]) / 2.0
    shoulder_mid = (arr[pose.LEFT_SHOULDER, :3] + arr[pose.RIGHT_SHOULDER, :3]) / 2.0
    up = np.array([0.0, -1.0, 0.0])  # image y grows downward
    return _angle_between_deg(shoulder_mid - hip_mid, up)


def knee_flexion_deg(frame: PoseFrame) -> float:
    """Mean flexion of both knees: 180 minus the interior hip-knee-ankle angle."""
    arr = frame.landmarks
    flexions = []
    for hip, knee, ankle in (
        (pose.LEFT_HIP, pose.LEFT_KNEE, pose.LEFT_ANKLE),
        (pose.RIGHT_HIP, pose.RIGHT_KNEE, pose.RIGHT_ANKLE),
    ):
        thigh = arr[hip, :3] - arr[knee, :3]
        shank = arr[ankle, :3] - arr[knee, :3]
        flexions.append(180.0 - _angle_between_deg(thigh, shank))
    return float(np.mean(flexions))


def oracle_label(
    clip: list[PoseFrame],
    trunk_threshold_deg: float = TRUNK_FLEXION_THRESHOLD_DEG,
    knee_threshold_deg: float = KNEE_FLEXION_THRESHOLD_DEG,
) -> Label:
    """Rule-based ground truth for a clip.

    Bad iff some frame shows trunk flexion beyond the trunk threshold while
    knee flexion stays below the knee threshold: deep forward bend carried
    by the back instead of the legs.
    """
    if not clip:
        raise ValidationError("oracle needs at least one frame")
    for frame in clip:
        if (
            trunk_flexion_deg(frame) > trunk_threshold_deg
            and knee_flexion_deg(frame) < knee_threshold_deg
        ):
            return Label.BAD
    return Label.GOOD
