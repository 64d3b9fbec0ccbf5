"""Dataset directory layout and model serialization.

Dataset tree: <root>/good/*.jsonl and <root>/bad/*.jsonl, one frame per
line in the pose frame line format. Model file: a single-line canonical
JSON payload carrying the architecture descriptor and row-major weight
arrays, followed by a trailing CRC32 line over the payload bytes; floats
round-trip exactly.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .network import (
    Activation,
    DenseLayerParams,
    DimensionError,
    LstmLayerParams,
    ModelParams,
)
from .pose import (
    WINDOW_LENGTH,
    Label,
    LabeledSequence,
    PoseFrame,
    ValidationError,
    build_windows,
    canonicalize as canonicalize_frame,
    extract_features,
    format_frame_line,
    parse_frame_line,
)

MODEL_MAGIC = "LIFTLSTM"
MODEL_VERSION = 1

CLASS_FOLDERS = ((Label.GOOD, "good"), (Label.BAD, "bad"))


class DatasetError(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetManifest:
    root: str
    clips: list[tuple[str, str, int]]  # (class folder, clip id, frame count)

    @property
    def class_counts(self) -> dict[str, int]:
        counts = {"good": 0, "bad": 0}
        for cls, _, _ in self.clips:
            counts[cls] += 1
        return counts

    def to_json(self) -> str:
        return json.dumps(
            {
                "root": self.root,
                "classes": ["good", "bad"],
                "clips": [
                    {"class": cls, "clip_id": cid, "frame_count": n}
                    for cls, cid, n in self.clips
                ],
            },
            separators=(",", ":"),
        )


def read_clip(path: Path) -> list[PoseFrame]:
    """Read one clip file, one frame per line."""
    frames = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                frames.append(parse_frame_line(line))
            except ValidationError as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from None
    return frames


def write_clip(path: Path, frames: list[PoseFrame]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for frame in frames:
            fh.write(format_frame_line(frame) + "\n")


def load_dataset(
    root, filter_head: bool = True, canonicalize: bool = False
) -> tuple[list[LabeledSequence], DatasetManifest]:
    """Load every clip under <root>/good and <root>/bad into labeled windows.

    Each clip contributes its complete non-overlapping 30-frame windows.
    Ordering is deterministic: class (good then bad), clip id, window start.
    With ``canonicalize``, frames are body-centred and torso-rescaled
    before feature extraction.
    """
    root = Path(root)
    sequences: list[LabeledSequence] = []
    clips: list[tuple[str, str, int]] = []
    for label, folder_name in CLASS_FOLDERS:
        folder = root / folder_name
        if not folder.is_dir():
            raise DatasetError(f"missing class folder: {folder}")
        files = sorted(folder.glob("*.jsonl"), key=lambda p: p.name)
        if not files:
            raise DatasetError(f"class folder holds no clips: {folder_name}")
        for path in files:
            frames = read_clip(path)
            if len(frames) < WINDOW_LENGTH:
                raise DatasetError(
                    f"{path}: clip has {len(frames)} frames, needs at least {WINDOW_LENGTH}"
                )
            clip_id = path.stem
            clips.append((folder_name, clip_id, len(frames)))
            if canonicalize:
                frames = [canonicalize_frame(f) for f in frames]
            features = [extract_features(f, filter_head=filter_head) for f in frames]
            for window in build_windows(
                features, WINDOW_LENGTH, WINDOW_LENGTH, source_id=f"{folder_name}/{clip_id}"
            ):
                sequences.append(LabeledSequence(window=window, label=label))
    return sequences, DatasetManifest(root=str(root), clips=clips)


def _model_payload(m: ModelParams) -> dict:
    return {
        "magic": MODEL_MAGIC,
        "version": MODEL_VERSION,
        "descriptor": m.descriptor,
        "input_width": m.input_width,
        "lstm_layers": [
            {
                "w_i": layer.w_i.tolist(), "w_f": layer.w_f.tolist(),
                "w_o": layer.w_o.tolist(), "w_c": layer.w_c.tolist(),
                "b_i": layer.b_i.tolist(), "b_f": layer.b_f.tolist(),
                "b_o": layer.b_o.tolist(), "b_c": layer.b_c.tolist(),
            }
            for layer in m.lstm_layers
        ],
        "dense_layers": [
            {"w": layer.w.tolist(), "b": layer.b.tolist(), "activation": layer.activation.value}
            for layer in m.dense_layers
        ],
    }


def save_model(m: ModelParams, path) -> None:
    """Write the model file: canonical JSON line plus trailing CRC32 line."""
    m.validate()
    payload = json.dumps(_model_payload(m), sort_keys=True, separators=(",", ":"))
    crc = zlib.crc32(payload.encode("utf-8")) & 0xFFFFFFFF
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(payload + "\n")
        fh.write(f"crc32={crc:08x}\n")


def load_model(path) -> ModelParams:
    """Load and verify a model file; round-trips save_model bit-exactly."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file: {exc}") from None
    lines = text.splitlines()
    if len(lines) < 2:
        raise ModelFormatError("model file must hold a payload line and a crc32 line")
    payload_line, crc_line = lines[0], lines[1]
    if not crc_line.startswith("crc32="):
        raise ModelFormatError("missing trailing crc32 line")
    try:
        expected_crc = int(crc_line[len("crc32="):], 16)
    except ValueError:
        raise ModelFormatError("malformed crc32 line") from None
    actual_crc = zlib.crc32(payload_line.encode("utf-8")) & 0xFFFFFFFF
    if actual_crc != expected_crc:
        raise ModelFormatError(
            f"checksum mismatch: file says {expected_crc:08x}, payload is {actual_crc:08x}"
        )
    try:
        payload = json.loads(payload_line)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"payload is not valid JSON: {exc}") from None
    if payload.get("magic") != MODEL_MAGIC:
        raise ModelFormatError(f"bad magic string {payload.get('magic')!r}")
    if payload.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"unsupported format version {payload.get('version')!r}")
    try:
        lstm_layers = [
            LstmLayerParams(
                w_i=np.asarray(spec["w_i"], dtype=np.float64),
                w_f=np.asarray(spec["w_f"], dtype=np.float64),
                w_o=np.asarray(spec["w_o"], dtype=np.float64),
                w_c=np.asarray(spec["w_c"], dtype=np.float64),
                b_i=np.asarray(spec["b_i"], dtype=np.float64),
                b_f=np.asarray(spec["b_f"], dtype=np.float64),
                b_o=np.asarray(spec["b_o"], dtype=np.float64),
                b_c=np.asarray(spec["b_c"], dtype=np.float64),
            )
            for spec in payload["lstm_layers"]
        ]
        dense_layers = [
            DenseLayerParams(
                w=np.asarray(spec["w"], dtype=np.float64),
                b=np.asarray(spec["b"], dtype=np.float64),
                activation=Activation(spec["activation"]),
            )
            for spec in payload["dense_layers"]
        ]
        model = ModelParams(
            lstm_layers=lstm_layers,
            dense_layers=dense_layers,
            input_width=int(payload["input_width"]),
            descriptor=dict(payload["descriptor"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model payload: {exc}") from None
    try:
        model.validate()
        _check_descriptor(model)
    except DimensionError as exc:
        raise ModelFormatError(f"shape inconsistency: {exc}") from None
    return model


def _check_descriptor(m: ModelParams) -> None:
    d = m.descriptor
    hidden = [layer.hidden_size for layer in m.lstm_layers]
    dense = [layer.out_size for layer in m.dense_layers]
    if "input_width" in d and d["input_width"] != m.input_width:
        raise DimensionError("descriptor input_width disagrees with weights")
    if "lstm_hidden" in d and list(d["lstm_hidden"]) != hidden:
        raise DimensionError("descriptor lstm_hidden disagrees with weights")
    if "dense_sizes" in d and list(d["dense_sizes"]) != dense:
        raise DimensionError("descriptor dense_sizes disagrees with weights")
