import numpy as np
import pytest

from liftguard.network import ArchitectureConfig, init_model
from liftguard.pose import LabeledSequence, SequenceWindow, extract_features
from liftguard.synthetic import SyntheticConfig, generate_synthetic, oracle_label


def make_labeled_sequences(n, noise_std=0.0, seed=0, yaw=30.0, scales=(0.85, 1.15)):
    """Windowed, oracle-labeled sequences from the synthetic generator."""
    cfg = SyntheticConfig(
        n_sequences=n,
        style_mix=0.5,
        camera_yaw_range=yaw,
        subject_scale_range=scales,
        noise_std=noise_std,
        seed=seed,
    )
    data = []
    for frames, _ in generate_synthetic(cfg):
        feats = [extract_features(f, filter_head=True) for f in frames]
        data.append(
            LabeledSequence(window=SequenceWindow(frames=np.stack(feats)),
                            label=oracle_label(frames))
        )
    return data


@pytest.fixture
def toy_arch():
    return ArchitectureConfig(input_width=6, lstm_hidden=(4, 4, 4), dense_sizes=(4, 3, 2))


@pytest.fixture
def toy_model(toy_arch):
    return init_model(toy_arch, seed=42)


@pytest.fixture
def separable_data():
    return make_labeled_sequences(8, noise_std=0.0, seed=7)
