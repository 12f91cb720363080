import numpy as np
import pytest

from vidshield.video import Frame, VideoClip


def random_frame(rng, width=8, height=8, channels=1):
    return Frame(
        rng.integers(0, 256, size=(height, width, channels), dtype=np.uint8)
    )


def random_clip(rng, frame_count=3, width=8, height=8, channels=1):
    return VideoClip(
        tuple(random_frame(rng, width, height, channels) for _ in range(frame_count))
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
