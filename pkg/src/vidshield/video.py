"""Frame/clip data model, PNG sequence I/O and pixel-difference metrics.

Frames are 8-bit, stored as (height, width, channels) uint8 arrays with
1 (grayscale) or 3 (RGB) channels. Clips are ordered, dimension-consistent
frame sequences saved as ``frame_%06d.png`` files inside a directory.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ClipIOError, DimensionMismatchError, VidShieldError

FRAME_FILE_RE = re.compile(r"^frame_(\d{6})\.png$")
FRAME_FILE_FMT = "frame_{:06d}.png"

# ITU-R BT.601 luma weights, applied to RGB before motion search.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class Frame:
    """A single 8-bit image plane stack, immutable after construction."""

    pixels: np.ndarray  # (h, w, c) uint8, c in {1, 3}

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = px[:, :, np.newaxis]
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise VidShieldError(
                f"frame must be (h, w, 1) or (h, w, 3), got shape {px.shape}"
            )
        if px.dtype != np.uint8:
            raise VidShieldError(f"frame samples must be uint8, got {px.dtype}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise VidShieldError(f"frame has empty dimensions: {px.shape}")
        px = np.ascontiguousarray(px)
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def same_shape(self, other: "Frame") -> bool:
        return self.pixels.shape == other.pixels.shape

    def luma(self) -> np.ndarray:
        """Luma plane as float64 (h, w); rounded BT.601 mix for RGB."""
        if self.channels == 1:
            return self.pixels[:, :, 0].astype(np.float64)
        mix = sum(w * self.pixels[:, :, i] for i, w in enumerate(LUMA_WEIGHTS))
        return np.round(mix)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and np.array_equal(
            self.pixels, other.pixels
        )

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))


@dataclass(frozen=True)
class VideoClip:
    """An ordered sequence of dimension-identical frames."""

    frames: tuple[Frame, ...]

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise VidShieldError("a clip needs at least one frame")
        first = frames[0]
        for idx, frame in enumerate(frames):
            if not frame.same_shape(first):
                raise DimensionMismatchError(
                    f"frame {idx} has shape {frame.pixels.shape}, "
                    f"expected {first.pixels.shape}"
                )
        object.__setattr__(self, "frames", frames)

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def channels(self) -> int:
        return self.frames[0].channels

    def __getitem__(self, idx: int) -> Frame:
        return self.frames[idx]

    def __iter__(self):
        return iter(self.frames)

    def __len__(self) -> int:
        return len(self.frames)

    def replace_frame(self, idx: int, frame: Frame) -> "VideoClip":
        frames = list(self.frames)
        frames[idx] = frame
        return VideoClip(tuple(frames))


@dataclass(frozen=True)
class FrameMask:
    """Per-frame boolean flags; True marks an exception/adversarial frame."""

    flags: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "flags", tuple(bool(f) for f in self.flags))

    def __len__(self) -> int:
        return len(self.flags)

    def __getitem__(self, idx: int) -> bool:
        return self.flags[idx]

    @property
    def any_clean(self) -> bool:
        return not all(self.flags)

    @property
    def masked_indices(self) -> list[int]:
        return [i for i, f in enumerate(self.flags) if f]


def load_clip(path: str | Path) -> VideoClip:
    """Load a clip from a directory of ``frame_%06d.png`` files.

    Frames are ordered by their numeric index. Pixel data is bit-exact
    with the source files.
    """
    directory = Path(path)
    if not directory.is_dir():
        raise ClipIOError(f"clip directory does not exist: {directory}")
    numbered = []
    for entry in directory.iterdir():
        m = FRAME_FILE_RE.match(entry.name)
        if m:
            numbered.append((int(m.group(1)), entry))
    if not numbered:
        raise ClipIOError(f"no frame_NNNNNN.png files in {directory}")
    numbered.sort()

    frames = []
    shape = None
    for _, entry in numbered:
        try:
            with Image.open(entry) as img:
                if img.mode not in ("L", "RGB"):
                    img = img.convert("RGB" if img.mode in ("RGBA", "P") else "L")
                arr = np.asarray(img, dtype=np.uint8)
        except (OSError, SyntaxError) as exc:
            raise ClipIOError(f"cannot decode {entry}: {exc}") from exc
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise ClipIOError(
                f"inconsistent dimensions in {entry}: {arr.shape} vs {shape}"
            )
        frames.append(Frame(arr))
    return VideoClip(tuple(frames))


def save_clip(clip: VideoClip, path: str | Path) -> None:
    """Write a clip as ``frame_%06d.png`` (0-based) into a directory.

    Round trip through load_clip is bit-exact.
    """
    directory = Path(path)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ClipIOError(f"cannot create {directory}: {exc}") from exc
    for idx, frame in enumerate(clip.frames):
        arr = frame.pixels
        if frame.channels == 1:
            img = Image.fromarray(arr[:, :, 0], mode="L")
        else:
            img = Image.fromarray(arr, mode="RGB")
        target = directory / FRAME_FILE_FMT.format(idx)
        try:
            img.save(target, format="PNG")
        except OSError as exc:
            raise ClipIOError(f"cannot write {target}: {exc}") from exc


def frame_mse(a: Frame, b: Frame) -> float:
    """Mean squared error over all samples; 0 iff the frames are identical."""
    if not a.same_shape(b):
        raise DimensionMismatchError(
            f"frame shapes differ: {a.pixels.shape} vs {b.pixels.shape}"
        )
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    return float(np.mean(diff * diff))


def frame_psnr(a: Frame, b: Frame) -> float:
    """PSNR in dB against a 255 peak; math.inf when the frames are identical."""
    mse = frame_mse(a, b)
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def clip_mse(a: VideoClip, b: VideoClip) -> float:
    """Mean of per-frame MSE over two equally long clips."""
    if a.frame_count != b.frame_count:
        raise DimensionMismatchError(
            f"clip lengths differ: {a.frame_count} vs {b.frame_count}"
        )
    return float(np.mean([frame_mse(x, y) for x, y in zip(a, b)]))
