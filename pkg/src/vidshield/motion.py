"""Block partitioning, MAD full-search motion estimation and compensation.

Frames are split into non-overlapping blocks; for each block the reference
frame is searched exhaustively within +/- search_range pixels for the
displacement minimizing mean absolute difference (MAD). Displacements are
(dy, dx) = (rows down, columns right) into the reference. Search runs on
the luma plane; compensation copies all channels at the luma vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import BlockError, DimensionMismatchError
from .video import Frame


@dataclass(frozen=True)
class Block:
    """A rectangular patch addressed by its top-left corner (x, y)."""

    x: int  # column of the top-left corner
    y: int  # row of the top-left corner
    width: int
    height: int


@dataclass(frozen=True)
class MotionVector:
    dy: int
    dx: int


@dataclass(frozen=True)
class MotionField:
    """Per-block motion vectors for one frame, in partition order."""

    frame_width: int
    frame_height: int
    block_width: int
    block_height: int
    vectors: tuple[MotionVector, ...]

    def __post_init__(self):
        expected = len(
            partition_blocks(
                self.frame_width, self.frame_height,
                self.block_width, self.block_height,
            )
        )
        if len(self.vectors) != expected:
            raise BlockError(
                f"motion field has {len(self.vectors)} vectors, "
                f"partition has {expected} blocks"
            )


def partition_blocks(
    width: int, height: int, block_width: int, block_height: int
) -> list[Block]:
    """Tile the frame left-to-right, top-to-bottom with no overlap.

    Right/bottom remainder blocks are truncated to fit.
    """
    if width < 1 or height < 1 or block_width < 1 or block_height < 1:
        raise BlockError(
            f"dimensions must be positive, got frame {width}x{height}, "
            f"block {block_width}x{block_height}"
        )
    blocks = []
    for y in range(0, height, block_height):
        for x in range(0, width, block_width):
            blocks.append(
                Block(
                    x=x,
                    y=y,
                    width=min(block_width, width - x),
                    height=min(block_height, height - y),
                )
            )
    return blocks


def _check_plane(plane: np.ndarray) -> np.ndarray:
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise BlockError(f"luma plane must be 2-D, got shape {plane.shape}")
    return plane


def block_mad(
    current: np.ndarray,
    reference: np.ndarray,
    block: Block,
    dy: int,
    dx: int,
) -> float:
    """Mean absolute difference between a block and its displaced match."""
    current = _check_plane(current)
    reference = _check_plane(reference)
    if current.shape != reference.shape:
        raise DimensionMismatchError(
            f"plane shapes differ: {current.shape} vs {reference.shape}"
        )
    h, w = reference.shape
    ry, rx = block.y + dy, block.x + dx
    if block.y < 0 or block.x < 0 or block.y + block.height > h or block.x + block.width > w:
        raise BlockError(f"block {block} outside {w}x{h} frame")
    if ry < 0 or rx < 0 or ry + block.height > h or rx + block.width > w:
        raise BlockError(
            f"displacement ({dy}, {dx}) puts block {block} outside the reference"
        )
    cur = current[block.y : block.y + block.height, block.x : block.x + block.width]
    ref = reference[ry : ry + block.height, rx : rx + block.width]
    return float(np.mean(np.abs(cur - ref)))


def full_search(
    current: np.ndarray,
    reference: np.ndarray,
    block: Block,
    search_range: int,
) -> tuple[MotionVector, float]:
    """Global argmin of MAD over all in-bounds displacements within range.

    Ties are broken by smallest dy^2 + dx^2, then lexicographic (dy, dx).
    Out-of-bounds candidates are skipped, not clamped.
    """
    if search_range < 0:
        raise BlockError(f"search range must be >= 0, got {search_range}")
    current = _check_plane(current)
    reference = _check_plane(reference)
    if current.shape != reference.shape:
        raise DimensionMismatchError(
            f"plane shapes differ: {current.shape} vs {reference.shape}"
        )
    h, w = reference.shape
    ilo = max(-search_range, -block.y)
    ihi = min(search_range, h - block.y - block.height)
    jlo = max(-search_range, -block.x)
    jhi = min(search_range, w - block.x - block.width)
    if ilo > ihi or jlo > jhi:
        raise BlockError(f"no in-bounds displacement for block {block}")

    cur = current[block.y : block.y + block.height, block.x : block.x + block.width]
    region = reference[
        block.y + ilo : block.y + block.height + ihi,
        block.x + jlo : block.x + block.width + jhi,
    ]
    windows = sliding_window_view(region, (block.height, block.width))
    mads = np.abs(windows - cur).mean(axis=(2, 3))

    dys = np.arange(ilo, ihi + 1)[:, None] + np.zeros_like(mads, dtype=np.int64)
    dxs = np.arange(jlo, jhi + 1)[None, :] + np.zeros_like(mads, dtype=np.int64)
    flat_mads = mads.ravel()
    flat_dys = dys.ravel()
    flat_dxs = dxs.ravel()
    order = np.lexsort(
        (flat_dxs, flat_dys, flat_dys**2 + flat_dxs**2, flat_mads)
    )
    best = order[0]
    return MotionVector(int(flat_dys[best]), int(flat_dxs[best])), float(
        flat_mads[best]
    )


def estimate_motion_field(
    current: Frame,
    reference: Frame,
    block_size: int = 16,
    search_range: int = 7,
) -> MotionField:
    """One full-search vector per partition block, on the luma planes."""
    if not current.same_shape(reference):
        raise DimensionMismatchError(
            f"frame shapes differ: {current.pixels.shape} vs "
            f"{reference.pixels.shape}"
        )
    cur_luma = current.luma()
    ref_luma = reference.luma()
    vectors = []
    for block in partition_blocks(
        current.width, current.height, block_size, block_size
    ):
        vec, _ = full_search(cur_luma, ref_luma, block, search_range)
        vectors.append(vec)
    return MotionField(
        frame_width=current.width,
        frame_height=current.height,
        block_width=block_size,
        block_height=block_size,
        vectors=tuple(vectors),
    )


def motion_compensate(reference: Frame, field: MotionField) -> Frame:
    """Predict a frame by copying reference blocks at their motion vectors."""
    if (reference.width, reference.height) != (
        field.frame_width,
        field.frame_height,
    ):
        raise BlockError(
            f"field geometry {field.frame_width}x{field.frame_height} does "
            f"not match reference {reference.width}x{reference.height}"
        )
    blocks = partition_blocks(
        field.frame_width, field.frame_height,
        field.block_width, field.block_height,
    )
    ref = reference.pixels
    out = np.empty_like(ref)
    for block, vec in zip(blocks, field.vectors):
        ry, rx = block.y + vec.dy, block.x + vec.dx
        if (
            ry < 0
            or rx < 0
            or ry + block.height > reference.height
            or rx + block.width > reference.width
        ):
            raise BlockError(
                f"vector {vec} displaces block {block} outside the reference"
            )
        out[block.y : block.y + block.height, block.x : block.x + block.width] = ref[
            ry : ry + block.height, rx : rx + block.width
        ]
    return Frame(out)
