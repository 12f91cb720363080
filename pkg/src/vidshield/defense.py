"""Purification strategies: temporal reconstruction and spatial denoising.

Temporal defense rebuilds masked (adversarial) frames from their nearest
clean neighbor via motion compensation, optionally adding a quantized DCT
residual. Spatial defense runs an independent per-frame denoiser; the
built-in baseline is a classical block-DCT compressive denoiser, and
arbitrary external denoiser programs can be plugged in over a PNG
stdin/stdout contract.
"""

from __future__ import annotations

import io
import os
import shlex
import subprocess
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from PIL import Image

from .codec import decode_residual, encode_residual, serialize_plan
from .errors import (
    AllFramesMaskedError,
    DefenseError,
    DenoiserContractError,
)
from .motion import MotionField, estimate_motion_field, motion_compensate
from .video import Frame, FrameMask, VideoClip

DENOISER_TIMEOUT_ENV = "VIDSHIELD_DENOISER_TIMEOUT_MS"
DEFAULT_DENOISER_TIMEOUT_MS = 30000

RESIDUAL_MODES = ("quantized", "zero")

# A spatial denoiser is any dimension-preserving Frame -> Frame callable.
SpatialDenoiser = Callable[[Frame], Frame]


@dataclass(frozen=True)
class TemporalDefenseParams:
    motion_block: int = 16
    search_range: int = 7
    transform_block: int = 8
    quant_step: float = 16.0
    residual_mode: str = "quantized"

    def __post_init__(self):
        if min(self.motion_block, self.transform_block) < 1 or self.quant_step <= 0:
            raise DefenseError("temporal defense parameters must be positive")
        if self.search_range < 0:
            raise DefenseError("search range must be >= 0")
        if self.residual_mode not in RESIDUAL_MODES:
            raise DefenseError(
                f"residual_mode must be one of {RESIDUAL_MODES}, "
                f"got {self.residual_mode!r}"
            )


@dataclass(frozen=True)
class DefenseRecord:
    """Everything needed to re-derive one reconstructed frame."""

    frame_index: int
    reference_index: int
    field: MotionField
    residual_plans: Optional[tuple[bytes, ...]] = None  # one blob per channel


def _nearest_clean_reference(mask: FrameMask, k: int) -> int:
    """Nearest unmasked index below k, falling back to nearest above."""
    for idx in range(k - 1, -1, -1):
        if not mask[idx]:
            return idx
    for idx in range(k + 1, len(mask)):
        if not mask[idx]:
            return idx
    raise AllFramesMaskedError("every frame is masked; no clean reference")


def temporal_defend(
    clip: VideoClip, mask: FrameMask, params: TemporalDefenseParams
) -> tuple[VideoClip, list[DefenseRecord]]:
    """Reconstruct masked frames from clean neighbors.

    Unmasked frames pass through bit-identical. Each masked frame is
    replaced by the motion-compensated prediction from its nearest clean
    frame, plus (in quantized mode) the encode/decode round trip of the
    residual between the masked frame and that prediction. Runs of masked
    frames all reference the same clean frame, never each other.
    """
    if len(mask) != clip.frame_count:
        raise DefenseError(
            f"mask length {len(mask)} does not match clip length "
            f"{clip.frame_count}"
        )
    if not mask.any_clean:
        raise AllFramesMaskedError(
            "all frames are masked; fall back to spatial defense"
        )

    frames = list(clip.frames)
    records = []
    for k in mask.masked_indices:
        ref_idx = _nearest_clean_reference(mask, k)
        reference = clip[ref_idx]
        fld = estimate_motion_field(
            clip[k], reference, params.motion_block, params.search_range
        )
        prediction = motion_compensate(reference, fld)
        if params.residual_mode == "zero":
            frames[k] = prediction
            records.append(
                DefenseRecord(frame_index=k, reference_index=ref_idx, field=fld)
            )
            continue

        pred = prediction.pixels.astype(np.float64)
        attacked = clip[k].pixels.astype(np.float64)
        rebuilt = np.empty_like(pred)
        plans = []
        for c in range(clip.channels):
            residual = attacked[:, :, c] - pred[:, :, c]
            plan = encode_residual(
                residual, params.transform_block, params.quant_step
            )
            plans.append(serialize_plan(plan))
            rebuilt[:, :, c] = pred[:, :, c] + decode_residual(plan)
        frames[k] = Frame(
            np.clip(np.round(rebuilt), 0, 255).astype(np.uint8)
        )
        records.append(
            DefenseRecord(
                frame_index=k,
                reference_index=ref_idx,
                field=fld,
                residual_plans=tuple(plans),
            )
        )
    return VideoClip(tuple(frames)), records


def spatial_defend(clip: VideoClip, denoiser: SpatialDenoiser) -> VideoClip:
    """Run the denoiser independently on every frame."""
    out = []
    for idx, frame in enumerate(clip.frames):
        cleaned = denoiser(frame)
        if not isinstance(cleaned, Frame) or not cleaned.same_shape(frame):
            raise DenoiserContractError(
                f"denoiser changed dimensions on frame {idx}"
            )
        out.append(cleaned)
    return VideoClip(tuple(out))


def baseline_compressive_denoiser(
    frame: Frame, block_size: int = 8, quant_step: float = 16.0
) -> Frame:
    """Classical compressive denoiser: per-channel block DCT round trip.

    Quantizing the transform coefficients discards low-energy structure,
    which is where additive adversarial perturbations live.
    """
    pixels = frame.pixels.astype(np.float64)
    out = np.empty_like(pixels)
    for c in range(frame.channels):
        plan = encode_residual(pixels[:, :, c], block_size, quant_step)
        out[:, :, c] = decode_residual(plan)
    return Frame(np.clip(np.round(out), 0, 255).astype(np.uint8))


def make_baseline_denoiser(
    block_size: int = 8, quant_step: float = 16.0
) -> SpatialDenoiser:
    def denoise(frame: Frame) -> Frame:
        return baseline_compressive_denoiser(frame, block_size, quant_step)

    return denoise


@dataclass
class ExternalDenoiser:
    """Adapter for an external denoiser process.

    Per call, the frame is written to the program's stdin as one PNG byte
    stream; the program must reply with exactly one PNG of identical
    dimensions on stdout. Nonzero exit, undecodable output, dimension
    mismatch or timeout all raise DenoiserContractError.
    """

    command: str
    timeout_ms: Optional[int] = None
    _argv: list[str] = field(init=False)

    def __post_init__(self):
        self._argv = shlex.split(self.command)
        if not self._argv:
            raise DefenseError("external denoiser command is empty")

    @property
    def timeout_seconds(self) -> float:
        ms = self.timeout_ms
        if ms is None:
            ms = int(os.environ.get(DENOISER_TIMEOUT_ENV, DEFAULT_DENOISER_TIMEOUT_MS))
        return ms / 1000.0

    def __call__(self, frame: Frame) -> Frame:
        buf = io.BytesIO()
        arr = frame.pixels
        img = (
            Image.fromarray(arr[:, :, 0], mode="L")
            if frame.channels == 1
            else Image.fromarray(arr, mode="RGB")
        )
        img.save(buf, format="PNG")
        try:
            proc = subprocess.run(
                self._argv,
                input=buf.getvalue(),
                capture_output=True,
                timeout=self.timeout_seconds,
            )
        except subprocess.TimeoutExpired as exc:
            raise DenoiserContractError(
                f"denoiser {self._argv[0]} timed out after "
                f"{self.timeout_seconds:.1f}s"
            ) from exc
        except OSError as exc:
            raise DenoiserContractError(
                f"cannot launch denoiser {self._argv[0]}: {exc}"
            ) from exc
        if proc.returncode != 0:
            stderr = proc.stderr.decode(errors="replace").strip()
            raise DenoiserContractError(
                f"denoiser {self._argv[0]} exited {proc.returncode}: {stderr}"
            )
        try:
            with Image.open(io.BytesIO(proc.stdout)) as out_img:
                out_img.load()
                out = np.asarray(out_img, dtype=np.uint8)
        except (OSError, SyntaxError) as exc:
            raise DenoiserContractError(
                f"denoiser {self._argv[0]} produced undecodable output"
            ) from exc
        if out.ndim == 2:
            out = out[:, :, np.newaxis]
        if out.shape != frame.pixels.shape:
            raise DenoiserContractError(
                f"denoiser {self._argv[0]} returned shape {out.shape}, "
                f"expected {frame.pixels.shape}"
            )
        return Frame(out)
