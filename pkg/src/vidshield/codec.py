"""Orthonormal block DCT, uniform scalar quantization and residual coding.

Residual planes (signed differences in [-255, 255]) are split into BxB
blocks (zero-padded at the edges), transformed with an orthonormal 2-D
DCT-II and quantized with a single uniform step. Quantization is the
structure-destroying operation the temporal defense relies on.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import CodecError

_HEADER = struct.Struct("<IIIIId")  # B, grid_h, grid_w, plane_h, plane_w, q


def _check_square(block: np.ndarray) -> np.ndarray:
    block = np.asarray(block, dtype=np.float64)
    if block.ndim != 2 or block.shape[0] != block.shape[1] or block.shape[0] < 1:
        raise CodecError(f"block must be square and non-empty, got {block.shape}")
    return block


def forward_dct(block: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D DCT-II of a square block."""
    return scipy.fft.dctn(_check_square(block), norm="ortho")


def inverse_dct(coeffs: np.ndarray) -> np.ndarray:
    """Exact inverse of forward_dct (orthonormal 2-D DCT-III)."""
    return scipy.fft.idctn(_check_square(coeffs), norm="ortho")


def _check_step(q: float) -> float:
    q = float(q)
    if q <= 0.0:
        raise CodecError(f"quantization step must be positive, got {q}")
    return q


def quantize(coeffs: np.ndarray, q: float) -> np.ndarray:
    """Element-wise round-half-away-from-zero(x / q), as int64."""
    q = _check_step(q)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    scaled = coeffs / q
    return (np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)).astype(np.int64)


def dequantize(ints: np.ndarray, q: float) -> np.ndarray:
    """Element-wise x * q."""
    q = _check_step(q)
    return np.asarray(ints, dtype=np.float64) * q


@dataclass(frozen=True)
class ResidualPlan:
    """Quantized DCT coefficients for one residual plane."""

    block_size: int
    quant_step: float
    plane_height: int
    plane_width: int
    coeffs: np.ndarray  # (grid_h, grid_w, B, B) int64

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs)
        if not np.issubdtype(coeffs.dtype, np.integer):
            raise CodecError("plan coefficients must be integers")
        b = self.block_size
        grid_h = -(-self.plane_height // b)
        grid_w = -(-self.plane_width // b)
        if coeffs.shape != (grid_h, grid_w, b, b):
            raise CodecError(
                f"coefficient shape {coeffs.shape} does not match "
                f"{grid_h}x{grid_w} grid of {b}x{b} blocks"
            )
        coeffs = np.ascontiguousarray(coeffs.astype(np.int64))
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)


def encode_residual(
    residual: np.ndarray, block_size: int = 8, quant_step: float = 16.0
) -> ResidualPlan:
    """Per-block DCT + quantization of a signed residual plane."""
    q = _check_step(quant_step)
    residual = np.asarray(residual, dtype=np.float64)
    if residual.ndim != 2:
        raise CodecError(f"residual plane must be 2-D, got {residual.shape}")
    if block_size < 1:
        raise CodecError(f"block size must be >= 1, got {block_size}")
    h, w = residual.shape
    b = block_size
    grid_h, grid_w = -(-h // b), -(-w // b)
    padded = np.zeros((grid_h * b, grid_w * b))
    padded[:h, :w] = residual
    coeffs = np.empty((grid_h, grid_w, b, b), dtype=np.int64)
    for gy in range(grid_h):
        for gx in range(grid_w):
            block = padded[gy * b : (gy + 1) * b, gx * b : (gx + 1) * b]
            coeffs[gy, gx] = quantize(forward_dct(block), q)
    return ResidualPlan(
        block_size=b,
        quant_step=q,
        plane_height=h,
        plane_width=w,
        coeffs=coeffs,
    )


def decode_residual(plan: ResidualPlan) -> np.ndarray:
    """Per-block dequantize + inverse DCT; pad regions cropped."""
    b = plan.block_size
    grid_h, grid_w = plan.coeffs.shape[:2]
    padded = np.empty((grid_h * b, grid_w * b))
    for gy in range(grid_h):
        for gx in range(grid_w):
            padded[gy * b : (gy + 1) * b, gx * b : (gx + 1) * b] = inverse_dct(
                dequantize(plan.coeffs[gy, gx], plan.quant_step)
            )
    return padded[: plan.plane_height, : plan.plane_width]


def serialize_plan(plan: ResidualPlan) -> bytes:
    """Flat little-endian layout: header then row-major int16 coefficients.

    Plane dimensions ride in the header so decode can crop the padding.
    """
    if np.any(np.abs(plan.coeffs) > np.iinfo(np.int16).max):
        raise CodecError("quantized coefficients exceed the int16 wire range")
    grid_h, grid_w = plan.coeffs.shape[:2]
    header = _HEADER.pack(
        plan.block_size,
        grid_h,
        grid_w,
        plan.plane_height,
        plan.plane_width,
        plan.quant_step,
    )
    return header + plan.coeffs.astype("<i2").tobytes()


def deserialize_plan(data: bytes) -> ResidualPlan:
    if len(data) < _HEADER.size:
        raise CodecError("plan blob shorter than its header")
    b, grid_h, grid_w, plane_h, plane_w, q = _HEADER.unpack_from(data)
    expected = _HEADER.size + grid_h * grid_w * b * b * 2
    if len(data) != expected:
        raise CodecError(
            f"plan blob has {len(data)} bytes, expected {expected}"
        )
    coeffs = (
        np.frombuffer(data, dtype="<i2", offset=_HEADER.size)
        .reshape(grid_h, grid_w, b, b)
        .astype(np.int64)
    )
    return ResidualPlan(
        block_size=b,
        quant_step=q,
        plane_height=plane_h,
        plane_width=plane_w,
        coeffs=coeffs,
    )
