"""Pipeline configuration: defaults, flat key=value file parsing."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .defense import (
    ExternalDenoiser,
    SpatialDenoiser,
    TemporalDefenseParams,
    make_baseline_denoiser,
)
from .detection import DetectionThresholds
from .errors import VidShieldError


@dataclass(frozen=True)
class PipelineConfig:
    gamma1: float = 0.175
    gamma2: float = 0.3
    motion_block: int = 16
    search_range: int = 7
    dct_block: int = 8
    quant_step: float = 16.0
    residual_mode: str = "quantized"
    denoiser: str = "baseline"
    # Oracle classifier knobs (harness-only; ignored with external labels).
    oracle_tau: float = 10.0
    oracle_seed: int = 0

    def thresholds(self) -> DetectionThresholds:
        return DetectionThresholds(gamma1=self.gamma1, gamma2=self.gamma2)

    def temporal_params(self) -> TemporalDefenseParams:
        return TemporalDefenseParams(
            motion_block=self.motion_block,
            search_range=self.search_range,
            transform_block=self.dct_block,
            quant_step=self.quant_step,
            residual_mode=self.residual_mode,
        )

    def build_denoiser(self) -> SpatialDenoiser:
        if self.denoiser == "baseline":
            return make_baseline_denoiser(self.dct_block, self.quant_step)
        if self.denoiser.startswith("external:"):
            return ExternalDenoiser(self.denoiser[len("external:") :])
        raise VidShieldError(
            f"denoiser must be 'baseline' or 'external:<command>', "
            f"got {self.denoiser!r}"
        )


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _coerce(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def load_config(path: str | Path) -> PipelineConfig:
    """Parse a flat ``key = value`` config file; every key has a default."""
    path = Path(path)
    if not path.is_file():
        raise VidShieldError(f"config file does not exist: {path}")
    overrides = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise VidShieldError(f"bad config line {lineno} in {path}: {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _FIELD_TYPES:
            raise VidShieldError(f"unknown config key {key!r} at line {lineno}")
        try:
            overrides[key] = _coerce(key, value)
        except ValueError as exc:
            raise VidShieldError(
                f"bad value for {key!r} at line {lineno}: {value!r}"
            ) from exc
    return replace(PipelineConfig(), **overrides)
