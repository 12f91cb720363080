"""FastAPI service exposing the detect/defend/calibrate/evaluate pipeline.

All endpoints operate on paths visible to the server process (clip
directories of frame_NNNNNN.png files, JSONL label streams and corpus
manifests). The CLI is a thin client of this service.
"""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import harness
from .config import PipelineConfig, load_config
from .detection import (
    classify_verdict,
    compute_exception_index,
    load_label_stream,
    roc_curve,
)
from .errors import VidShieldError
from .video import load_clip, save_clip

app = FastAPI(
    title="vidshield",
    description="Adversarial video detection and purification service",
)


class ConfigOverrides(BaseModel):
    """Optional per-request overrides of the pipeline configuration."""

    config_path: Optional[str] = None
    gamma1: Optional[float] = None
    gamma2: Optional[float] = None
    motion_block: Optional[int] = None
    search_range: Optional[int] = None
    dct_block: Optional[int] = None
    quant_step: Optional[float] = None
    residual_mode: Optional[str] = None
    denoiser: Optional[str] = None
    oracle_tau: Optional[float] = None
    oracle_seed: Optional[int] = None

    def resolve(self) -> PipelineConfig:
        base = load_config(self.config_path) if self.config_path else PipelineConfig()
        overrides = {
            k: v
            for k, v in self.model_dump(exclude={"config_path"}).items()
            if v is not None
        }
        return replace(base, **overrides)


class DetectRequest(BaseModel):
    clip_dir: str
    labels_path: str
    config: ConfigOverrides = Field(default_factory=ConfigOverrides)


class DetectResponse(BaseModel):
    alpha: float
    verdict: str


class DefendRequest(BaseModel):
    clip_dir: str
    labels_path: str
    out_dir: str
    clean_dir: Optional[str] = None
    true_label: Optional[int] = None
    config: ConfigOverrides = Field(default_factory=ConfigOverrides)


class ReportRowModel(BaseModel):
    clip_id: str
    alpha: float
    verdict: str
    defense: str
    acc_pre: Optional[float] = None
    acc_post: Optional[float] = None
    mse_pre: Optional[float] = None
    mse_post: Optional[float] = None


class CalibrateRequest(BaseModel):
    manifest_path: str
    candidates: Optional[list[float]] = None
    config: ConfigOverrides = Field(default_factory=ConfigOverrides)


class CalibrateResponse(BaseModel):
    gamma1: float
    gamma2: float


class SimulateRequest(BaseModel):
    kind: str
    epsilon: int = 8
    frames: int = 1
    seed: int = 0
    out_dir: str
    clean_dir: Optional[str] = None
    frame_count: int = 16
    width: int = 64
    height: int = 64
    label: Optional[int] = None


class SimulateResponse(BaseModel):
    clip: str
    label: int
    attack: str
    mask: list[int]
    clean: str


class EvaluateRequest(BaseModel):
    manifest_path: str
    report_path: Optional[str] = None
    config: ConfigOverrides = Field(default_factory=ConfigOverrides)


class RocRequest(BaseModel):
    samples_path: str


class RocResponse(BaseModel):
    points: list[tuple[float, float]]
    auc: float


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/detect", response_model=DetectResponse)
def detect(req: DetectRequest) -> DetectResponse:
    try:
        config = req.config.resolve()
        clip = load_clip(req.clip_dir)
        labels = load_label_stream(req.labels_path)
        if len(labels) != clip.frame_count:
            raise VidShieldError(
                f"label stream length {len(labels)} does not match clip "
                f"length {clip.frame_count}"
            )
        alpha = compute_exception_index(labels)
        verdict = classify_verdict(alpha, config.thresholds())
    except VidShieldError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return DetectResponse(alpha=alpha, verdict=verdict.kind.value)


@app.post("/defend", response_model=ReportRowModel)
def defend(req: DefendRequest) -> ReportRowModel:
    try:
        config = req.config.resolve()
        clip = load_clip(req.clip_dir)
        labels = load_label_stream(req.labels_path)
        clean = load_clip(req.clean_dir) if req.clean_dir else None
        oracle = None
        if clean is not None and req.true_label is not None:
            oracle = harness.OracleClassifierSpec(
                true_label=req.true_label,
                tau=config.oracle_tau,
                seed=config.oracle_seed,
            )
        output, row = harness.run_pipeline(
            clip,
            labels,
            config,
            clip_id=req.clip_dir,
            clean_reference=clean,
            oracle=oracle,
        )
        save_clip(output, req.out_dir)
    except VidShieldError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return ReportRowModel(**row.to_dict())


@app.post("/calibrate", response_model=CalibrateResponse)
def calibrate(req: CalibrateRequest) -> CalibrateResponse:
    try:
        config = req.config.resolve()
        entries = harness.load_manifest(req.manifest_path)
        gamma1, gamma2 = harness.calibrate(entries, config, req.candidates)
    except VidShieldError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return CalibrateResponse(gamma1=gamma1, gamma2=gamma2)


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest) -> SimulateResponse:
    clean_dir = req.clean_dir or f"{req.out_dir.rstrip('/')}_clean"
    try:
        entry = harness.simulate_attack(
            kind=req.kind,
            epsilon=req.epsilon,
            frames=req.frames,
            seed=req.seed,
            out_dir=req.out_dir,
            clean_dir=clean_dir,
            frame_count=req.frame_count,
            width=req.width,
            height=req.height,
            label=req.label,
        )
    except VidShieldError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return SimulateResponse(
        clip=entry.clip,
        label=entry.label,
        attack=entry.attack,
        mask=list(entry.mask or ()),
        clean=entry.clean,
    )


@app.post("/evaluate")
def evaluate(req: EvaluateRequest) -> dict:
    try:
        config = req.config.resolve()
        entries = harness.load_manifest(req.manifest_path)
        report = harness.evaluate_corpus(entries, config)
        if req.report_path:
            Path(req.report_path).write_text(json.dumps(report, indent=2))
    except VidShieldError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return report


@app.post("/roc", response_model=RocResponse)
def roc(req: RocRequest) -> RocResponse:
    samples = []
    path = Path(req.samples_path)
    if not path.is_file():
        raise HTTPException(status_code=422, detail=f"no such file: {path}")
    try:
        for lineno, line in enumerate(path.read_text().splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            samples.append((float(obj["score"]), bool(obj["positive"])))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise HTTPException(
            status_code=422, detail=f"bad sample line in {path}: {exc}"
        ) from exc
    try:
        curve = roc_curve(samples)
    except VidShieldError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return RocResponse(points=list(curve.points), auc=curve.auc)
