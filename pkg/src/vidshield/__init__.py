"""Adversarial video detection and purification toolkit."""

from .config import PipelineConfig, load_config
from .detection import (
    CalibrationRow,
    CalibrationTable,
    DetectionThresholds,
    DetectionVerdict,
    LabelStream,
    RocCurve,
    Verdict,
    classify_verdict,
    compute_exception_index,
    exception_frame_mask,
    load_label_stream,
    roc_curve,
    select_optimal_threshold,
    sweep_thresholds,
)
from .defense import (
    DefenseRecord,
    ExternalDenoiser,
    TemporalDefenseParams,
    baseline_compressive_denoiser,
    make_baseline_denoiser,
    spatial_defend,
    temporal_defend,
)
from .errors import VidShieldError
from .harness import (
    AttackSpec,
    ManifestEntry,
    OracleClassifierSpec,
    ReportRow,
    calibrate,
    evaluate_corpus,
    inject_dense_attack,
    inject_sparse_attack,
    load_manifest,
    oracle_classify,
    run_pipeline,
    simulate_attack,
    synthetic_clean_clip,
)
from .motion import (
    Block,
    MotionField,
    MotionVector,
    block_mad,
    estimate_motion_field,
    full_search,
    motion_compensate,
    partition_blocks,
)
from .codec import (
    ResidualPlan,
    decode_residual,
    dequantize,
    deserialize_plan,
    encode_residual,
    forward_dct,
    inverse_dct,
    quantize,
    serialize_plan,
)
from .video import (
    Frame,
    FrameMask,
    VideoClip,
    clip_mse,
    frame_mse,
    frame_psnr,
    load_clip,
    save_clip,
)

__version__ = "0.1.0"
