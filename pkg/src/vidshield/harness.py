"""Synthetic attacks, oracle classifier, pipeline and corpus evaluation.

The harness makes the detect-then-defend pipeline testable without any
trained network: perturbations are seeded uniform noise, and the per-frame
classifier is a deterministic oracle that returns the clip's true label
while a frame stays close to its clean version and a seeded wrong label
once it drifts past an MSE threshold.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .config import PipelineConfig
from .detection import (
    LabelStream,
    Verdict,
    classify_verdict,
    compute_exception_index,
    exception_frame_mask,
    select_optimal_threshold,
    sweep_thresholds,
)
from .defense import AllFramesMaskedError, spatial_defend, temporal_defend
from .errors import DimensionMismatchError, ManifestError, VidShieldError
from .video import Frame, FrameMask, VideoClip, clip_mse, frame_mse, load_clip

ATTACK_KINDS = ("sparse", "dense")
DEFAULT_CANDIDATE_GRID = tuple(round(0.025 * i, 3) for i in range(1, 40))

ABLATION_ARMS = ("no_defense", "spatial_only", "temporal_only", "detection_both")


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    epsilon: int
    sparse_frame_count: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise VidShieldError(f"attack kind must be one of {ATTACK_KINDS}")
        if not 0 < self.epsilon <= 64:
            raise VidShieldError(
                f"epsilon must be in (0, 64], got {self.epsilon}"
            )
        if self.kind == "sparse" and self.sparse_frame_count < 1:
            raise VidShieldError("sparse attacks need at least one frame")


@dataclass(frozen=True)
class OracleClassifierSpec:
    true_label: int
    tau: float
    seed: int = 0

    def __post_init__(self):
        if self.tau <= 0:
            raise VidShieldError(f"tau must be positive, got {self.tau}")


def _noised(frame: Frame, epsilon: int, rng: np.random.Generator) -> Frame:
    noise = rng.integers(
        -epsilon, epsilon + 1, size=frame.pixels.shape, dtype=np.int16
    )
    perturbed = frame.pixels.astype(np.int16) + noise
    return Frame(np.clip(perturbed, 0, 255).astype(np.uint8))


def inject_sparse_attack(
    clip: VideoClip, spec: AttackSpec
) -> tuple[VideoClip, FrameMask]:
    """Perturb k seeded frames; returns the attacked clip and its mask.

    When k fits among interior frames, attacked positions are drawn from
    indices 1..T-2 only, so the detection mask (which can never flag
    boundary frames) can match ground truth exactly. Boundary positions
    come into play only when k exceeds the interior.
    """
    t = clip.frame_count
    k = spec.sparse_frame_count
    if spec.kind != "sparse":
        raise VidShieldError("inject_sparse_attack needs a sparse spec")
    if k >= t:
        raise VidShieldError(f"sparse attack needs k < T, got k={k}, T={t}")
    rng = np.random.default_rng(spec.seed)
    candidates = list(range(1, t - 1)) if k <= t - 2 else list(range(t))
    chosen = sorted(rng.choice(candidates, size=k, replace=False).tolist())
    frames = list(clip.frames)
    for idx in chosen:
        frames[idx] = _noised(clip[idx], spec.epsilon, rng)
    flags = [i in chosen for i in range(t)]
    return VideoClip(tuple(frames)), FrameMask(tuple(flags))


def inject_dense_attack(clip: VideoClip, spec: AttackSpec) -> VideoClip:
    """Perturb every frame with independent seeded noise."""
    if spec.kind != "dense":
        raise VidShieldError("inject_dense_attack needs a dense spec")
    rng = np.random.default_rng(spec.seed)
    return VideoClip(
        tuple(_noised(frame, spec.epsilon, rng) for frame in clip.frames)
    )


def _wrong_label(spec: OracleClassifierSpec, frame_index: int) -> int:
    rng = np.random.default_rng([spec.seed, frame_index])
    return spec.true_label + 1 + int(rng.integers(0, 1_000_000))


def oracle_classify(
    clip: VideoClip, clean_reference: VideoClip, spec: OracleClassifierSpec
) -> LabelStream:
    """Deterministic per-frame stand-in for a trained classifier.

    A frame keeps the true label while its MSE against the clean version
    stays within tau; past that it flips to a wrong label derived only
    from (seed, frame index), so labels stay per-frame independent.
    """
    if clip.frame_count != clean_reference.frame_count or not clip[0].same_shape(
        clean_reference[0]
    ):
        raise DimensionMismatchError(
            "clip and clean reference must have identical geometry"
        )
    labels = []
    for n, (frame, clean) in enumerate(zip(clip, clean_reference)):
        if frame_mse(frame, clean) <= spec.tau:
            labels.append(spec.true_label)
        else:
            labels.append(_wrong_label(spec, n))
    return LabelStream(tuple(labels))


def clip_label(stream: LabelStream) -> int:
    """Clip-level prediction: plurality of frame labels, smallest label wins ties."""
    counts = Counter(stream.labels)
    best = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
    return best[0]


def synthetic_clean_clip(
    frame_count: int = 16,
    width: int = 64,
    height: int = 64,
    seed: int = 0,
    channels: int = 1,
    cell: int = 8,
) -> VideoClip:
    """Static scene of 8x8-aligned constant cells, values multiples of 4.

    Cell values in [48, 208] leave headroom for additive noise without
    clamping, and being multiples of 4 every 8x8 DC coefficient is an
    exact multiple of 32, so the baseline compressive denoiser is
    lossless on the clean content for quantization steps up to 32.
    """
    rng = np.random.default_rng(seed)
    grid = rng.integers(12, 53, size=(-(-height // cell), -(-width // cell), channels))
    cells = (grid * 4).astype(np.uint8)
    plane = np.repeat(np.repeat(cells, cell, axis=0), cell, axis=1)
    frame = Frame(plane[:height, :width, :])
    return VideoClip(tuple([frame] * frame_count))


@dataclass(frozen=True)
class ReportRow:
    clip_id: str
    alpha: float
    verdict: str
    defense: str
    acc_pre: Optional[float]
    acc_post: Optional[float]
    mse_pre: Optional[float]
    mse_post: Optional[float]

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "alpha": self.alpha,
            "verdict": self.verdict,
            "defense": self.defense,
            "acc_pre": self.acc_pre,
            "acc_post": self.acc_post,
            "mse_pre": self.mse_pre,
            "mse_post": self.mse_post,
        }


def run_pipeline(
    clip: VideoClip,
    labels: LabelStream,
    config: PipelineConfig,
    clip_id: str = "clip",
    clean_reference: Optional[VideoClip] = None,
    oracle: Optional[OracleClassifierSpec] = None,
) -> tuple[VideoClip, ReportRow]:
    """Detect-then-defend: verdict routes to pass-through/temporal/spatial.

    Accuracy and MSE columns are filled only when a clean reference (and,
    for accuracy, an oracle spec) is available; otherwise they are None.
    """
    if len(labels) != clip.frame_count:
        raise VidShieldError(
            f"label stream length {len(labels)} does not match clip length "
            f"{clip.frame_count}"
        )
    alpha = compute_exception_index(labels)
    verdict = classify_verdict(alpha, config.thresholds())

    if verdict.kind is Verdict.CLEAN:
        output, defense = clip, "none"
    elif verdict.kind is Verdict.SPARSE:
        mask = exception_frame_mask(labels)
        try:
            output, _ = temporal_defend(clip, mask, config.temporal_params())
            defense = "temporal"
        except AllFramesMaskedError:
            output = spatial_defend(clip, config.build_denoiser())
            defense = "spatial-fallback"
    else:
        output = spatial_defend(clip, config.build_denoiser())
        defense = "spatial"

    acc_pre = acc_post = mse_pre = mse_post = None
    if clean_reference is not None:
        mse_pre = clip_mse(clip, clean_reference)
        mse_post = clip_mse(output, clean_reference)
        if oracle is not None:
            acc_pre = float(clip_label(labels) == oracle.true_label)
            post_labels = oracle_classify(output, clean_reference, oracle)
            acc_post = float(clip_label(post_labels) == oracle.true_label)

    row = ReportRow(
        clip_id=clip_id,
        alpha=alpha,
        verdict=verdict.kind.value,
        defense=defense,
        acc_pre=acc_pre,
        acc_post=acc_post,
        mse_pre=mse_pre,
        mse_post=mse_post,
    )
    return output, row


@dataclass(frozen=True)
class ManifestEntry:
    clip: str
    label: int
    attack: str  # none | sparse | dense
    mask: Optional[tuple[int, ...]] = None
    clean: Optional[str] = None  # clean twin; defaults to clip when attack=none

    def clean_dir(self) -> str:
        if self.clean is not None:
            return self.clean
        if self.attack == "none":
            return self.clip
        raise ManifestError(
            f"attacked clip {self.clip} needs a 'clean' directory for the oracle"
        )


def load_manifest(path: str | Path) -> list[ManifestEntry]:
    """Read a JSONL manifest, one clip per line."""
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest does not exist: {path}")
    entries = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                attack = obj.get("attack", "none")
                if attack not in ("none", "sparse", "dense"):
                    raise ValueError(f"bad attack kind {attack!r}")
                entries.append(
                    ManifestEntry(
                        clip=str(obj["clip"]),
                        label=int(obj["label"]),
                        attack=attack,
                        mask=tuple(int(i) for i in obj["mask"])
                        if obj.get("mask") is not None
                        else None,
                        clean=str(obj["clean"]) if obj.get("clean") else None,
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ManifestError(
                    f"bad manifest line {lineno} in {path}: {exc}"
                ) from exc
    if not entries:
        raise ManifestError(f"manifest is empty: {path}")
    return entries


def _oracle_for(entry: ManifestEntry, config: PipelineConfig) -> OracleClassifierSpec:
    return OracleClassifierSpec(
        true_label=entry.label, tau=config.oracle_tau, seed=config.oracle_seed
    )


def _arm_accuracy(
    defended: VideoClip,
    clean: VideoClip,
    oracle: OracleClassifierSpec,
) -> float:
    labels = oracle_classify(defended, clean, oracle)
    return float(clip_label(labels) == oracle.true_label)


def evaluate_corpus(
    entries: list[ManifestEntry], config: PipelineConfig
) -> dict:
    """Run all four ablation arms over a corpus.

    Arms: no defense, spatial defense on everything, temporal defense
    (detection mask) on everything, and the full detect-then-route
    pipeline. Per-clip rows come from the full pipeline arm; arm
    accuracies and aggregates are recomputable from the row data.
    """
    rows = []
    arm_correct = {arm: 0.0 for arm in ABLATION_ARMS}
    denoiser = config.build_denoiser()
    for idx, entry in enumerate(entries):
        clip = load_clip(entry.clip)
        clean = load_clip(entry.clean_dir())
        oracle = _oracle_for(entry, config)
        labels = oracle_classify(clip, clean, oracle)

        arm_correct["no_defense"] += _arm_accuracy(clip, clean, oracle)
        arm_correct["spatial_only"] += _arm_accuracy(
            spatial_defend(clip, denoiser), clean, oracle
        )
        mask = exception_frame_mask(labels)
        try:
            temporal_out, _ = temporal_defend(clip, mask, config.temporal_params())
        except AllFramesMaskedError:
            temporal_out = clip
        arm_correct["temporal_only"] += _arm_accuracy(temporal_out, clean, oracle)

        _, row = run_pipeline(
            clip,
            labels,
            config,
            clip_id=entry.clip,
            clean_reference=clean,
            oracle=oracle,
        )
        arm_correct["detection_both"] += row.acc_post
        rows.append(row)

    n = len(entries)
    report = {
        "rows": [row.to_dict() for row in rows],
        "arms": {arm: arm_correct[arm] / n for arm in ABLATION_ARMS},
        "aggregates": {
            "clips": n,
            "acc_pre_mean": sum(r.acc_pre for r in rows) / n,
            "acc_post_mean": sum(r.acc_post for r in rows) / n,
            "mse_pre_mean": sum(r.mse_pre for r in rows) / n,
            "mse_post_mean": sum(r.mse_post for r in rows) / n,
            "verdict_counts": dict(Counter(r.verdict for r in rows)),
        },
    }
    return report


def calibrate(
    entries: list[ManifestEntry],
    config: PipelineConfig,
    candidates: Optional[list[float]] = None,
) -> tuple[float, float]:
    """Calibrate (gamma1, gamma2) by F1 sweeps over a labeled corpus.

    gamma1 separates clean from adversarial (adversarial positive);
    gamma2 separates sparse from dense (dense positive). Both sweeps pick
    the max-F1 candidate, smallest threshold on ties.
    """
    kinds = {entry.attack for entry in entries}
    if kinds != {"none", "sparse", "dense"}:
        raise ManifestError(
            f"calibration needs clean, sparse and dense clips; got {sorted(kinds)}"
        )
    grid = list(candidates) if candidates is not None else list(DEFAULT_CANDIDATE_GRID)

    alphas = {}
    for entry in entries:
        clip = load_clip(entry.clip)
        clean = load_clip(entry.clean_dir())
        labels = oracle_classify(clip, clean, _oracle_for(entry, config))
        alphas[entry.clip] = compute_exception_index(labels)

    adversarial = [
        (alphas[e.clip], e.attack != "none") for e in entries
    ]
    gamma1 = select_optimal_threshold(sweep_thresholds(adversarial, grid))

    dense_vs_sparse = [
        (alphas[e.clip], e.attack == "dense")
        for e in entries
        if e.attack != "none"
    ]
    gamma2 = select_optimal_threshold(sweep_thresholds(dense_vs_sparse, grid))
    if not gamma1 < gamma2:
        raise ManifestError(
            f"calibration produced gamma1={gamma1} >= gamma2={gamma2}; "
            f"corpus alpha values are not separable on this grid"
        )
    return gamma1, gamma2


def simulate_attack(
    kind: str,
    epsilon: int,
    frames: int,
    seed: int,
    out_dir: str | Path,
    clean_dir: str | Path,
    frame_count: int = 16,
    width: int = 64,
    height: int = 64,
    label: Optional[int] = None,
) -> ManifestEntry:
    """Generate a seeded clean clip, attack it and write both to disk.

    Returns the manifest entry describing the attacked clip (its ground
    truth mask included for sparse attacks).
    """
    from .video import save_clip

    rng = np.random.default_rng(seed)
    if label is None:
        label = int(rng.integers(0, 101))
    clean = synthetic_clean_clip(
        frame_count=frame_count, width=width, height=height, seed=seed
    )
    spec = AttackSpec(
        kind=kind, epsilon=epsilon, sparse_frame_count=frames, seed=seed
    )
    if kind == "sparse":
        attacked, mask = inject_sparse_attack(clean, spec)
        mask_indices = tuple(mask.masked_indices)
    else:
        attacked = inject_dense_attack(clean, spec)
        mask_indices = tuple(range(frame_count))
    save_clip(attacked, out_dir)
    save_clip(clean, clean_dir)
    return ManifestEntry(
        clip=str(out_dir),
        label=label,
        attack=kind,
        mask=mask_indices,
        clean=str(clean_dir),
    )


def manifest_entry_to_dict(entry: ManifestEntry) -> dict:
    obj = {"clip": entry.clip, "label": entry.label, "attack": entry.attack}
    if entry.mask is not None:
        obj["mask"] = list(entry.mask)
    if entry.clean is not None:
        obj["clean"] = entry.clean
    return obj
