"""Feature fusion: assemble per-frame feature vectors, train and apply the
quality regressor.

The per-frame vector carries, in fixed order: the four multiscale information
fidelity ratios on luma, the mean absolute luma frame difference, the pooled
detail-loss score on luma, and the two quantized scale-3 chroma detail-loss
features. Per-video vectors are arithmetic means over frames. Features are
min-max normalized to [0, 1] with bounds learned from the training data, and
fused by a nu-SVR with an RBF kernel. Model files are versioned JSON and
record the feature-extractor configuration fingerprints.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import adm as adm_mod
from . import vif as vif_mod
from .adm import AdmConfig, DEFAULT_ADM_CONFIG, chroma_adm_features
from .descriptors import motion_ti
from .svr import rbf_kernel, solve_nu_svr
from .video_io import VideoSequence
from .vif import DEFAULT_VIF_CONFIG, VifConfig

FEATURE_NAMES = ("vif_s0", "vif_s1", "vif_s2", "vif_s3", "ti", "adm",
                 "adm_cb_s3_q", "adm_cr_s3_q")

MODEL_FORMAT_VERSION = 1
SCORE_RANGE = (0.0, 100.0)


@dataclass(frozen=True)
class FeatureVector:
    """The eight named per-frame features, in their canonical order."""

    vif_s0: float
    vif_s1: float
    vif_s2: float
    vif_s3: float
    ti: float
    adm: float
    adm_cb_s3_q: float
    adm_cr_s3_q: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES])

    def as_dict(self) -> Dict[str, float]:
        return {n: getattr(self, n) for n in FEATURE_NAMES}

    @classmethod
    def from_dict(cls, d: Dict[str, float]) -> "FeatureVector":
        return cls(**{n: float(d[n]) for n in FEATURE_NAMES})


@dataclass(frozen=True)
class SvrConfig:
    c: float = 2.0 ** 3
    gamma: float = 2.0 ** -3
    nu: float = 0.5

    def __post_init__(self):
        if self.c <= 0 or self.gamma <= 0:
            raise ValueError("c and gamma must be positive")
        if not 0.0 < self.nu <= 1.0:
            raise ValueError("nu must lie in (0, 1]")


@dataclass
class TrainingSet:
    """Pooled per-video features with their target scores."""

    feature_names: Tuple[str, ...]
    features: np.ndarray          # rows x features
    targets: np.ndarray           # scores in [0, 100]
    content_ids: Tuple[str, ...]

    def __post_init__(self):
        self.feature_names = tuple(self.feature_names)
        self.features = np.asarray(self.features, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        self.content_ids = tuple(self.content_ids)
        if self.features.ndim != 2 or self.features.shape[1] != len(self.feature_names):
            raise ValueError("feature matrix does not match feature names")
        if len(self.targets) != self.features.shape[0]:
            raise ValueError("target count does not match row count")
        if len(self.content_ids) != self.features.shape[0]:
            raise ValueError("content id count does not match row count")
        if np.isnan(self.features).any():
            raise ValueError("features contain NaN")
        if len(self.targets) < 1:
            raise ValueError("training set is empty")

    @classmethod
    def from_rows(cls, rows, feature_names: Sequence[str] = FEATURE_NAMES) -> "TrainingSet":
        """rows: iterable of (features mapping or FeatureVector, mos, content_id)."""
        feats, targets, ids = [], [], []
        for fv, mos, cid in rows:
            d = fv.as_dict() if isinstance(fv, FeatureVector) else dict(fv)
            feats.append([float(d[n]) for n in feature_names])
            targets.append(float(mos))
            ids.append(str(cid))
        return cls(tuple(feature_names), np.array(feats, dtype=np.float64),
                   np.array(targets, dtype=np.float64), tuple(ids))


@dataclass
class SvrModel:
    gamma: float
    support_vectors: np.ndarray   # normalized feature rows
    coefficients: np.ndarray      # signed dual weights, same length
    bias: float
    feature_names: Tuple[str, ...]
    norm_min: np.ndarray
    norm_max: np.ndarray
    constant_features: Tuple[str, ...] = ()
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.coefficients) != len(self.support_vectors):
            raise ValueError("coefficient/support vector length mismatch")


def extract_feature_vector(ref: VideoSequence, dist: VideoSequence,
                           n_quant: int,
                           vif_cfg: VifConfig = DEFAULT_VIF_CONFIG,
                           adm_cfg: AdmConfig = DEFAULT_ADM_CONFIG,
                           threads: int = 1) -> List[FeatureVector]:
    """Per-frame feature vectors for a reference/distorted sequence pair.

    Results are deterministic and independent of the thread count: frames are
    processed in parallel but reassembled in frame order.
    """
    if len(ref) != len(dist):
        raise ValueError(f"frame counts differ: {len(ref)} vs {len(dist)}")
    if (ref.width, ref.height) != (dist.width, dist.height):
        raise ValueError(
            f"geometry differs: {ref.width}x{ref.height} vs "
            f"{dist.width}x{dist.height}")

    ti_series = motion_ti(dist)

    def one_frame(t: int) -> FeatureVector:
        rf, df = ref[t], dist[t]
        v = vif_mod.vif_multiscale(rf.y, df.y, vif_cfg)
        a = adm_mod.adm_multiscale(rf.y, df.y, adm_cfg)
        ch = chroma_adm_features(rf, df, n_quant, adm_cfg)
        return FeatureVector(
            vif_s0=v.s0, vif_s1=v.s1, vif_s2=v.s2, vif_s3=v.s3,
            ti=ti_series[t], adm=a.overall,
            adm_cb_s3_q=ch.adm_cb_s3_q, adm_cr_s3_q=ch.adm_cr_s3_q,
        )

    indices = range(len(ref))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one_frame, indices))
    return [one_frame(t) for t in indices]


def pool_features(vectors: Sequence[FeatureVector]) -> FeatureVector:
    """Element-wise arithmetic mean over frames."""
    if not vectors:
        raise ValueError("cannot pool an empty feature list")
    stack = np.stack([v.as_array() for v in vectors])
    mean = stack.mean(axis=0)
    return FeatureVector(*(float(x) for x in mean))


def normalize(features: np.ndarray, norm_min: np.ndarray,
              norm_max: np.ndarray) -> np.ndarray:
    """Min-max rescale to [0, 1], clamping out-of-range inference inputs.

    Features that were constant in training (min == max) map to 0.5.
    """
    features = np.asarray(features, dtype=np.float64)
    span = norm_max - norm_min
    constant = span <= 0.0
    safe_span = np.where(constant, 1.0, span)
    scaled = (features - norm_min) / safe_span
    scaled = np.clip(scaled, 0.0, 1.0)
    return np.where(constant, 0.5, scaled)


def train_svr(data: TrainingSet, cfg: SvrConfig = SvrConfig(),
              metadata: Optional[Dict[str, object]] = None) -> SvrModel:
    """Fit the regressor; deterministic for a fixed row order.

    Degenerate data with a single distinct target still yields a model (it
    predicts that constant) and is flagged in the metadata.
    """
    norm_min = data.features.min(axis=0)
    norm_max = data.features.max(axis=0)
    x = normalize(data.features, norm_min, norm_max)

    kernel = rbf_kernel(x, x, cfg.gamma)
    solution = solve_nu_svr(kernel, data.targets, cfg.c, cfg.nu)

    keep = solution.coef != 0.0
    if not keep.any():
        # All-zero dual (e.g. constant targets): keep one row so the model
        # file stays well-formed; the bias carries the prediction.
        keep = np.zeros(len(x), dtype=bool)
        keep[0] = True

    constant = tuple(np.asarray(data.feature_names)[norm_max - norm_min <= 0.0])
    meta = dict(metadata or {})
    meta.update({
        "svr_c": cfg.c, "svr_gamma": cfg.gamma, "svr_nu": cfg.nu,
        "epsilon": solution.epsilon,
        "training_rows": len(data.targets),
    })
    if float(np.ptp(data.targets)) == 0.0:
        meta["constant_target"] = True
    if not solution.converged:
        meta["solver_converged"] = False

    return SvrModel(
        gamma=cfg.gamma,
        support_vectors=x[keep],
        coefficients=solution.coef[keep],
        bias=solution.bias,
        feature_names=data.feature_names,
        norm_min=norm_min,
        norm_max=norm_max,
        constant_features=constant,
        metadata=meta,
    )


def _feature_row(model: SvrModel, features) -> np.ndarray:
    if isinstance(features, FeatureVector):
        d = features.as_dict()
    elif isinstance(features, dict):
        d = features
    else:
        arr = np.asarray(features, dtype=np.float64)
        if arr.shape != (len(model.feature_names),):
            raise ValueError("feature array length does not match the model")
        return arr
    missing = [n for n in model.feature_names if n not in d]
    if missing:
        raise ValueError(f"features missing for model inputs: {missing}")
    return np.array([float(d[n]) for n in model.feature_names])


def predict(model: SvrModel, features) -> float:
    """Score one pooled feature vector, clipped to the MOS range."""
    row = _feature_row(model, features)
    x = normalize(row, model.norm_min, model.norm_max)
    k = rbf_kernel(x[None, :], model.support_vectors, model.gamma)[0]
    raw = float(k @ model.coefficients + model.bias)
    return min(max(raw, SCORE_RANGE[0]), SCORE_RANGE[1])


def predict_many(model: SvrModel, rows: Sequence) -> List[float]:
    return [predict(model, r) for r in rows]


def save_model(model: SvrModel, path) -> None:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kernel": {"type": "rbf", "gamma": model.gamma},
        "bias": model.bias,
        "coefficients": [float(v) for v in model.coefficients],
        "support_vectors": [[float(v) for v in row]
                            for row in model.support_vectors],
        "feature_names": list(model.feature_names),
        "norm_bounds": {n: [float(model.norm_min[i]), float(model.norm_max[i])]
                        for i, n in enumerate(model.feature_names)},
        "constant_features": list(model.constant_features),
        "metadata": model.metadata,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path) -> SvrModel:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version: {version}")
    kernel = payload["kernel"]
    if kernel.get("type") != "rbf":
        raise ValueError(f"unsupported kernel type: {kernel.get('type')}")
    names = tuple(payload["feature_names"])
    bounds = payload["norm_bounds"]
    return SvrModel(
        gamma=float(kernel["gamma"]),
        support_vectors=np.array(payload["support_vectors"], dtype=np.float64),
        coefficients=np.array(payload["coefficients"], dtype=np.float64),
        bias=float(payload["bias"]),
        feature_names=names,
        norm_min=np.array([bounds[n][0] for n in names]),
        norm_max=np.array([bounds[n][1] for n in names]),
        constant_features=tuple(payload.get("constant_features", ())),
        metadata=dict(payload.get("metadata", {})),
    )


def default_parameter_grid() -> List[Tuple[float, float]]:
    exps = range(-5, 6)
    return [(2.0 ** ce, 2.0 ** ge) for ce in exps for ge in exps]


@dataclass(frozen=True)
class GridCell:
    c: float
    gamma: float
    per_set_srocc: Tuple[float, ...]
    overall_srocc: float
    monotonic: Optional[bool] = None


def grid_search(data: TrainingSet, validation_sets: Sequence[TrainingSet],
                nu: float = 0.5,
                grid: Optional[Sequence[Tuple[float, float]]] = None,
                monotonicity_fixture=None) -> List[GridCell]:
    """Train one model per (c, gamma) cell and report validation correlations.

    No cell is auto-selected; the caller inspects the table. When a
    monotonicity fixture (2D grid of feature mappings) is supplied, each cell
    also reports whether its predictions are non-increasing along both axes.
    """
    from .evaluation import fisher_overall, srocc
    from .rd_tools import monotonicity_check

    if not validation_sets:
        raise ValueError("at least one validation set is required")
    cells = []
    for c, gamma in (grid if grid is not None else default_parameter_grid()):
        model = train_svr(data, SvrConfig(c=c, gamma=gamma, nu=nu))
        per_set = []
        for vs in validation_sets:
            preds = [predict(model, row) for row in vs.features]
            per_set.append(srocc(preds, vs.targets))
        overall = fisher_overall(per_set) if len(per_set) > 1 else per_set[0]
        monotonic = None
        if monotonicity_fixture is not None:
            pred_grid = [[predict(model, fv) for fv in row]
                         for row in monotonicity_fixture]
            monotonic = not monotonicity_check(pred_grid).violations
        cells.append(GridCell(c=c, gamma=gamma, per_set_srocc=tuple(per_set),
                              overall_srocc=overall, monotonic=monotonic))
    return cells
