"""Human-motion analysis: trajectory segmentation, joint-space embedding,
PCA of motion segments, silhouette-based strategy-consistency, and human
baseline extraction.

Hand motion is embedded through the engine's own retargeted joint vectors
(a mesh-free stand-in for parametric hand-model coefficients); cluster
structure, not absolute coordinates, is the comparable output.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .hand import HandModel
from .retarget import CalibrationParams, RetargetConfig, RetargetError, retarget
from .scoring import BaselineEntry, BaselineTable, TrialRecord

logger = logging.getLogger(__name__)

TRAJECTORY_FORMAT_VERSION = 1
PCA_FORMAT_VERSION = 1

DEFAULT_WINDOW = 1.5  # s
DEFAULT_SEGMENT_FRAMES = 150
DEFAULT_RATE = 100.0  # Hz


class MotionError(ValueError):
    """Rejected motion-analysis input."""


@dataclass(frozen=True)
class Trajectory:
    task_id: str
    subject_id: str
    trial_index: int
    timestamps: np.ndarray  # (n,) strictly increasing, s
    keypoints: np.ndarray  # (n, 22, 3) m
    rate: float = DEFAULT_RATE
    joints: np.ndarray | None = None  # optional (n, 16)

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=float)
        kp = np.asarray(self.keypoints, dtype=float)
        if t.ndim != 1 or kp.shape != (t.size, 22, 3):
            raise MotionError("timestamps (n,) and keypoints (n, 22, 3) must match")
        if np.any(np.diff(t) <= 0):
            raise MotionError("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "keypoints", kp)
        if self.joints is not None:
            object.__setattr__(self, "joints", np.asarray(self.joints, dtype=float))

    @property
    def duration(self) -> float:
        return float(self.timestamps[-1] - self.timestamps[0])

    def gap_count(self) -> int:
        """Frame gaps longer than 3x the nominal period."""
        return int(np.sum(np.diff(self.timestamps) > 3.0 / self.rate))


def save_trajectory(traj: Trajectory, path) -> None:
    with open(path, "w") as f:
        header = {
            "type": "header",
            "format_version": TRAJECTORY_FORMAT_VERSION,
            "task_id": traj.task_id,
            "subject_id": traj.subject_id,
            "trial_index": traj.trial_index,
            "rate": traj.rate,
        }
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for i, t in enumerate(traj.timestamps):
            row = {"type": "frame", "t": float(t),
                   "keypoints": [[float(v) for v in p] for p in traj.keypoints[i]]}
            if traj.joints is not None:
                row["q"] = [float(v) for v in traj.joints[i]]
            f.write(json.dumps(row, sort_keys=True) + "\n")


def load_trajectory(path) -> Trajectory:
    header = None
    ts, kps, qs = [], [], []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            if row["type"] == "header":
                version = row.get("format_version")
                if version != TRAJECTORY_FORMAT_VERSION:
                    raise MotionError(
                        f"unsupported trajectory format_version {version!r}"
                    )
                header = row
            elif row["type"] == "frame":
                ts.append(row["t"])
                kps.append(row["keypoints"])
                if "q" in row:
                    qs.append(row["q"])
    if header is None:
        raise MotionError("trajectory file has no header line")
    return Trajectory(
        task_id=header["task_id"],
        subject_id=header["subject_id"],
        trial_index=int(header.get("trial_index", 0)),
        timestamps=np.array(ts),
        keypoints=np.array(kps),
        rate=float(header.get("rate", DEFAULT_RATE)),
        joints=np.array(qs) if qs and len(qs) == len(ts) else None,
    )


# ----------------------------------------------------------------------
# Segmentation
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    task_id: str
    subject_id: str
    start_time: float
    timestamps: np.ndarray  # (frames,)
    keypoints: np.ndarray  # (frames, 22, 3)


def segment(traj: Trajectory, window: float = DEFAULT_WINDOW,
            frames: int = DEFAULT_SEGMENT_FRAMES) -> list[Segment]:
    """Non-overlapping fixed-duration windows resampled by linear
    interpolation to a fixed frame count; the trailing remainder drops."""
    if window <= 0 or frames < 2:
        raise MotionError("window must be positive and frames >= 2")
    if traj.duration < window:
        logger.warning("trajectory %s/%s shorter than one window (%.3f s < %.3f s)",
                       traj.subject_id, traj.task_id, traj.duration, window)
        return []
    n_windows = int(traj.duration / window)
    t0 = traj.timestamps[0]
    flat = traj.keypoints.reshape(len(traj.timestamps), -1)
    out = []
    for w in range(n_windows):
        times = t0 + w * window + np.arange(frames) * (window / frames)
        cols = [np.interp(times, traj.timestamps, flat[:, j]) for j in range(flat.shape[1])]
        resampled = np.stack(cols, axis=1).reshape(frames, 22, 3)
        out.append(Segment(task_id=traj.task_id, subject_id=traj.subject_id,
                           start_time=float(times[0]), timestamps=times,
                           keypoints=resampled))
    return out


# ----------------------------------------------------------------------
# Embedding
# ----------------------------------------------------------------------

def pose_embed(seg: Segment, model: HandModel,
               params: CalibrationParams | None = None,
               cfg: RetargetConfig | None = None) -> np.ndarray:
    """Concatenated per-frame retargeted joint vectors for one segment.

    Embedding is offline, so the default solve drops the streaming
    smoothness term: a static pose then embeds to identical per-frame
    blocks instead of a decaying transient.
    """
    params = params or CalibrationParams()
    cfg = cfg or RetargetConfig(smoothness=0.0)
    emb = model.embodiment("hand_full")
    q_prev = np.zeros(model.joint_count)
    rows = []
    for kp in seg.keypoints:
        result = retarget(params, cfg, model, emb, kp, q_prev)
        rows.append(result.q)
        q_prev = result.q
    return np.concatenate(rows)


def embed_segments(segments: list[Segment], model: HandModel,
                   params: CalibrationParams | None = None,
                   cfg: RetargetConfig | None = None) -> tuple[np.ndarray, list[Segment]]:
    """Embed many segments, skipping (and logging) any that fail."""
    feats, kept = [], []
    for seg in segments:
        try:
            feats.append(pose_embed(seg, model, params, cfg))
            kept.append(seg)
        except RetargetError as exc:
            logger.warning("segment at t=%.2f skipped: %s", seg.start_time, exc)
    if not feats:
        return np.zeros((0, 0)), []
    return np.stack(feats), kept


# ----------------------------------------------------------------------
# PCA
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray  # (d,)
    components: np.ndarray  # (n, d) orthonormal rows
    explained_variance: np.ndarray  # (n,)
    explained_variance_ratio: np.ndarray  # (n,)
    n_effective: int  # rank actually supported by the data
    flagged: bool  # rank-deficient input padded with zero-variance axes

    def project(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        return (x - self.mean) @ self.components.T

    def to_dict(self) -> dict:
        return {
            "format_version": PCA_FORMAT_VERSION,
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "n_effective": self.n_effective,
            "flagged": self.flagged,
        }


def _complete_orthonormal(components: np.ndarray, d: int, n: int) -> np.ndarray:
    """Pad rows to n with deterministic orthonormal complements."""
    rows = [c for c in components]
    basis = list(np.eye(d))
    for e in basis:
        if len(rows) >= n:
            break
        v = e.copy()
        for r in rows:
            v -= (v @ r) * r
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            rows.append(v / nv)
    return np.stack(rows[:n])


def fit_pca(features: np.ndarray, n: int = 6) -> PcaModel:
    """Top-n principal axes of the sample covariance via SVD of the
    centered data matrix."""
    X = np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[0] < n:
        raise MotionError(f"need at least {n} samples, got {X.shape}")
    mean = X.mean(axis=0)
    Xc = X - mean
    U, S, Vt = np.linalg.svd(Xc, full_matrices=False)
    var = S**2 / X.shape[0]  # population covariance eigenvalues
    total = float(var.sum())
    rank = int(np.sum(S > S[0] * 1e-12)) if S.size and S[0] > 0 else 0
    n_eff = min(n, rank)
    flagged = n_eff < n
    if flagged:
        logger.warning("rank-deficient data: %d effective components of %d requested",
                       n_eff, n)
    components = _complete_orthonormal(Vt[:n_eff], X.shape[1], n)
    ev = np.zeros(n)
    ev[:n_eff] = var[:n_eff]
    ratio = ev / total if total > 0 else np.zeros(n)
    return PcaModel(mean=mean, components=components, explained_variance=ev,
                    explained_variance_ratio=ratio, n_effective=n_eff, flagged=flagged)


def save_pca(model: PcaModel, path, projections: np.ndarray | None = None,
             labels: list[str] | None = None) -> None:
    data = model.to_dict()
    if projections is not None:
        data["projections"] = np.asarray(projections).tolist()
        data["labels"] = list(labels or [])
    with open(path, "w") as f:
        json.dump(data, f)
        f.write("\n")


# ----------------------------------------------------------------------
# Baselines and cluster separation
# ----------------------------------------------------------------------

def baseline_times(trials: list[TrialRecord]) -> BaselineTable:
    """Per-task mean completion time over completed, non-practice trials.

    Tasks with no completed trials are excluded (reported by the table's
    ``missing()``).
    """
    groups: dict[str, list[float]] = {}
    for t in trials:
        if t.completed and not t.practice:
            groups.setdefault(t.task_id, []).append(t.duration)
    entries = {}
    for task_id, durations in sorted(groups.items()):
        durations.sort()
        entries[task_id] = BaselineEntry(
            time=float(np.mean(durations)),
            note=f"mean of {len(durations)} completed human trials",
            n=len(durations),
        )
    table = BaselineTable(entries=entries)
    if table.missing():
        logger.warning("no completed trials for tasks: %s", ", ".join(table.missing()))
    return table


@dataclass(frozen=True)
class SilhouetteResult:
    score: float
    singleton_count: int  # points in singleton clusters, silhouette forced to 0

    @property
    def flagged(self) -> bool:
        return self.singleton_count > 0


def cluster_separation(points: np.ndarray, labels) -> SilhouetteResult:
    """Mean silhouette over points, Euclidean distance."""
    X = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    if X.ndim != 2 or X.shape[0] != labels.size:
        raise MotionError("points (m, d) and labels (m,) must match")
    unique = np.unique(labels)
    if unique.size < 2:
        raise MotionError("need at least two distinct labels")
    d = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=2)
    sil = np.zeros(X.shape[0])
    singletons = 0
    for i in range(X.shape[0]):
        same = labels == labels[i]
        n_same = int(same.sum())
        if n_same < 2:
            singletons += 1
            continue  # silhouette stays 0
        a = d[i, same].sum() / (n_same - 1)
        b = min(d[i, labels == other].mean() for other in unique if other != labels[i])
        denom = max(a, b)
        if denom > 0:
            sil[i] = (b - a) / denom
    if singletons:
        logger.warning("%d points in singleton clusters scored 0", singletons)
    return SilhouetteResult(score=float(sil.mean()), singleton_count=singletons)
