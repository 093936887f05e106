"""Raw opinion score processing.

Raw scores are standardized per subject and session, outlier subjects are
removed with the BT.500-13 screening procedure (kurtosis-dependent 2-sigma or
sqrt(20)-sigma thresholds on the per-video score distributions), and the
surviving z-scores are linearly rescaled to [0, 100] before averaging into
per-video mean opinion scores with confidence intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np


@dataclass
class ScoreMatrix:
    """subject x video raw scores in [1, 100]; NaN marks a missing entry."""

    scores: np.ndarray
    subjects: Tuple[str, ...]
    videos: Tuple[str, ...]
    session_of: Tuple[int, ...]    # session index per video, 1-based

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.subjects = tuple(self.subjects)
        self.videos = tuple(self.videos)
        self.session_of = tuple(int(s) for s in self.session_of)
        if self.scores.shape != (len(self.subjects), len(self.videos)):
            raise ValueError("score matrix shape does not match labels")
        if len(self.session_of) != len(self.videos):
            raise ValueError("every video needs a session index")
        present = self.scores[~np.isnan(self.scores)]
        if present.size and (present.min() < 1.0 or present.max() > 100.0):
            raise ValueError("raw scores must lie in [1, 100]")

    @classmethod
    def from_records(cls, records) -> "ScoreMatrix":
        """records: iterable of (subject_id, video_id, session, raw_score)."""
        subjects: List[str] = []
        videos: List[str] = []
        sessions: Dict[str, int] = {}
        cells: Dict[Tuple[str, str], float] = {}
        for subj, vid, session, score in records:
            subj, vid = str(subj), str(vid)
            if subj not in subjects:
                subjects.append(subj)
            if vid not in videos:
                videos.append(vid)
                sessions[vid] = int(session)
            elif sessions[vid] != int(session):
                raise ValueError(f"video {vid} appears in multiple sessions")
            cells[(subj, vid)] = float(score)
        m = np.full((len(subjects), len(videos)), np.nan)
        for (subj, vid), score in cells.items():
            m[subjects.index(subj), videos.index(vid)] = score
        return cls(m, tuple(subjects), tuple(videos),
                   tuple(sessions[v] for v in videos))


@dataclass
class MosReport:
    videos: Tuple[str, ...]
    mos: np.ndarray
    std_error: np.ndarray
    ci95: np.ndarray
    n_raters: np.ndarray
    rejected_subjects: Tuple[str, ...]
    flags: Dict[str, object] = field(default_factory=dict)


def zscore_by_session(m: ScoreMatrix):
    """Standardize each subject's scores within each session (unbiased std).

    Returns (z_matrix, flagged_subjects): subjects with fewer than two scores
    or zero spread in some session are flagged and excluded (all-NaN rows).
    """
    z = np.full_like(m.scores, np.nan)
    sessions = sorted(set(m.session_of))
    session_cols = {s: [j for j, sj in enumerate(m.session_of) if sj == s]
                    for s in sessions}
    flagged: List[str] = []
    for i in range(len(m.subjects)):
        row_ok = True
        row = np.full(len(m.videos), np.nan)
        for s in sessions:
            cols = session_cols[s]
            vals = m.scores[i, cols]
            present = ~np.isnan(vals)
            if present.sum() == 0:
                continue
            if present.sum() < 2 or np.std(vals[present], ddof=1) == 0.0:
                row_ok = False
                break
            mu = float(np.mean(vals[present]))
            sd = float(np.std(vals[present], ddof=1))
            row[cols] = (vals - mu) / sd
        if row_ok:
            z[i] = row
        else:
            flagged.append(m.subjects[i])
    return z, tuple(flagged)


def _kurtosis(x: np.ndarray) -> float:
    mu = np.mean(x)
    m2 = np.mean((x - mu) ** 2)
    if m2 == 0.0:
        return 0.0
    m4 = np.mean((x - mu) ** 4)
    return float(m4 / (m2 * m2))


def bt500_reject(z: np.ndarray, subjects: Sequence[str]) -> Tuple[str, ...]:
    """BT.500-13 screening on a z-score matrix (subjects x videos).

    Per video, scores beyond mean +/- 2*sigma (Gaussian-shaped distributions,
    kurtosis in [2, 4]) or sqrt(20)*sigma (otherwise) are counted for each
    subject; a subject is rejected when such outliers are frequent
    ((P+Q)/N > 0.05) and two-sided (|P-Q|/(P+Q) < 0.3).
    """
    z = np.asarray(z, dtype=np.float64)
    n_subj, n_vid = z.shape
    active = [i for i in range(n_subj) if not np.all(np.isnan(z[i]))]
    if len(active) < 3:
        raise ValueError("subject screening needs at least 3 subjects")

    upper = np.full(n_vid, np.nan)
    lower = np.full(n_vid, np.nan)
    for j in range(n_vid):
        col = z[active, j]
        col = col[~np.isnan(col)]
        if col.size < 2:
            continue
        mu = float(np.mean(col))
        sd = float(np.std(col, ddof=1))
        if sd == 0.0:
            continue  # unanimous video: nothing can be an outlier
        beta2 = _kurtosis(col)
        thr = 2.0 * sd if 2.0 <= beta2 <= 4.0 else math.sqrt(20.0) * sd
        upper[j] = mu + thr
        lower[j] = mu - thr

    rejected = []
    for i in active:
        row = z[i]
        valid = ~np.isnan(row) & ~np.isnan(upper)
        n = int(valid.sum())
        if n == 0:
            continue
        p = int(np.sum(row[valid] >= upper[valid]))
        q = int(np.sum(row[valid] <= lower[valid]))
        if p + q == 0:
            continue
        if (p + q) / n > 0.05 and abs(p - q) / (p + q) < 0.3:
            rejected.append(subjects[i])
    return tuple(rejected)


def compute_mos(z: np.ndarray, m: ScoreMatrix,
                rejected: Sequence[str] = ()) -> MosReport:
    """Map surviving z-scores onto [0, 100] and average per video."""
    z = np.asarray(z, dtype=np.float64)
    drop = set(rejected)
    keep = [i for i, s in enumerate(m.subjects)
            if s not in drop and not np.all(np.isnan(z[i]))]
    if not keep:
        raise ValueError("no subjects survive rejection")

    surviving = z[keep]
    zmin = float(np.nanmin(surviving))
    zmax = float(np.nanmax(surviving))
    span = zmax - zmin
    flags: Dict[str, object] = {}
    if span == 0.0:
        # All surviving opinions identical after standardization.
        scaled = np.full_like(surviving, 50.0)
        flags["degenerate_scale"] = True
    else:
        scaled = (surviving - zmin) / span * 100.0

    n_vid = len(m.videos)
    mos = np.full(n_vid, np.nan)
    se = np.zeros(n_vid)
    n_raters = np.zeros(n_vid, dtype=int)
    single_rater = False
    for j in range(n_vid):
        col = scaled[:, j]
        col = col[~np.isnan(col)]
        n_raters[j] = col.size
        if col.size == 0:
            continue
        mos[j] = float(np.mean(col))
        if col.size > 1:
            se[j] = float(np.std(col, ddof=1) / math.sqrt(col.size))
        else:
            single_rater = True
    if single_rater:
        flags["single_rater_videos"] = True

    return MosReport(
        videos=m.videos,
        mos=mos,
        std_error=se,
        ci95=1.96 * se,
        n_raters=n_raters,
        rejected_subjects=tuple(rejected),
        flags=flags,
    )


def process_scores(m: ScoreMatrix) -> MosReport:
    """Full pipeline: session z-scores, subject screening, rescaled MOS."""
    z, flagged = zscore_by_session(m)
    rejected = bt500_reject(z, m.subjects)
    report = compute_mos(z, m, rejected)
    if flagged:
        report.flags["zero_spread_subjects"] = list(flagged)
    return report
