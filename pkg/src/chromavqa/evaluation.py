"""Correlation and significance statistics for quality model evaluation.

Spearman correlation uses fractional ranks with average ties. The Pearson
correlation of a model is computed after fitting a monotone 4-parameter
logistic mapping from predictions to subjective scores (damped Gauss-Newton
least squares). Correlations aggregate across datasets through Fisher's
variance-stabilizing z-transform, which also drives the pairwise significance
test with per-dataset variance 1/(n-3) and a two-tailed 95% normal critical
value.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

BETTER, WORSE, SAME = "1", "0", "-"

_CRITICAL_95 = 1.959963984540054
_R_CLAMP = 0.999999


@dataclass
class LogisticFit:
    beta1: float
    beta2: float
    beta3: float
    beta4: float
    residual_sigma: float
    converged: bool = True

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.beta2 + (self.beta1 - self.beta2) / (
            1.0 + np.exp(-(x - self.beta3) / abs(self.beta4)))


@dataclass
class DatasetResult:
    name: str
    srocc: float
    plcc: float
    n: int
    fit: Optional[LogisticFit] = None


@dataclass
class EvalReport:
    datasets: List[DatasetResult]
    overall_srocc: float
    overall_plcc: float
    flags: Dict[str, object] = field(default_factory=dict)


def _check_pair(x, y, minimum: int):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1D vectors of equal length")
    if len(x) < minimum:
        raise ValueError(f"need at least {minimum} points")
    return x, y


def pearson(x, y) -> float:
    x, y = _check_pair(x, y, 2)
    xd = x - x.mean()
    yd = y - y.mean()
    denom = math.sqrt(float(np.sum(xd * xd)) * float(np.sum(yd * yd)))
    if denom == 0.0:
        raise ValueError("correlation undefined for constant input")
    return float(np.sum(xd * yd)) / denom


def fractional_ranks(x) -> np.ndarray:
    """1-based ranks, ties replaced by their average rank."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def srocc(x, y) -> float:
    """Spearman rank-order correlation."""
    x, y = _check_pair(x, y, 4)
    return pearson(fractional_ranks(x), fractional_ranks(y))


def _lm_logistic(x: np.ndarray, y: np.ndarray, beta0: np.ndarray,
                 max_iter: int, tol: float):
    def residuals(b):
        e = 1.0 + np.exp(-(x - b[2]) / abs(b[3]))
        return b[1] + (b[0] - b[1]) / e - y

    def jacobian(b):
        s = 1.0 / (1.0 + np.exp(-(x - b[2]) / abs(b[3])))
        d_amp = s * (1.0 - s) * (b[0] - b[1])
        j = np.empty((len(x), 4))
        j[:, 0] = s
        j[:, 1] = 1.0 - s
        j[:, 2] = -d_amp / abs(b[3])
        j[:, 3] = -d_amp * (x - b[2]) / (b[3] * abs(b[3]))
        return j

    beta = beta0.copy()
    lam = 1e-3
    err = residuals(beta)
    sse = float(err @ err)
    # Residuals this far below the data scale count as a perfect fit; the
    # near-affine limit otherwise improves geometrically forever.
    sse_floor = (1e-6 * (float(np.ptp(y)) or 1.0)) ** 2 * len(y)
    converged = sse <= sse_floor
    for _ in range(max_iter):
        if converged:
            break
        j = jacobian(beta)
        g = j.T @ err
        h = j.T @ j
        try:
            step = np.linalg.solve(h + lam * np.diag(np.diag(h) + 1e-12), -g)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        cand = beta + step
        if cand[3] == 0.0:
            cand[3] = 1e-12
        cand_err = residuals(cand)
        cand_sse = float(cand_err @ cand_err)
        if cand_sse <= sse:
            improvement = sse - cand_sse
            beta, err, sse = cand, cand_err, cand_sse
            lam = max(lam * 0.5, 1e-12)
            if improvement <= tol * (sse + tol) or sse <= sse_floor:
                converged = True
                break
        else:
            lam *= 10.0
            if lam > 1e12:
                break
    return beta, sse, converged


def fit_logistic(pred, mos, max_iter: int = 1000,
                 tol: float = 1e-12) -> LogisticFit:
    """Least-squares fit of b2 + (b1-b2) / (1 + exp(-(x-b3)/|b4|)).

    The damped iteration starts from the usual convention (b1/b2 at the score
    extremes, b3 at the median prediction, b4 at the prediction spread); a few
    wider b4 starts guard against stalling short of the near-affine regime.
    Returns with converged=False if every start stalls.
    """
    x, y = _check_pair(pred, mos, 5)
    spread = float(np.std(x)) or 1.0
    hi, lo = float(np.max(y)), float(np.min(y))
    starts = [np.array([hi, lo, float(np.median(x)), scale * spread])
              for scale in (1.0, 4.0, 16.0)]

    best = None
    for beta0 in starts:
        beta, sse, converged = _lm_logistic(x, y, beta0, max_iter, tol)
        if best is None or sse < best[1]:
            best = (beta, sse, converged)
    beta, _, converged = best

    fit = LogisticFit(beta1=float(beta[0]), beta2=float(beta[1]),
                      beta3=float(beta[2]), beta4=float(beta[3]),
                      residual_sigma=0.0, converged=converged)
    sigma = float(np.std(y - fit(x)))
    fit.residual_sigma = sigma
    return fit


def plcc_logistic(pred, mos) -> Tuple[float, LogisticFit]:
    """Pearson correlation after the monotone logistic mapping.

    Falls back to the raw Pearson correlation (flagged on the fit) when the
    fit fails to converge or collapses to a constant curve.
    """
    x, y = _check_pair(pred, mos, 5)
    if np.ptp(y) == 0.0:
        raise ValueError("correlation undefined for constant scores")
    fit = fit_logistic(x, y)
    mapped = fit(x)
    raw = pearson(x, y)
    if np.ptp(mapped) > 0.0:
        through_fit = pearson(mapped, y)
        if fit.converged or through_fit >= raw:
            return through_fit, fit
    fallback = LogisticFit(fit.beta1, fit.beta2, fit.beta3, fit.beta4,
                           residual_sigma=fit.residual_sigma, converged=False)
    return raw, fallback


def fisher_z(r: float) -> float:
    return math.atanh(r)


def fisher_overall(values: Sequence[float],
                   weights: Optional[Sequence[float]] = None) -> float:
    """Mean correlation through the z-transform; optionally weighted."""
    rs = np.asarray(values, dtype=np.float64)
    if len(rs) == 0:
        raise ValueError("no correlations to aggregate")
    if np.any(np.abs(rs) > 1.0):
        raise ValueError("correlations must lie in [-1, 1]")
    if np.any(np.abs(rs) >= 1.0):
        warnings.warn("correlation of magnitude 1 clamped for the z-transform",
                      RuntimeWarning, stacklevel=2)
    clamped = np.clip(rs, -_R_CLAMP, _R_CLAMP)
    z = np.arctanh(clamped)
    if weights is None:
        zbar = float(np.mean(z))
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != rs.shape or np.sum(w) <= 0:
            raise ValueError("weights must match values and sum to > 0")
        zbar = float(np.sum(w * z) / np.sum(w))
    return math.tanh(zbar)


def compare_correlations(r1: float, n1: int, r2: float, n2: int) -> str:
    """Pairwise z-test on Fisher-transformed correlations at 95% two-tailed."""
    if n1 <= 3 or n2 <= 3:
        raise ValueError("sample sizes must exceed 3")
    z1 = math.atanh(min(max(r1, -_R_CLAMP), _R_CLAMP))
    z2 = math.atanh(min(max(r2, -_R_CLAMP), _R_CLAMP))
    sigma = math.sqrt(1.0 / (n1 - 3) + 1.0 / (n2 - 3))
    stat = (z1 - z2) / sigma
    if stat > _CRITICAL_95:
        return BETTER
    if stat < -_CRITICAL_95:
        return WORSE
    return SAME


def significance_matrix(correlations: Sequence[float],
                        sample_sizes: Sequence[int]) -> List[List[str]]:
    """All-pairs significance labels; antisymmetric by construction."""
    if len(correlations) != len(sample_sizes):
        raise ValueError("need one sample size per correlation")
    k = len(correlations)
    return [[compare_correlations(correlations[i], sample_sizes[i],
                                  correlations[j], sample_sizes[j])
             for j in range(k)] for i in range(k)]


def evaluate_datasets(groups: Dict[str, Tuple[Sequence[float], Sequence[float]]]) -> EvalReport:
    """Per-dataset SROCC/PLCC plus Fisher-aggregated overall values.

    groups maps dataset name -> (predictions, mos).
    """
    results = []
    for name in groups:
        pred, mos = groups[name]
        plcc, fit = plcc_logistic(pred, mos)
        results.append(DatasetResult(
            name=name, srocc=srocc(pred, mos), plcc=plcc,
            n=len(pred), fit=fit))
    if not results:
        raise ValueError("no datasets to evaluate")
    if len(results) == 1:
        overall_s, overall_p = results[0].srocc, results[0].plcc
    else:
        overall_s = fisher_overall([r.srocc for r in results])
        overall_p = fisher_overall([r.plcc for r in results])
    flags: Dict[str, object] = {}
    if any(not r.fit.converged for r in results):
        flags["logistic_fallback"] = [r.name for r in results
                                      if not r.fit.converged]
    return EvalReport(datasets=results, overall_srocc=overall_s,
                      overall_plcc=overall_p, flags=flags)
