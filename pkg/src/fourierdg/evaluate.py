"""Metrics and experiment harnesses.

AUROC uses the Mann-Whitney rank statistic with midranks for ties; the
ROC sweep is built from integer tie-group counts so its trapezoidal area
reproduces the rank statistic exactly.  The leave-one-domain-out harness
refits preprocessing inside every fold, so held-out samples can never
touch normalization statistics or training.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .data import (
    GeneMatrix,
    SampleMeta,
    lodo_split,
    match_metadata,
    select_hvg,
    subset_samples,
    zscore_fit_apply,
)
from .errors import ConfigurationError, MetricError, ParameterError, ReportError
from .model import Checkpoint, GrlConfig
from .train import EpochLog, TrainConfig, config_echo, fit, predict


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

@dataclass
class RocResult:
    auroc: float
    points: list[tuple[float, float]]


def _check_binary(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise MetricError("scores and labels must have equal length")
    if not ((labels == 1).any() and (labels != 1).any()):
        raise MetricError("AUROC needs both classes present")
    return scores, (labels == 1)


def _midranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks, ties receiving the mean of their positions."""
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(x.size, dtype=np.float64)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i: j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auroc(scores, labels) -> float:
    """P(score of a random positive > score of a random negative), ties
    counted half."""
    scores, pos = _check_binary(scores, labels)
    ranks = _midranks(scores)
    n_pos = int(pos.sum())
    n_neg = scores.size - n_pos
    return float(
        (ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    )


def roc_points(scores, labels) -> RocResult:
    """Threshold sweep over distinct scores, descending.

    Consecutive collinear points are merged (exactly, on the integer
    tie-group counts), so e.g. a perfectly separating score list yields
    the three corners (0,0), (0,1), (1,1).
    """
    scores, pos = _check_binary(scores, labels)
    order = np.argsort(-scores, kind="mergesort")
    s_sorted = scores[order]
    p_sorted = pos[order]
    counts: list[tuple[int, int]] = [(0, 0)]
    tp = fp = 0
    i = 0
    n = scores.size
    while i < n:
        j = i
        while j + 1 < n and s_sorted[j + 1] == s_sorted[i]:
            j += 1
        tp += int(p_sorted[i: j + 1].sum())
        fp += (j - i + 1) - int(p_sorted[i: j + 1].sum())
        counts.append((fp, tp))
        i = j + 1
    merged = [counts[0]]
    for pt in counts[1:]:
        while len(merged) >= 2:
            (x0, y0), (x1, y1) = merged[-2], merged[-1]
            if (x1 - x0) * (pt[1] - y1) == (y1 - y0) * (pt[0] - x1):
                merged.pop()
            else:
                break
        merged.append(pt)
    n_pos = int(pos.sum())
    n_neg = n - n_pos
    points = [(f / n_neg, t / n_pos) for f, t in merged]
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return RocResult(auroc=area, points=points)


def top2_components(features) -> tuple[np.ndarray, np.ndarray]:
    """Leading two principal directions of the sample covariance.

    Power iteration with deflation (tolerance 1e-10, deterministic start
    vector); signs are fixed so the largest-magnitude loading is positive.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 3:
        raise ParameterError("need at least 3 samples")
    xc = x - x.mean(axis=0)
    cov = xc.T @ xc / x.shape[0]
    v1, lam1 = _power_iteration(cov)
    deflated = cov - lam1 * np.outer(v1, v1)
    v2, _ = _power_iteration(deflated, ortho=v1)
    return v1, v2


def embed_2d(features) -> np.ndarray:
    """Mean-centered projection onto the top-2 principal components."""
    x = np.asarray(features, dtype=np.float64)
    v1, v2 = top2_components(x)
    xc = x - x.mean(axis=0)
    return np.column_stack([xc @ v1, xc @ v2])


def _power_iteration(
    mat: np.ndarray,
    ortho: Optional[np.ndarray] = None,
    tol: float = 1e-10,
    max_iter: int = 10000,
) -> tuple[np.ndarray, float]:
    d = mat.shape[0]
    v = np.random.default_rng(0).standard_normal(d)
    if ortho is not None:
        v = v - (v @ ortho) * ortho
    norm = np.linalg.norm(v)
    if norm < 1e-300:
        v = _fallback_direction(d, ortho)
    else:
        v = v / norm
    lam = 0.0
    for _ in range(max_iter):
        w = mat @ v
        if ortho is not None:
            w = w - (w @ ortho) * ortho
        norm = np.linalg.norm(w)
        if norm < 1e-300:
            # numerically zero residual: any unit direction (orthogonal to
            # the prior component) carries ~zero variance
            v = _fallback_direction(d, ortho)
            lam = 0.0
            break
        w = w / norm
        converged = 1.0 - abs(w @ v) <= tol
        v, lam = w, norm
        if converged:
            break
    k = int(np.argmax(np.abs(v)))
    if v[k] < 0:
        v = -v
    return v, lam


def _fallback_direction(d: int, ortho: Optional[np.ndarray]) -> np.ndarray:
    idx = 0 if ortho is None else int(np.argmin(np.abs(ortho)))
    e = np.zeros(d)
    e[idx] = 1.0
    if ortho is not None:
        e = e - (e @ ortho) * ortho
    return e / np.linalg.norm(e)


def feature_ic50_r2(features, ic50) -> float:
    """In-sample R^2 of a ridge-stabilized linear fit (intercept included,
    ridge 1e-8 applied unconditionally)."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(ic50, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] != y.size:
        raise ParameterError("features rows must match ic50 length")
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise MetricError("ic50 has zero variance; R^2 undefined")
    design = np.column_stack([np.ones(y.size), x])
    gram = design.T @ design + 1e-8 * np.eye(design.shape[1])
    beta = np.linalg.solve(gram, design.T @ y)
    resid = y - design @ beta
    return 1.0 - float((resid @ resid)) / ss_tot


# ---------------------------------------------------------------------------
# Leave-one-domain-out harness
# ---------------------------------------------------------------------------

@dataclass
class DomainResult:
    domain: str
    n_test: int
    n_pos: int
    n_neg: int
    roc: RocResult


@dataclass
class LodoReport:
    entries: list[DomainResult]
    mean_auroc: float


@dataclass
class FoldResult:
    domain: str
    checkpoint: Checkpoint
    logs: list[EpochLog]
    scores: np.ndarray
    labels: np.ndarray
    roc: RocResult


def run_fold(
    gm: GeneMatrix,
    metas: Sequence[SampleMeta],
    held_out_domain: str,
    cfg: TrainConfig,
    hvg: Optional[int] = None,
) -> FoldResult:
    """Train with one domain held out and score that domain.

    Gene selection and standardization are fit on the training rows only;
    the held-out rows are then pushed through :func:`predict` against the
    fold checkpoint, exactly as an external dataset would be.
    """
    metas = match_metadata(gm, metas)
    train_idx, test_idx = lodo_split(metas, held_out_domain)
    gm_train = subset_samples(gm, train_idx)
    gm_test = subset_samples(gm, test_idx)
    if hvg is not None:
        gm_train = select_hvg(gm_train, hvg)
    gm_train, stats = zscore_fit_apply(gm_train)
    metas_train = [metas[i] for i in train_idx]
    params, logs = fit(gm_train, metas_train, cfg)
    ckpt = Checkpoint(
        params=params,
        stats=stats,
        grl=GrlConfig(cfg.grl_coefficient),
        train_config=config_echo(cfg),
        domains=sorted({m.domain for m in metas_train}),
    )
    scores = predict(gm_test, ckpt)
    labels = np.array([metas[i].response for i in test_idx], dtype=np.int64)
    return FoldResult(
        domain=held_out_domain,
        checkpoint=ckpt,
        logs=logs,
        scores=scores,
        labels=labels,
        roc=roc_points(scores, labels),
    )


def eligible_domains(
    metas: Sequence[SampleMeta], min_test_per_class: int
) -> list[str]:
    """Domains with at least min_test_per_class samples of each response
    class; the rest stay in training but are never held out."""
    domains = sorted({m.domain for m in metas})
    out = []
    for d in domains:
        n_pos = sum(1 for m in metas if m.domain == d and m.response == 1)
        n_neg = sum(1 for m in metas if m.domain == d and m.response == 0)
        if n_pos >= min_test_per_class and n_neg >= min_test_per_class:
            out.append(d)
    return out


def lodo_run(
    gm: GeneMatrix,
    metas: Sequence[SampleMeta],
    cfg: TrainConfig,
    min_test_per_class: int = 3,
    hvg: Optional[int] = None,
    jobs: int = 1,
) -> LodoReport:
    """Hold out each eligible domain in turn; report per-domain ROC."""
    metas = match_metadata(gm, metas)
    if any(m.response is None for m in metas):
        raise ConfigurationError(
            "all responses must be set before LODO; binarize ic50 first"
        )
    if len({m.domain for m in metas}) < 2:
        raise ConfigurationError("LODO needs at least 2 domains")
    targets = eligible_domains(metas, min_test_per_class)
    if not targets:
        raise ReportError(
            f"no domain has {min_test_per_class}+ samples of each class"
        )

    def one(domain):
        return run_fold(gm, metas, domain, cfg, hvg)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            folds = list(pool.map(one, targets))
    else:
        folds = [one(d) for d in targets]
    entries = [
        DomainResult(
            domain=f.domain,
            n_test=int(f.labels.size),
            n_pos=int((f.labels == 1).sum()),
            n_neg=int((f.labels == 0).sum()),
            roc=f.roc,
        )
        for f in folds
    ]
    mean_auroc = float(np.mean([e.roc.auroc for e in entries]))
    return LodoReport(entries=entries, mean_auroc=mean_auroc)


# ---------------------------------------------------------------------------
# FAAC ablation
# ---------------------------------------------------------------------------

@dataclass
class AblationRow:
    seed: int
    faac_on: bool
    domain: str
    auroc: float


@dataclass
class AblationResult:
    rows: list[AblationRow]
    mean_on: float
    mean_off: float
    delta: float
    per_domain_delta: dict[str, float]


def ablate_faac(
    gm: GeneMatrix,
    metas: Sequence[SampleMeta],
    cfg: TrainConfig,
    seeds: Sequence[int],
    min_test_per_class: int = 3,
    hvg: Optional[int] = None,
    jobs: int = 1,
) -> AblationResult:
    """Run the LODO harness with the clustering constraint on and off for
    each seed and compare mean held-out AUROC."""
    if len(seeds) < 2:
        raise ParameterError("ablation needs at least 2 seeds")
    rows: list[AblationRow] = []
    for seed in seeds:
        for faac_on in (True, False):
            run_cfg = replace(cfg, seed=seed, faac_enabled=faac_on)
            report = lodo_run(gm, metas, run_cfg, min_test_per_class, hvg, jobs)
            rows.extend(
                AblationRow(seed, faac_on, e.domain, e.roc.auroc)
                for e in report.entries
            )
    on = [r.auroc for r in rows if r.faac_on]
    off = [r.auroc for r in rows if not r.faac_on]
    domains = sorted({r.domain for r in rows})
    per_domain = {
        d: float(
            np.mean([r.auroc for r in rows if r.faac_on and r.domain == d])
            - np.mean([r.auroc for r in rows if not r.faac_on and r.domain == d])
        )
        for d in domains
    }
    mean_on = float(np.mean(on))
    mean_off = float(np.mean(off))
    return AblationResult(
        rows=rows,
        mean_on=mean_on,
        mean_off=mean_off,
        delta=mean_on - mean_off,
        per_domain_delta=per_domain,
    )


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def write_roc_csv(path, roc: RocResult):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("fpr,tpr\n")
        for fpr, tpr in roc.points:
            fh.write(f"{float(fpr)!r},{float(tpr)!r}\n")


def write_report_csv(path, report: LodoReport):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("domain,n_test,n_pos,n_neg,auroc\n")
        for e in report.entries:
            fh.write(
                f"{e.domain},{e.n_test},{e.n_pos},{e.n_neg},{float(e.roc.auroc)!r}\n"
            )
        total = sum(e.n_test for e in report.entries)
        pos = sum(e.n_pos for e in report.entries)
        neg = sum(e.n_neg for e in report.entries)
        fh.write(f"ALL,{total},{pos},{neg},{float(report.mean_auroc)!r}\n")


def write_ablation_csv(path, result: AblationResult):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("seed,faac,domain,auroc\n")
        for r in result.rows:
            fh.write(f"{r.seed},{int(r.faac_on)},{r.domain},{float(r.auroc)!r}\n")


def write_embedding_csv(path, sample_ids, coords, labels):
    coords = np.asarray(coords, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("sample_id,x,y,label\n")
        for sid, (x, y), lab in zip(sample_ids, coords, labels):
            fh.write(f"{sid},{float(x)!r},{float(y)!r},{lab}\n")
