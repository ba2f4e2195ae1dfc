"""Link-prediction scoring and metrics.

Labeled edges are scored by cosine similarity of their endpoint embeddings;
quality is summarized by AUC-ROC (rank-based, half credit for ties) and by
average precision computed over a stable descending-score order.  Score
vectors from different walk strategies over the same labeled set are
compared with Pearson correlation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .graph import LabeledEdgeSet
from .sgns import EmbeddingMatrix

log = logging.getLogger(__name__)


class EvalError(Exception):
    """Raised for undefined metric inputs (single class, constant vectors)."""


@dataclass
class ScoreVector:
    """Per-edge similarity scores aligned with a LabeledEdgeSet.

    ``n_zero_vector`` counts edges whose score had to be pinned to the
    minimum because an endpoint embedding was the zero vector.
    """

    scores: np.ndarray
    walk_id: str
    normalized: bool = False
    n_zero_vector: int = 0


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two nonzero vectors, in [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise EvalError("cosine undefined for the zero vector")
    return float(np.dot(a, b) / (na * nb))


def score_edges(emb: EmbeddingMatrix, labels: LabeledEdgeSet, walk_id: str = "") -> ScoreVector:
    """Raw cosine score per labeled pair, preserving the labeled-set order.

    Pairs touching a zero-vector embedding row (possible only for nodes the
    trainer never saw) are pinned to the minimum of the valid scores and
    counted in ``n_zero_vector``.
    """
    mat = np.asarray(emb.input, dtype=np.float64)
    if labels.u.max() >= mat.shape[0] or labels.v.max() >= mat.shape[0]:
        raise EvalError("labeled edge references a node with no embedding row")
    norms = np.linalg.norm(mat, axis=1)
    a = mat[labels.u]
    b = mat[labels.v]
    denom = norms[labels.u] * norms[labels.v]
    bad = denom == 0.0
    scores = np.empty(len(labels.label), dtype=np.float64)
    scores[~bad] = np.sum(a[~bad] * b[~bad], axis=1) / denom[~bad]
    n_bad = int(bad.sum())
    if n_bad:
        floor = scores[~bad].min() if n_bad < len(scores) else 0.0
        scores[bad] = floor
        log.warning(
            "%d of %d labeled edges scored against a zero embedding vector; "
            "pinned to the minimum score",
            n_bad,
            len(scores),
        )
    return ScoreVector(scores=scores, walk_id=walk_id, normalized=False,
                       n_zero_vector=n_bad)


def minmax_normalize(s: ScoreVector) -> ScoreVector:
    """Rescale scores to [0, 1]; an all-equal vector maps to all 0.5."""
    x = s.scores
    lo = x.min()
    hi = x.max()
    if hi == lo:
        out = np.full_like(x, 0.5)
    else:
        out = (x - lo) / (hi - lo)
    return replace(s, scores=out, normalized=True)


def _average_tied_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks ascending in score, ties sharing their average rank."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc_roc(labels, scores) -> float:
    """Probability a positive outranks a negative, half credit for ties."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int(np.sum(labels == 1))
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvalError("AUC-ROC needs both classes present")
    ranks = _average_tied_ranks(scores)
    rank_sum = ranks[labels == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auc_pr(labels, scores) -> float:
    """Average precision over positives at descending-score ranks.

    Ties are broken by original position: entries are ordered by a stable
    sort on descending score, so among equal scores earlier entries rank
    first.  No interpolation is applied.
    """
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int(np.sum(labels == 1))
    if n_pos == 0:
        raise EvalError("AUC-PR needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    hits = labels[order] == 1
    tp = np.cumsum(hits)
    precision = tp / np.arange(1, len(labels) + 1)
    return float(precision[hits].sum() / n_pos)


def pearson(x, y) -> float:
    """Sample Pearson correlation; errors on constant input."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y) or len(x) < 2:
        raise EvalError("pearson needs two equal-length vectors of size >= 2")
    xm = x - x.mean()
    ym = y - y.mean()
    vx = float(np.dot(xm, xm))
    vy = float(np.dot(ym, ym))
    if vx == 0.0 or vy == 0.0:
        raise EvalError("undefined correlation: constant input")
    # single sqrt of the product: identical inputs yield exactly 1.0
    return float(np.dot(xm, ym) / np.sqrt(vx * vy))


def correlation_matrix(score_table: dict[str, ScoreVector]) -> tuple[list[str], np.ndarray]:
    """Pairwise Pearson matrix over walk score vectors; NaN marks undefined cells.

    All vectors must be aligned to the same labeled edge set (equal length).
    """
    names = list(score_table.keys())
    k = len(names)
    lengths = {len(score_table[n].scores) for n in names}
    if len(lengths) > 1:
        raise EvalError("score vectors are not aligned to one labeled set")
    mat = np.eye(k, dtype=np.float64)
    for i in range(k):
        for j in range(i + 1, k):
            try:
                r = pearson(score_table[names[i]].scores, score_table[names[j]].scores)
            except EvalError:
                r = np.nan
            mat[i, j] = r
            mat[j, i] = r
    return names, mat


@dataclass
class Summary:
    """Across-graph medians: per-walk metrics plus the median correlation matrix."""

    walk_names: list[str]
    median_auc: dict[str, float]
    median_auc_pr: dict[str, float]
    corr_names: list[str]
    median_corr: np.ndarray


def aggregate_medians(
    metrics: dict[str, dict[str, tuple[float, float]]],
    correlations: dict[str, tuple[list[str], np.ndarray]],
) -> Summary:
    """Median AUC / AUC-PR per walk and median correlation per walk pair.

    ``metrics`` maps graph -> walk -> (auc, auc_pr); ``correlations`` maps
    graph -> (names, matrix).  Walks are ordered by descending median AUC
    (ties by name).  Correlation cells undefined everywhere stay NaN.
    """
    if not metrics:
        raise EvalError("no reports to aggregate")
    walk_names = sorted({w for per_graph in metrics.values() for w in per_graph})
    med_auc = {}
    med_pr = {}
    for w in walk_names:
        aucs = [m[w][0] for m in metrics.values() if w in m]
        prs = [m[w][1] for m in metrics.values() if w in m]
        med_auc[w] = float(np.median(aucs))
        med_pr[w] = float(np.median(prs))
    ordered = sorted(walk_names, key=lambda w: (-med_auc[w], w))

    corr_names: list[str] = []
    median_corr = np.empty((0, 0))
    if correlations:
        first = next(iter(correlations.values()))
        corr_names = first[0]
        stack = []
        for names, mat in correlations.values():
            if names != corr_names:
                raise EvalError("correlation matrices disagree on walk names")
            stack.append(mat)
        with np.errstate(all="ignore"):
            median_corr = np.nanmedian(np.stack(stack), axis=0)
    return Summary(
        walk_names=ordered,
        median_auc=med_auc,
        median_auc_pr=med_pr,
        corr_names=corr_names,
        median_corr=median_corr,
    )
