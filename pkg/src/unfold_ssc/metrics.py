"""Clustering agreement metrics: accuracy, NMI, and Cohen's kappa.

Predicted and true labelings use arbitrary non-negative integer ids; all
three metrics are invariant to relabeling. Accuracy and kappa align the
two labelings with an optimal assignment on the contingency table first.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def _as_labels(x, name: str) -> np.ndarray:
    arr = np.asarray(x)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty 1-D array")
    out = np.asarray(np.rint(arr), dtype=np.int64)
    if not np.array_equal(np.asarray(arr, dtype=np.float64), out.astype(np.float64)):
        raise ValueError(f"{name} must hold integers")
    if (out < 0).any():
        raise ValueError(f"{name} must be non-negative")
    return out


def contingency(pred: np.ndarray, truth: np.ndarray):
    """Count table of (pred cluster, true class) co-occurrences.

    Returns (table, pred_values, truth_values) with rows/columns ordered by
    ascending label value.
    """
    pred = _as_labels(pred, "pred")
    truth = _as_labels(truth, "truth")
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape[0]} vs {truth.shape[0]}")
    pv, pi = np.unique(pred, return_inverse=True)
    tv, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((len(pv), len(tv)), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table, pv, tv


def _padded_contingency(pred, truth):
    table, pv, tv = contingency(pred, truth)
    k = max(len(pv), len(tv))
    padded = np.zeros((k, k), dtype=np.int64)
    padded[: len(pv), : len(tv)] = table
    return padded, pv, tv


def hungarian(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost perfect assignment on a square matrix.

    Returns the column assigned to each row. Among all optimal assignments
    the lexicographically smallest column sequence is returned, so equal-
    cost solutions resolve the same way on every platform (costs within
    1e-9 relative of optimal count as ties).
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError("cost matrix must be square")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    n = cost.shape[0]

    def optimum(sub: np.ndarray) -> float:
        if sub.size == 0:
            return 0.0
        rows, cols = linear_sum_assignment(sub)
        return float(sub[rows, cols].sum())

    remaining = list(range(n))
    assign = np.empty(n, dtype=np.int64)
    target = optimum(cost)
    for i in range(n):
        tol = 1e-9 * (1.0 + abs(target))
        for j in remaining:
            rest = [c for c in remaining if c != j]
            total = cost[i, j] + optimum(cost[np.ix_(range(i + 1, n), rest)])
            if total <= target + tol:
                assign[i] = j
                remaining.remove(j)
                target = target - cost[i, j]
                break
        else:
            raise AssertionError("assignment search lost the optimum")
    return assign


def _best_match(pred, truth):
    padded, pv, tv = _padded_contingency(pred, truth)
    assign = hungarian(-padded.astype(np.float64))
    return padded, pv, tv, assign


def accuracy(pred, truth) -> float:
    """Fraction of samples matched under the best cluster-to-class bijection."""
    padded, _, _, assign = _best_match(pred, truth)
    matched = padded[np.arange(padded.shape[0]), assign].sum()
    return float(matched) / padded.sum()


def nmi(pred, truth) -> float:
    """Mutual information normalized by the geometric mean of the entropies.

    Natural log, 0 * log 0 = 0. If either labeling has zero entropy the
    value is 1.0 when the two partitions are identical and 0.0 otherwise.
    """
    table, _, _ = contingency(pred, truth)
    n = table.sum()
    pi = table.sum(axis=1) / n
    pj = table.sum(axis=0) / n
    hu = -float(np.sum(pi[pi > 0] * np.log(pi[pi > 0])))
    hv = -float(np.sum(pj[pj > 0] * np.log(pj[pj > 0])))
    if hu == 0.0 or hv == 0.0:
        one_per_row = np.all((table > 0).sum(axis=1) == 1)
        one_per_col = np.all((table > 0).sum(axis=0) == 1)
        identical = table.shape[0] == table.shape[1] and one_per_row and one_per_col
        return 1.0 if identical else 0.0
    pij = table / n
    mask = pij > 0
    outer = np.outer(pi, pj)
    info = float(np.sum(pij[mask] * np.log(pij[mask] / outer[mask])))
    return float(min(1.0, max(0.0, info / np.sqrt(hu * hv))))


def kappa(pred, truth) -> float:
    """Cohen's kappa after remapping clusters through the accuracy-optimal bijection.

    Predicted clusters assigned to a padding column (no real class) are
    mapped to fresh ids that can never match, so they count as disagreement
    in both the observed and expected terms.
    """
    padded, pv, tv, assign = _best_match(pred, truth)
    pred = _as_labels(pred, "pred")
    truth = _as_labels(truth, "truth")
    sentinel = int(tv.max()) + 1
    mapping = {}
    for row, col in enumerate(assign):
        if row >= len(pv):
            break
        if col < len(tv):
            mapping[int(pv[row])] = int(tv[col])
        else:
            mapping[int(pv[row])] = sentinel
            sentinel += 1
    mapped = np.array([mapping[int(p)] for p in pred], dtype=np.int64)
    n = mapped.shape[0]
    p_o = float(np.mean(mapped == truth))
    values = np.union1d(mapped, truth)
    cm = np.array([np.sum(mapped == v) for v in values], dtype=np.float64) / n
    ct = np.array([np.sum(truth == v) for v in values], dtype=np.float64) / n
    p_e = float(np.sum(cm * ct))
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def report(pred, truth) -> dict:
    """All three metrics plus sizes, ready for JSON serialization."""
    table, pv, tv = contingency(pred, truth)
    return {
        "acc": accuracy(pred, truth),
        "nmi": nmi(pred, truth),
        "kappa": kappa(pred, truth),
        "n": int(table.sum()),
        "k_pred": int(len(pv)),
        "k_true": int(len(tv)),
    }
