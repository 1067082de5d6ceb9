"""Welfare comparison and fairness indices."""

import numpy as np


def _check_values(x):
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("need at least one value")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("values must be finite and non-negative")
    return x


def gini(x):
    """Gini coefficient from the pairwise absolute-difference double sum.

    The all-zero vector counts as perfectly equal (0).
    """
    x = _check_values(x)
    total = x.sum()
    if total == 0:
        return 0.0
    diffs = np.abs(x[:, None] - x[None, :]).sum()
    return float(diffs / (2 * x.size * total))


def jain(x):
    """Jain's index ``(sum x)^2 / (N * sum x^2)``; the all-zero vector gives 1."""
    x = _check_values(x)
    sq = np.dot(x, x)
    if sq == 0:
        return 1.0
    return float(x.sum() ** 2 / (x.size * sq))


def relative_sw_loss(alg_sw, opt_sw):
    """Percentage of the optimal social welfare lost, floored at 0."""
    if not opt_sw > 0:
        raise ValueError(f"optimal social welfare must be positive, got {opt_sw}")
    if alg_sw > opt_sw + 1e-9:
        raise ValueError(f"algorithm welfare {alg_sw} exceeds the optimum {opt_sw}")
    return max(0.0, 100.0 * (opt_sw - alg_sw) / opt_sw)


def mixed_outcome_values(allocations, instance):
    """Per-agent utility averaged over the given evaluation allocations."""
    allocations = list(allocations)
    if not allocations:
        raise ValueError("need at least one allocation")
    return np.mean([a.values(instance) for a in allocations], axis=0)


def stepwise_index_mean(allocations, instance, index=gini):
    """Mean of a fairness index computed separately on every allocation."""
    allocations = list(allocations)
    if not allocations:
        raise ValueError("need at least one allocation")
    return float(np.mean([index(a.values(instance)) for a in allocations]))
