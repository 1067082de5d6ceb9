"""Reference solvers: exact maximum-weight matching, exhaustive oracle and Greedy."""

from functools import lru_cache
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._validation import check_seed
from .core import UNMATCHED, Allocation

BRUTE_FORCE_MAX = 9


def _interest_weights(instance):
    """Utility matrix with non-interest pairs removed, plus the allowed mask."""
    u = np.array(instance.utility)
    allowed = np.ones(u.shape, dtype=bool)
    if instance.interest is not None:
        allowed[:] = False
        for n, ids in enumerate(instance.interest):
            allowed[n, list(ids)] = True
        u[~allowed] = 0.0
    return u, allowed


def hungarian(instance):
    """Maximum social-welfare allocation (rectangular instances allowed)."""
    u, allowed = _interest_weights(instance)
    rows, cols = linear_sum_assignment(u, maximize=True)
    assignment = np.full(instance.n_agents, UNMATCHED, dtype=np.int64)
    keep = allowed[rows, cols]
    assignment[rows[keep]] = cols[keep]
    return Allocation.from_assignment(instance, assignment)


@lru_cache(maxsize=None)
def _perms(n, k):
    return np.array(list(permutations(range(n), k)), dtype=np.int8).reshape(-1, k)


def brute_force(instance):
    """Exhaustive optimum over all injective agent/resource pairings.

    Only for instances with at most nine agents and nine resources.
    """
    n, r = instance.n_agents, instance.n_resources
    if n > BRUTE_FORCE_MAX or r > BRUTE_FORCE_MAX:
        raise ValueError(f"brute_force supports at most {BRUTE_FORCE_MAX} agents and resources, "
                         f"got {n}x{r}")
    u, allowed = _interest_weights(instance)
    # utilities are non-negative, so some maximum-size matching is optimal
    if n <= r:
        perms = _perms(r, n)
        totals = u[np.arange(n), perms].sum(axis=1)
        best = perms[int(np.argmax(totals))].astype(np.int64)
        assignment = best
    else:
        perms = _perms(n, r)
        totals = u.T[np.arange(r), perms].sum(axis=1)
        best = perms[int(np.argmax(totals))]
        assignment = np.full(n, UNMATCHED, dtype=np.int64)
        assignment[best] = np.arange(r)
    matched = assignment >= 0
    idx = np.flatnonzero(matched)
    assignment[idx[~allowed[idx, assignment[idx]]]] = UNMATCHED
    return Allocation.from_assignment(instance, assignment)


def greedy(instance, seed=None):
    """Visit agents in random order; each takes its best still-free resource."""
    rng = np.random.default_rng(check_seed(seed))
    order = rng.permutation(instance.n_agents)
    taken = np.zeros(instance.n_resources, dtype=bool)
    assignment = np.full(instance.n_agents, UNMATCHED, dtype=np.int64)
    prefs = instance.preference_lists()
    for a in order:
        for res in prefs[a]:
            if not taken[res]:
                taken[res] = True
                assignment[a] = res
                break
    return Allocation.from_assignment(instance, assignment)
