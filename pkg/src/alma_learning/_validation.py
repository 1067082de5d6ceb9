"""Input validation helpers shared by the allocators and the functional API."""

from numbers import Integral

import numpy as np
from sklearn.utils import check_array


def check_utility_matrix(X, name="utility"):
    """Return ``X`` as a 2-D float64 array with every entry in [0, 1]."""
    X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_min_samples=1,
                    ensure_min_features=1, input_name=name)
    if X.min() < 0.0 or X.max() > 1.0:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return X


def check_interest(interest, n_agents, n_resources):
    """Validate optional per-agent interest lists (resource id subsets)."""
    if interest is None:
        return None
    if len(interest) != n_agents:
        raise ValueError(
            f"interest has {len(interest)} lists, expected one per agent ({n_agents})")
    out = []
    for n, ids in enumerate(interest):
        ids = [int(r) for r in ids]
        if any(r < 0 or r >= n_resources for r in ids):
            raise ValueError(f"interest list of agent {n} has a resource id outside [0, {n_resources})")
        if len(set(ids)) != len(ids):
            raise ValueError(f"interest list of agent {n} contains duplicates")
        out.append(tuple(ids))
    return tuple(out)


def check_seed(seed):
    """Accept ``None`` or a non-negative integer seed; return a Python int."""
    if seed is None:
        return int(np.random.SeedSequence().entropy % (1 << 63))
    if isinstance(seed, (Integral, np.integer)) and not isinstance(seed, bool) and seed >= 0:
        return int(seed)
    raise ValueError(f"seed must be a non-negative integer or None, got {seed!r}")


def check_agent(agent, n_agents):
    if not isinstance(agent, (Integral, np.integer)) or not 0 <= agent < n_agents:
        raise ValueError(f"agent id {agent!r} out of range [0, {n_agents})")
    return int(agent)
