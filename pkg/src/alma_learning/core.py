"""Shared domain types: assignment instances, allocations and run configuration."""

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ._validation import check_agent, check_interest, check_utility_matrix

UNMATCHED = -1


def _sorted_ids(row, ids):
    # descending utility, ascending id on ties
    return tuple(sorted(ids, key=lambda r: (-row[r], r)))


@dataclass(frozen=True, eq=False)
class AssignmentInstance:
    """An N x R utility matrix with optional per-agent interest lists.

    Interest lists are stored in preference order (decreasing utility, ties
    by ascending resource id) whatever order they were given in. Without
    interest lists every agent is interested in every resource.
    """

    utility: np.ndarray
    interest: Optional[tuple] = None

    def __post_init__(self):
        u = check_utility_matrix(self.utility).copy()
        u.setflags(write=False)
        object.__setattr__(self, "utility", u)
        interest = check_interest(self.interest, *u.shape)
        if interest is not None:
            interest = tuple(_sorted_ids(u[n], ids) for n, ids in enumerate(interest))
        object.__setattr__(self, "interest", interest)

    @property
    def n_agents(self):
        return self.utility.shape[0]

    @property
    def n_resources(self):
        return self.utility.shape[1]

    def interest_set(self, agent):
        if self.interest is None:
            return range(self.n_resources)
        return self.interest[agent]

    def preference_lists(self):
        return [preference_order(self, n) for n in range(self.n_agents)]

    def to_dict(self):
        d = {
            "n_agents": self.n_agents,
            "n_resources": self.n_resources,
            "utility": [float(v) for v in self.utility.ravel()],
        }
        if self.interest is not None:
            d["interest"] = [list(ids) for ids in self.interest]
        return d

    @classmethod
    def from_dict(cls, d):
        n, r = int(d["n_agents"]), int(d["n_resources"])
        values = d["utility"]
        if len(values) != n * r:
            raise ValueError(f"utility has {len(values)} entries, expected {n}*{r}")
        return cls(np.asarray(values, dtype=np.float64).reshape(n, r), d.get("interest"))


def preference_order(instance, agent):
    """Resource ids of ``agent`` sorted by decreasing utility (ties by ascending id)."""
    agent = check_agent(agent, instance.n_agents)
    if instance.interest is not None:
        return list(instance.interest[agent])
    return list(_sorted_ids(instance.utility[agent], range(instance.n_resources)))


@dataclass(frozen=True)
class Allocation:
    """A partial matching; ``assignment[n]`` is a resource id or ``None``."""

    assignment: tuple
    social_welfare: float

    @classmethod
    def from_assignment(cls, instance, assignment):
        """Build from a sequence of resource ids, using ``None`` or -1 for unmatched."""
        clean = tuple(None if (a is None or a == UNMATCHED) else int(a) for a in assignment)
        if len(clean) != instance.n_agents:
            raise ValueError(f"assignment has {len(clean)} entries, expected {instance.n_agents}")
        return cls(clean, welfare(instance, clean))

    def as_array(self):
        return np.array([UNMATCHED if a is None else a for a in self.assignment], dtype=np.int64)

    def values(self, instance):
        """Per-agent attained utility (0 when unmatched)."""
        u = instance.utility
        return np.array([0.0 if r is None else u[n, r] for n, r in enumerate(self.assignment)])


def welfare(instance, assignment):
    u = instance.utility
    total = 0.0
    for n, r in enumerate(assignment):
        if r is not None and r != UNMATCHED:
            total += float(u[n, r])
    return total


def validate_allocation(instance, allocation):
    """Return ``None`` if ``allocation`` is feasible, else a description of the first violation."""
    assignment = allocation.assignment
    if len(assignment) != instance.n_agents:
        return f"allocation covers {len(assignment)} agents, instance has {instance.n_agents}"
    owner = {}
    for n, r in enumerate(assignment):
        if r is None:
            continue
        if not 0 <= r < instance.n_resources:
            return f"agent {n} assigned out-of-range resource {r}"
        if instance.interest is not None and r not in instance.interest[n]:
            return f"agent {n} assigned resource {r} outside its interest list"
        if r in owner:
            return f"resource {r} assigned to agents {owner[r]} and {n}"
        owner[r] = n
    expected = welfare(instance, assignment)
    if abs(expected - allocation.social_welfare) > 1e-12:
        return f"social welfare {allocation.social_welfare!r} differs from recomputed {expected!r}"
    return None


@dataclass(frozen=True)
class RunConfig:
    """Hyper-parameters for training/evaluating the learner.

    ``round_cap=None`` means ``10 * R + 100000`` for the instance at hand;
    a contest between two agents whose back-off probability is
    ``epsilon ** beta`` lasts about ``1 / (2 * epsilon ** beta)`` rounds.
    """

    seed: int = 0
    training_steps: int = 512
    eval_steps: int = 32
    alpha: float = 0.1
    beta: float = 2.0
    epsilon: float = 0.01
    history_len: int = 20
    round_cap: Optional[int] = None

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit non-negative integer")
        if self.training_steps < 0 or self.eval_steps < 0:
            raise ValueError("training_steps and eval_steps must be >= 0")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if not 0 < self.epsilon < 0.5:
            raise ValueError("epsilon must be in (0, 0.5)")
        if self.history_len < 1:
            raise ValueError("history_len must be >= 1")
        if self.round_cap is not None and self.round_cap < 1:
            raise ValueError("round_cap must be >= 1")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def cap_for(self, n_resources):
        return self.round_cap if self.round_cap is not None else 10 * n_resources + 100_000


def save_instance(instance, path):
    Path(path).write_text(json.dumps(instance.to_dict(), indent=1) + "\n")


def load_instance(path):
    return AssignmentInstance.from_dict(json.loads(Path(path).read_text()))
