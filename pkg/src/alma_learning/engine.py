"""One ALMA stage game: synchronous access / back-off / monitor rounds.

Agents are described by an :class:`Arena`: for every agent the list of
resources it is interested in, in preference order, and the matching
utilities. The conflict rule is either unit capacity (two agents clash iff
they target the same resource) or interval conflicts (the meeting domain:
two events clash iff they share a participant and their time intervals
``[start, start + length)`` overlap).

Within a round every unconverged agent either bids on the resource its
strategy points at or, if it yielded, monitors the next resource of its
preference list. Bids are collected first; a bidder that clashes with
another bidder or with a holder backs off with probability ``P(loss)``,
a bidder with no clash acquires the resource and stops. Monitoring agents
then observe the holder state produced by this round's acquisitions.
Holders never release a resource, so an agent that finds its whole list
taken stops unmatched.

The numba kernels here are also driven by :mod:`alma_learning.learning`
for whole training runs.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .core import UNMATCHED, AssignmentInstance

POWER = 0
LOGISTIC = 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@dataclass(frozen=True)
class BackoffModel:
    """Back-off probability as a function of the switching loss.

    ``power``: ``P = f(loss) ** beta`` with ``f`` clamped into
    ``[epsilon, 1 - epsilon]``. ``logistic``: ``P = 1 / (1 + exp(-gamma *
    (0.5 - loss)))``; ``beta`` is not applied.
    """

    variant: str = "power"
    beta: float = 2.0
    epsilon: float = 0.01
    gamma: float = 15.72

    def __post_init__(self):
        if self.variant not in ("power", "logistic"):
            raise ValueError(f"unknown back-off variant {self.variant!r}")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if not 0 < self.epsilon < 0.5:
            raise ValueError("epsilon must be in (0, 0.5)")

    @classmethod
    def power(cls, beta=2.0, epsilon=0.01):
        return cls("power", beta=beta, epsilon=epsilon)

    @classmethod
    def logistic(cls, gamma=15.72):
        return cls("logistic", gamma=gamma)

    @property
    def kind(self):
        return POWER if self.variant == "power" else LOGISTIC


@numba.njit(cache=True, nogil=True)
def _backoff(kind, beta, eps, gamma, loss):
    if kind == LOGISTIC:
        return 1.0 / (1.0 + math.exp(-gamma * (0.5 - loss)))
    if loss <= eps:
        f = 1.0 - eps
    elif 1.0 - loss <= eps:
        f = eps
    else:
        f = 1.0 - loss
    return f ** beta


def backoff_probability(model, loss):
    """Probability that a colliding agent with switching ``loss`` yields."""
    loss = float(loss)
    if not 0.0 <= loss <= 1.0:
        raise ValueError(f"loss must lie in [0, 1], got {loss}")
    return float(_backoff(model.kind, float(model.beta), float(model.epsilon),
                          float(model.gamma), loss))


@numba.njit(cache=True, nogil=True, inline="always")
def _uniform(states, a):
    # splitmix64, one independent stream per agent
    s = states[a] + _GOLDEN
    states[a] = s
    z = (s ^ (s >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return float(z >> _S11) * _INV53


def agent_streams(seed, n_agents):
    """Initial per-agent generator states derived from ``seed``."""
    return np.random.SeedSequence(int(seed)).generate_state(max(n_agents, 1), dtype=np.uint64)[:n_agents].copy()


@dataclass(frozen=True)
class UnitCapacity:
    """Each resource is held by at most one agent."""


@dataclass(frozen=True, eq=False)
class IntervalConflicts:
    """Agents clash iff ``share[a, b]`` and their intervals overlap.

    Resource ids are interval start positions on a common time axis;
    agent ``a`` occupies ``[start, start + length[a])``.
    """

    share: np.ndarray
    length: np.ndarray


@dataclass(frozen=True, eq=False)
class Arena:
    """Per-agent candidate lists in preference order plus a conflict rule.

    ``cand[n, k]`` is the k-th preferred resource id of agent ``n`` (padded
    with -1 past ``ncand[n]``) and ``util[n, k]`` its utility. ``tie[n, k]``
    ranks candidates with equal expected reward when the learner re-selects
    its start (smaller wins); it defaults to the resource id.
    """

    cand: np.ndarray
    util: np.ndarray
    ncand: np.ndarray
    n_resources: int
    conflicts: object = UnitCapacity()
    tie: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.tie is None:
            object.__setattr__(self, "tie", self.cand)

    @property
    def n_agents(self):
        return self.cand.shape[0]

    @classmethod
    def from_instance(cls, instance, tie_break="id", seed=0):
        """Build the arena of an assignment instance.

        ``tie_break="id"`` orders equal utilities by ascending resource id;
        ``"random"`` gives every agent its own seeded random order among
        equal utilities, used both for the preference list and for start
        re-selection.
        """
        n = instance.n_agents
        if tie_break == "id":
            lists = instance.preference_lists()
        elif tie_break == "random":
            lists = _shuffled_preferences(instance, seed)
        else:
            raise ValueError(f"unknown tie_break {tie_break!r}")
        width = max(1, max(len(p) for p in lists))
        cand = np.full((n, width), UNMATCHED, dtype=np.int64)
        util = np.zeros((n, width))
        ncand = np.zeros(n, dtype=np.int64)
        for a, prefs in enumerate(lists):
            k = len(prefs)
            cand[a, :k] = prefs
            util[a, :k] = instance.utility[a, prefs]
            ncand[a] = k
        if tie_break == "id":
            return cls(cand, util, ncand, instance.n_resources)
        tie = np.broadcast_to(np.arange(width, dtype=np.int64), (n, width)).copy()
        return cls(cand, util, ncand, instance.n_resources, tie=tie)

    def local_index(self, agent, resource):
        hits = np.flatnonzero(self.cand[agent, : self.ncand[agent]] == resource)
        if hits.size == 0:
            raise ValueError(f"resource {resource} is not in the interest list of agent {agent}")
        return int(hits[0])

    def with_conflicts(self, conflicts):
        return Arena(self.cand, self.util, self.ncand, self.n_resources, conflicts, self.tie)

    def kernel_args(self):
        """Positional arrays consumed by the numba kernels."""
        if isinstance(self.conflicts, IntervalConflicts):
            return (self.cand, self.util, self.ncand, False, self.n_resources,
                    np.ascontiguousarray(self.conflicts.share, dtype=np.bool_),
                    np.ascontiguousarray(self.conflicts.length, dtype=np.int64))
        return (self.cand, self.util, self.ncand, True, self.n_resources,
                np.zeros((1, 1), dtype=np.bool_), np.ones(1, dtype=np.int64))


class StageWorkspace:
    """Scratch buffers reused across stage games of one arena."""

    def __init__(self, n_agents, n_resources):
        n = max(n_agents, 1)
        self.g = np.empty(n, np.int64)
        self.cursor = np.empty(n, np.int64)
        self.status = np.empty(n, np.int8)
        self.fails = np.empty(n, np.int64)
        self.last_bid = np.empty(n, np.int64)
        self.active = np.empty(n, np.int64)
        self.bidders = np.empty(n, np.int64)
        self.collided = np.empty(n, np.bool_)
        self.holder = np.full(max(n_resources, 1), -1, np.int64)
        self.bid_count = np.zeros(max(n_resources, 1), np.int64)
        self.com_agent = np.empty(n, np.int64)
        self.com_start = np.empty(n, np.int64)

    def buffers(self):
        return (self.g, self.cursor, self.status, self.fails, self.last_bid, self.active,
                self.bidders, self.collided, self.holder, self.bid_count,
                self.com_agent, self.com_start)


@numba.njit(cache=True, nogil=True, inline="always")
def _clash(share, length, a, ra, b, rb):
    if not share[a, b]:
        return False
    return ra < rb + length[b] and rb < ra + length[a]


@numba.njit(cache=True, nogil=True)
def _stage(cand, util, ncand, unit, n_res, share, length,
           kind, beta, eps, gamma, r_start, loss, states, round_cap, won,
           g, cursor, status, fails, last_bid, active, bidders, collided,
           holder, bid_count, com_agent, com_start):
    """Run one stage game; ``won`` receives local candidate indices (-1 unmatched).

    Returns ``(rounds, anomaly)`` where ``anomaly`` is True iff the round cap
    stopped the game with agents still unconverged.
    """
    n = cand.shape[0]
    n_active = 0
    for a in range(n):
        g[a] = r_start[a]
        cursor[a] = -1
        fails[a] = 0
        last_bid[a] = 0
        won[a] = -1
        if ncand[a] == 0:
            status[a] = 2
        else:
            status[a] = 0
            active[n_active] = a
            n_active += 1
    if unit:
        for r in range(n_res):
            holder[r] = -1
    ncom = 0
    rounds = 0
    anomaly = False
    while n_active > 0:
        if rounds >= round_cap:
            anomaly = True
            break
        rounds += 1
        nb = 0
        for i in range(n_active):
            a = active[i]
            if g[a] >= 0:
                bidders[nb] = a
                nb += 1
                last_bid[a] = rounds
                if unit:
                    bid_count[cand[a, g[a]]] += 1
        for i in range(nb):
            a = bidders[i]
            ra = cand[a, g[a]]
            if unit:
                col = holder[ra] != -1 or bid_count[ra] >= 2
            else:
                col = False
                for j in range(ncom):
                    if _clash(share, length, a, ra, com_agent[j], com_start[j]):
                        col = True
                        break
                if not col:
                    for k in range(nb):
                        if k != i:
                            b = bidders[k]
                            if _clash(share, length, a, ra, b, cand[b, g[b]]):
                                col = True
                                break
            collided[i] = col
        if unit:
            for i in range(nb):
                a = bidders[i]
                bid_count[cand[a, g[a]]] = 0
        for i in range(nb):
            a = bidders[i]
            k = g[a]
            if not collided[i]:
                status[a] = 1
                won[a] = k
                if unit:
                    holder[cand[a, k]] = a
                else:
                    com_agent[ncom] = a
                    com_start[ncom] = cand[a, k]
                    ncom += 1
            elif _uniform(states, a) < _backoff(kind, beta, eps, gamma, loss[a, k]):
                g[a] = -1
        for i in range(n_active):
            a = active[i]
            if status[a] != 0 or g[a] >= 0 or last_bid[a] == rounds:
                continue
            c = (cursor[a] + 1) % ncand[a]
            cursor[a] = c
            r = cand[a, c]
            if unit:
                free = holder[r] == -1
            else:
                free = True
                for j in range(ncom):
                    if _clash(share, length, a, r, com_agent[j], com_start[j]):
                        free = False
                        break
            if free:
                g[a] = c
                fails[a] = 0
            else:
                fails[a] += 1
                if fails[a] >= ncand[a]:
                    status[a] = 2
        m = 0
        for i in range(n_active):
            a = active[i]
            if status[a] == 0:
                active[m] = a
                m += 1
        n_active = m
    return rounds, anomaly


@dataclass(frozen=True)
class StageResult:
    """Outcome of one stage game; ``won[n]`` is a resource id or -1."""

    won: np.ndarray
    rounds: int
    anomaly: bool


def _as_arena(instance):
    if isinstance(instance, Arena):
        return instance
    if isinstance(instance, AssignmentInstance):
        return Arena.from_instance(instance)
    raise TypeError(f"expected an AssignmentInstance or Arena, got {type(instance).__name__}")


def run_stage(instance, r_start=None, loss=None, model=None, seed=0, round_cap=None,
              conflicts=None, streams=None):
    """Play one ALMA stage game.

    Parameters
    ----------
    instance : AssignmentInstance or Arena
    r_start : sequence of int, optional
        Starting resource id per agent; defaults to each agent's top choice.
    loss : array, optional
        Per-agent back-off loss. For an ``AssignmentInstance`` an N x R
        matrix indexed by resource id; for an ``Arena`` an N x K matrix
        aligned with ``arena.cand``. Defaults to the next-best utility gaps.
    model : BackoffModel, optional
    seed : int
        Seeds the per-agent generators; ignored if ``streams`` is given.
    conflicts : UnitCapacity or IntervalConflicts, optional
        Overrides the arena's conflict rule.
    streams : np.ndarray of uint64, optional
        Per-agent generator states, advanced in place.
    """
    arena = _as_arena(instance)
    if conflicts is not None:
        arena = arena.with_conflicts(conflicts)
    n = arena.n_agents
    model = model or BackoffModel()
    if r_start is None:
        start_local = np.where(arena.ncand > 0, 0, -1).astype(np.int64)
    else:
        if len(r_start) != n:
            raise ValueError(f"r_start has {len(r_start)} entries, expected {n}")
        start_local = np.array([arena.local_index(a, int(r)) for a, r in enumerate(r_start)],
                               dtype=np.int64)
    if loss is None:
        loss_local = next_gap_loss(arena)
    else:
        loss = np.asarray(loss, dtype=np.float64)
        if isinstance(instance, AssignmentInstance):
            if loss.shape != (n, arena.n_resources):
                raise ValueError(f"loss must have shape {(n, arena.n_resources)}")
            loss_local = np.take_along_axis(loss, np.maximum(arena.cand, 0), axis=1)
        else:
            if loss.shape != arena.cand.shape:
                raise ValueError(f"loss must have shape {arena.cand.shape}")
            loss_local = loss
        if loss_local.size and (loss_local.min() < 0 or loss_local.max() > 1):
            raise ValueError("loss values must lie in [0, 1]")
    cap = round_cap if round_cap is not None else default_round_cap(arena.n_resources)
    if streams is None:
        streams = agent_streams(seed, n)
    won = np.empty(max(n, 1), np.int64)
    ws = StageWorkspace(n, arena.n_resources)
    rounds, anomaly = _stage(*arena.kernel_args(), model.kind, float(model.beta),
                             float(model.epsilon), float(model.gamma), start_local,
                             np.ascontiguousarray(loss_local), streams, int(cap), won,
                             *ws.buffers())
    won = won[:n]
    ids = np.where(won >= 0, arena.cand[np.arange(n), np.maximum(won, 0)], UNMATCHED)
    return StageResult(ids.astype(np.int64), int(rounds), bool(anomaly))


def _shuffled_preferences(instance, seed):
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x7E5]))
    keys = rng.random(instance.utility.shape)
    lists = []
    for a in range(instance.n_agents):
        ids = np.asarray(instance.interest_set(a), dtype=np.int64)
        order = np.lexsort((ids, keys[a, ids], -instance.utility[a, ids]))
        lists.append([int(r) for r in ids[order]])
    return lists


def default_round_cap(n_resources):
    return 10 * n_resources + 100_000


def next_gap_loss(arena):
    """Initial losses ``u(r) - u(r_next)``; the least preferred resource uses ``u(r)``."""
    util = arena.util
    loss = np.zeros_like(util)
    for a in range(arena.n_agents):
        k = arena.ncand[a]
        if k == 0:
            continue
        u = util[a, :k]
        nxt = np.append(u[1:], 0.0)
        loss[a, :k] = np.clip(u - nxt, 0.0, 1.0)
    return loss
