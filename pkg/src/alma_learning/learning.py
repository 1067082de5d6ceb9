"""ALMA-Learning: repeated stage games with learned rewards and back-off losses.

Every agent keeps, per resource of its preference list, a ring buffer of the
most recent utilities it ended up with when starting from that resource, the
mean of that buffer (the expected reward of starting there) and a learned
back-off loss. After each stage game only the entries of the starting
resource change; an agent that did not win its starting resource re-selects
the start as the arg-max of the expected rewards.
"""

import csv
from dataclasses import dataclass, field

import numba
import numpy as np

from ._validation import check_agent
from .core import UNMATCHED, Allocation, AssignmentInstance, RunConfig
from .engine import (Arena, BackoffModel, StageWorkspace, _as_arena, _stage, agent_streams,
                     next_gap_loss)


@numba.njit(cache=True, nogil=True)
def _argmax_reward(reward, tie, k):
    best = 0
    for i in range(1, k):
        if reward[i] > reward[best] or (reward[i] == reward[best] and tie[i] < tie[best]):
            best = i
    return best


@numba.njit(cache=True, nogil=True)
def _play(cand, util, ncand, unit, n_res, share, length, tie, kind, beta, eps, gamma,
          alpha, learn, steps, r_start, loss, hist, hcount, hpos, reward, states, round_cap,
          start_trace, won_trace, rounds_trace, anomaly_trace,
          won, g, cursor, status, fails, last_bid, active, bidders, collided,
          holder, bid_count, com_agent, com_start):
    n = cand.shape[0]
    depth = hist.shape[2]
    for t in range(steps):
        for a in range(n):
            start_trace[t, a] = r_start[a]
        rounds, anomaly = _stage(cand, util, ncand, unit, n_res, share, length,
                                 kind, beta, eps, gamma, r_start, loss, states, round_cap, won,
                                 g, cursor, status, fails, last_bid, active, bidders, collided,
                                 holder, bid_count, com_agent, com_start)
        rounds_trace[t] = rounds
        anomaly_trace[t] = anomaly
        for a in range(n):
            won_trace[t, a] = won[a]
        if not learn:
            continue
        for a in range(n):
            k = ncand[a]
            if k == 0:
                continue
            rs = r_start[a]
            w = won[a]
            uw = util[a, w] if w >= 0 else 0.0
            hist[a, rs, hpos[a, rs]] = uw
            hpos[a, rs] = (hpos[a, rs] + 1) % depth
            if hcount[a, rs] < depth:
                hcount[a, rs] += 1
            c = hcount[a, rs]
            s = 0.0
            for i in range(c):
                s += hist[a, rs, i]
            reward[a, rs] = s / c
            gap = util[a, rs] - uw
            if gap > 0.0:
                v = (1.0 - alpha) * loss[a, rs] + alpha * gap
                loss[a, rs] = min(1.0, max(0.0, v))
            if w != rs:
                # leave the start only for a strictly better expected reward
                best = _argmax_reward(reward[a], tie[a], k)
                if reward[a, best] > reward[a, rs]:
                    r_start[a] = best
    for a in range(n):
        start_trace[steps, a] = r_start[a]


@dataclass(frozen=True)
class AgentLearnerState:
    """Snapshot of one agent's learned quantities, aligned with ``resources``.

    ``resources`` is the agent's preference list; ``reward_history[i]`` holds
    the recent realized utilities (oldest first) for ``resources[i]``.
    """

    resources: tuple
    utility: np.ndarray
    reward_history: tuple
    reward: np.ndarray
    loss: np.ndarray
    r_start: int

    def reward_of(self, resource):
        return float(self.reward[self.resources.index(resource)])

    def loss_of(self, resource):
        return float(self.loss[self.resources.index(resource)])


@dataclass(eq=False)
class LearnerPool:
    """Learned state of all agents of an arena, stored as dense arrays."""

    arena: Arena
    r_start: np.ndarray
    loss: np.ndarray
    reward: np.ndarray
    hist: np.ndarray
    hcount: np.ndarray
    hpos: np.ndarray

    @classmethod
    def initial(cls, arena, history_len=20, init_loss=None):
        n, width = arena.cand.shape
        util = arena.util
        hist = np.zeros((n, width, history_len))
        hist[:, :, 0] = util
        hcount = np.where(np.arange(width)[None, :] < arena.ncand[:, None], 1, 0).astype(np.int64)
        hpos = hcount % history_len
        reward = util.copy()
        loss = next_gap_loss(arena) if init_loss is None else np.array(init_loss, dtype=np.float64)
        if loss.shape != arena.cand.shape:
            raise ValueError(f"init_loss must have shape {arena.cand.shape}")
        r_start = np.full(n, -1, dtype=np.int64)
        for a in range(n):
            k = arena.ncand[a]
            if k:
                r_start[a] = _argmax_reward(reward[a], arena.tie[a], k)
        return cls(arena, r_start, loss, reward, hist, hcount, hpos)

    def copy(self):
        return LearnerPool(self.arena, self.r_start.copy(), self.loss.copy(), self.reward.copy(),
                           self.hist.copy(), self.hcount.copy(), self.hpos.copy())

    def state(self, agent):
        arena = self.arena
        k = int(arena.ncand[agent])
        depth = self.hist.shape[2]
        history = []
        for i in range(k):
            c = int(self.hcount[agent, i])
            buf = self.hist[agent, i]
            # oldest entry sits at hpos once the buffer is full
            order = range(c) if c < depth else [(self.hpos[agent, i] + j) % depth for j in range(depth)]
            history.append(tuple(float(buf[j]) for j in order))
        rs = int(self.r_start[agent])
        return AgentLearnerState(
            resources=tuple(int(r) for r in arena.cand[agent, :k]),
            utility=arena.util[agent, :k].copy(),
            reward_history=tuple(history),
            reward=self.reward[agent, :k].copy(),
            loss=self.loss[agent, :k].copy(),
            r_start=int(arena.cand[agent, rs]) if rs >= 0 else UNMATCHED,
        )

    def states(self):
        return [self.state(a) for a in range(self.arena.n_agents)]

    def start_resources(self):
        a = np.arange(self.arena.n_agents)
        return np.where(self.r_start >= 0, self.arena.cand[a, np.maximum(self.r_start, 0)], UNMATCHED)


def init_learner(instance, agent, history_len=20):
    """Initial learner state of one agent of an :class:`AssignmentInstance`."""
    agent = check_agent(agent, instance.n_agents)
    return LearnerPool.initial(Arena.from_instance(instance), history_len).state(agent)


@dataclass(eq=False)
class TrainTrace:
    """Per-step record of a training or evaluation run (resource ids, -1 unmatched).

    ``r_start`` has one more row than there are steps: the last row is the
    starting vector left after the final update.
    """

    r_start: np.ndarray
    r_won: np.ndarray
    rounds: np.ndarray
    anomalies: np.ndarray
    sw: np.ndarray

    @property
    def n_steps(self):
        return len(self.rounds)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "r_start", "r_won", "sw", "rounds", "anomaly"])
            for t in range(self.n_steps):
                writer.writerow([t + 1, " ".join(map(str, self.r_start[t])),
                                 " ".join(map(str, self.r_won[t])), repr(float(self.sw[t])),
                                 int(self.rounds[t]), int(self.anomalies[t])])


@dataclass(eq=False)
class TrainResult:
    pool: LearnerPool
    trace: TrainTrace
    streams: np.ndarray = field(repr=False)

    @property
    def states(self):
        return self.pool.states()


def _run(arena, pool, steps, model, alpha, learn, streams, round_cap):
    n = arena.n_agents
    start_local = np.empty((steps + 1, n), np.int64)
    won_local = np.empty((steps, n), np.int64)
    rounds = np.zeros(steps, np.int64)
    anomalies = np.zeros(steps, np.bool_)
    won = np.empty(max(n, 1), np.int64)
    ws = StageWorkspace(n, arena.n_resources)
    _play(*arena.kernel_args(), arena.tie, model.kind, float(model.beta), float(model.epsilon),
          float(model.gamma), float(alpha), bool(learn), int(steps), pool.r_start, pool.loss,
          pool.hist, pool.hcount, pool.hpos, pool.reward, streams, int(round_cap),
          start_local, won_local, rounds, anomalies, won, *ws.buffers())
    rows = np.arange(n)[None, :]
    r_start = np.where(start_local >= 0, arena.cand[rows, np.maximum(start_local, 0)], UNMATCHED)
    r_won = np.where(won_local >= 0, arena.cand[rows, np.maximum(won_local, 0)], UNMATCHED)
    gained = np.where(won_local >= 0, arena.util[rows, np.maximum(won_local, 0)], 0.0)
    return TrainTrace(r_start, r_won, rounds, anomalies, gained.sum(axis=1)), won_local


def _model_for(config, model):
    return model if model is not None else BackoffModel.power(config.beta, config.epsilon)


def train(instance, config=None, model=None, streams=None, init_loss=None, pool=None):
    """Run ``config.training_steps`` learning stage games.

    ``instance`` is an :class:`AssignmentInstance` or an :class:`Arena`.
    ``streams`` (per-agent generator states) default to ones derived from
    ``config.seed``; they are advanced in place and returned with the result
    so evaluation can continue the same random sequence.
    """
    config = config or RunConfig()
    arena = _as_arena(instance)
    model = _model_for(config, model)
    if pool is None:
        pool = LearnerPool.initial(arena, config.history_len, init_loss)
    if streams is None:
        streams = agent_streams(config.seed, arena.n_agents)
    trace, _ = _run(arena, pool, config.training_steps, model, config.alpha, True, streams,
                    config.cap_for(arena.n_resources))
    return TrainResult(pool, trace, streams)


def play_frozen(arena, pool, n_steps, model, streams, round_cap):
    """Stage games from the frozen learned state; returns the trace and local winners."""
    return _run(arena, pool.copy(), n_steps, model, 0.1, False, streams, round_cap)


def evaluate(instance, trained, eval_steps=32, model=None, streams=None, config=None):
    """Allocations of ``eval_steps`` stage games with learning frozen.

    ``trained`` is a :class:`TrainResult` (its streams are continued unless
    ``streams`` is given) or a :class:`LearnerPool`.
    """
    config = config or RunConfig()
    model = _model_for(config, model)
    if isinstance(trained, TrainResult):
        pool = trained.pool
        streams = trained.streams if streams is None else streams
    else:
        pool = trained
    arena = pool.arena
    if streams is None:
        streams = agent_streams(config.seed + 1, arena.n_agents)
    trace, _ = play_frozen(arena, pool, eval_steps, model, streams,
                           config.cap_for(arena.n_resources))
    if isinstance(instance, AssignmentInstance):
        return [Allocation.from_assignment(instance, row) for row in trace.r_won]
    return trace


def starting_resource_stabilization(trace):
    """First 1-based step after which the starting vector never changes, else ``None``."""
    rows = trace.r_start if isinstance(trace, TrainTrace) else np.asarray(trace)
    if len(rows) == 0:
        return None
    last = rows[-1]
    t = len(rows)
    while t > 1 and np.array_equal(rows[t - 2], last):
        t -= 1
    if t == len(rows) and len(rows) > 1:
        return None
    return t
