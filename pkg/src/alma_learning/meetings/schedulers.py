"""Scheduling events: ALMA / ALMA-Learning, MSRAC, Greedy and an exhaustive oracle.

Event-agents see only their aggregated candidate lists; collision bits come
from the participants' calendars, which is what the interval conflict rule
of the engine evaluates.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .._validation import check_seed
from ..core import RunConfig
from ..engine import Arena, BackoffModel, IntervalConflicts, agent_streams
from ..learning import LearnerPool, TrainTrace, play_frozen, train
from .model import Schedule

MEETING_LOSS_K = 13
BRUTE_FORCE_CAP = 10**7


def meeting_round_cap(horizon):
    """Default stage-game round cap for meetings.

    Under the logistic back-off the slowest two-event contest (both losses 1)
    takes about 1300 rounds in expectation. Events stuck in larger contests
    for a single slot almost never resolve, so they are cut off here and stay
    unscheduled.
    """
    return 10 * horizon + 10_000


@dataclass(frozen=True)
class CandidateList:
    """Feasible starts of one event, best first.

    ``positions`` are start positions on the time axis, ``joint`` the summed
    attendee preferences and ``utility`` the joint value divided by the
    instance-wide maximum.
    """

    positions: np.ndarray
    joint: np.ndarray
    utility: np.ndarray

    def __len__(self):
        return len(self.positions)


def _raw_candidates(instance, event):
    prefs = instance.attendee_prefs(event).reshape(len(instance.attendees[event]), -1)
    joint = prefs.sum(axis=0)
    joint[np.any(prefs == 0, axis=0)] = 0.0
    limit = instance.end_limit(event) - int(instance.lengths[event])
    pos = np.arange(instance.horizon)
    keep = (joint > 0) & (pos <= limit)
    pos, joint = pos[keep], joint[keep]
    order = np.lexsort((pos, -joint))[: instance.top_slots]
    return pos[order], joint[order]


def candidate_lists(instance):
    """Candidate lists of every event, normalized by the best joint utility of any event."""
    raw = [_raw_candidates(instance, e) for e in range(instance.n_events)]
    top = max((j[0] for _, j in raw if len(j)), default=0.0)
    scale = 1.0 / top if top > 0 else 0.0
    return [CandidateList(p, j, np.minimum(j * scale, 1.0)) for p, j in raw]


def aggregate_event_preferences(instance, event):
    """``[(day, slot, utility), ...]`` sorted by decreasing normalized joint utility."""
    if not 0 <= event < instance.n_events:
        raise ValueError(f"event {event} out of range")
    cl = candidate_lists(instance)[event]
    return [(*instance.day_slot(p), float(u)) for p, u in zip(cl.positions, cl.utility)]


def meeting_loss(utilities, i, k=MEETING_LOSS_K):
    """Average gap from rank ``i`` to the alternatives at ranks ``i+1..k``.

    Ranks past the end of the list count as utility 0. For ``i >= k`` the
    window is widened to the single next alternative.
    """
    u = np.asarray(utilities, dtype=np.float64)
    if not 0 <= i < len(u):
        raise ValueError(f"index {i} out of range for {len(u)} candidates")
    k = max(int(k), i + 1)
    alt = np.zeros(k - i)
    tail = u[i + 1: k + 1]
    alt[: len(tail)] = tail
    return float(np.clip(np.mean(u[i] - alt), 0.0, 1.0))


def meeting_arena(instance, cands=None):
    """Engine arena with events as agents and start positions as resources."""
    cands = cands if cands is not None else candidate_lists(instance)
    n = instance.n_events
    width = max(1, max((len(c) for c in cands), default=1))
    cand = np.full((n, width), -1, dtype=np.int64)
    util = np.zeros((n, width))
    ncand = np.zeros(n, dtype=np.int64)
    for e, c in enumerate(cands):
        k = len(c)
        cand[e, :k] = c.positions
        util[e, :k] = c.utility
        ncand[e] = k
    conflicts = IntervalConflicts(instance.shared_participants(), instance.lengths)
    tie = np.broadcast_to(np.arange(width, dtype=np.int64), (n, width)).copy()
    return Arena(cand, util, ncand, instance.horizon, conflicts, tie)


def meeting_loss_matrix(arena, k=MEETING_LOSS_K):
    loss = np.zeros(arena.cand.shape)
    for e in range(arena.n_agents):
        u = arena.util[e, : arena.ncand[e]]
        for i in range(len(u)):
            loss[e, i] = meeting_loss(u, i, k)
    return loss


@dataclass(eq=False)
class MeetingRun:
    """Evaluation schedules of one ALMA(-Learning) run plus the training trace."""

    schedules: list
    trace: Optional[TrainTrace]
    eval_trace: TrainTrace

    @property
    def schedule(self):
        return self.schedules[0]

    @property
    def mean_welfare(self):
        return float(np.mean([s.social_welfare for s in self.schedules]))


def schedule_with_alma(instance, learning=True, config=None, seed=None, model=None,
                       k=MEETING_LOSS_K):
    """Schedule with ALMA (``learning=False``: one stage game) or ALMA-Learning.

    Uses the logistic back-off and the averaged-gap meeting loss. With
    learning, ``config.training_steps`` stage games are played before
    ``config.eval_steps`` frozen evaluation games.
    """
    config = config or RunConfig()
    if seed is not None:
        config = config.replace(seed=check_seed(seed))
    if config.round_cap is None:
        config = config.replace(round_cap=meeting_round_cap(instance.horizon))
    model = model or BackoffModel.logistic()
    arena = meeting_arena(instance)
    loss = meeting_loss_matrix(arena, k)
    pool = LearnerPool.initial(arena, config.history_len, loss)
    cap = config.cap_for(instance.horizon)
    trace = None
    if learning:
        res = train(arena, config, model, pool=pool)
        trace, streams, steps = res.trace, res.streams, config.eval_steps
    else:
        streams, steps = agent_streams(config.seed, arena.n_agents), 1
    ev, _ = play_frozen(arena, pool, steps, model, streams, cap)
    schedules = [Schedule.from_positions(instance, row, anomaly=bool(a))
                 for row, a in zip(ev.r_won, ev.anomalies)]
    return MeetingRun(schedules, trace, ev)


def _fits(instance, share, placed, e, pos):
    le = instance.lengths[e]
    for o, po in placed.items():
        if share[e, o] and pos < po + instance.lengths[o] and po < pos + le:
            return False
    return True


def greedy_meetings(instance, seed=None):
    """Events in random order each take their best slot that fits the calendar so far."""
    rng = np.random.default_rng(check_seed(seed))
    cands = candidate_lists(instance)
    share = instance.shared_participants()
    placed = {}
    for e in rng.permutation(instance.n_events):
        for pos in cands[e].positions:
            if _fits(instance, share, placed, e, int(pos)):
                placed[int(e)] = int(pos)
                break
    return Schedule.from_positions(instance, [placed.get(e, -1) for e in range(instance.n_events)])


def event_importance(cands):
    """Mean attendee utility times attendee count, i.e. the mean joint utility over candidates."""
    return np.array([float(c.joint.mean()) if len(c) else 0.0 for c in cands])


def msrac(instance, max_proposals=None):
    """Propose/accept/reject scheduling ranked by event importance.

    A proposal is accepted if the slot is free for every attendee. Conflicting
    events of lower importance are evicted and asked to propose their next
    slot. A conflict with a more important event rejects the proposal. On
    equal importance the higher-utility proposal stays.
    """
    cands = candidate_lists(instance)
    share = instance.shared_participants()
    imp = event_importance(cands)
    n = instance.n_events
    nxt = np.zeros(n, dtype=np.int64)
    placed = {}
    queue = list(np.argsort(-imp, kind="stable"))
    budget = max_proposals if max_proposals is not None else 4 * sum(len(c) for c in cands) + n
    proposals = 0
    anomaly = False
    while queue:
        if proposals >= budget:
            anomaly = True
            break
        e = int(queue.pop(0))
        c = cands[e]
        if nxt[e] >= len(c):
            continue
        proposals += 1
        pos, u = int(c.positions[nxt[e]]), float(c.utility[nxt[e]])
        nxt[e] += 1
        clashing = [o for o, po in placed.items()
                    if share[e, o] and pos < po + instance.lengths[o] and po < pos + instance.lengths[e]]
        accept = True
        for o in clashing:
            if imp[o] > imp[e]:
                accept = False
            elif imp[o] == imp[e]:
                uo = float(cands[o].utility[nxt[o] - 1])
                if uo >= u:
                    accept = False
        if not accept:
            queue.append(e)
            continue
        for o in clashing:
            del placed[o]
            queue.append(o)
        placed[e] = pos
    return Schedule.from_positions(instance, [placed.get(e, -1) for e in range(n)], anomaly)


def _components(instance, cands, share):
    """Groups of events that could ever conflict with each other."""
    n = instance.n_events
    lo = np.array([c.positions.min() if len(c) else 0 for c in cands])
    hi = np.array([c.positions.max() + instance.lengths[e] if len(c) else 0
                   for e, c in enumerate(cands)])
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in range(n):
        for b in range(a + 1, n):
            if share[a, b] and lo[a] < hi[b] and lo[b] < hi[a]:
                parent[find(a)] = find(b)
    groups = {}
    for e in range(n):
        groups.setdefault(find(e), []).append(e)
    return list(groups.values())


def brute_force_schedule(instance, cap=BRUTE_FORCE_CAP):
    """Exact maximum-welfare schedule by exhaustive search.

    Events that can never interact are solved independently; each group must
    satisfy ``prod(|candidates| + 1) <= cap``.
    """
    cands = candidate_lists(instance)
    share = instance.shared_participants()
    groups = _components(instance, cands, share)
    for g in groups:
        size = 1
        for e in g:
            size *= len(cands[e]) + 1
        if size > cap:
            raise ValueError(f"search space {size} of events {g} exceeds the cap {cap}")
    best_pos = np.full(instance.n_events, -1, dtype=np.int64)
    for g in groups:
        order = sorted(g, key=lambda e: -len(cands[e]))
        bound = np.cumsum([cands[e].joint[0] if len(cands[e]) else 0.0 for e in order][::-1])[::-1]
        bound = np.append(bound, 0.0)
        best = [-1.0, None]
        placed = {}

        def dfs(i, value):
            if value + bound[i] <= best[0] + 1e-12:
                return
            if i == len(order):
                best[0], best[1] = value, dict(placed)
                return
            e = order[i]
            for pos, j in zip(cands[e].positions, cands[e].joint):
                pos = int(pos)
                if _fits(instance, share, placed, e, pos):
                    placed[e] = pos
                    dfs(i + 1, value + float(j))
                    del placed[e]
            dfs(i + 1, value)

        dfs(0, 0.0)
        for e, pos in (best[1] or {}).items():
            best_pos[e] = pos
    return Schedule.from_positions(instance, best_pos)
