"""Meeting instances, schedules and the two hard constraints.

Time is a single axis of ``days * slots`` positions; the start ``(d, s)``
maps to position ``d * slots + s`` and an event of length ``l`` occupies the
half-open interval ``[start, start + l)``, so events may run past midnight.
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..metrics import gini, jain


@dataclass(frozen=True, eq=False)
class MeetingInstance:
    """Events, participants and the per-attendee preference tensor.

    ``pref[e, p, d, s]`` is participant ``p``'s preference for event ``e``
    starting on day ``d`` at slot ``s``; only entries of attendees are read.
    A zero entry marks the participant as unavailable (blocked).
    ``deadline[e]``, when given, is the exclusive end position past which
    event ``e`` may not run.
    """

    lengths: np.ndarray
    attendees: tuple
    coords: np.ndarray
    days: int
    slots: int
    pref: np.ndarray
    top_slots: int = 24
    deadline: Optional[np.ndarray] = None

    def __post_init__(self):
        lengths = np.asarray(self.lengths, dtype=np.int64).copy()
        pref = np.array(self.pref, dtype=np.float64)
        coords = np.array(self.coords, dtype=np.float64).reshape(-1, 2)
        attendees = tuple(tuple(sorted(int(p) for p in ps)) for ps in self.attendees)
        n_e, n_p = len(lengths), len(coords)
        if self.days < 1 or self.slots < 1:
            raise ValueError("days and slots must be >= 1")
        if len(attendees) != n_e:
            raise ValueError(f"{len(attendees)} attendee sets for {n_e} events")
        if pref.shape != (n_e, n_p, self.days, self.slots):
            raise ValueError(f"pref has shape {pref.shape}, expected {(n_e, n_p, self.days, self.slots)}")
        if np.any(lengths < 1):
            raise ValueError("event lengths must be >= 1")
        if not np.all(np.isfinite(pref)) or pref.min(initial=0) < 0 or pref.max(initial=0) > 1:
            raise ValueError("preferences must lie in [0, 1]")
        for e, ps in enumerate(attendees):
            if not ps:
                raise ValueError(f"event {e} has no participants")
            if len(set(ps)) != len(ps) or ps[0] < 0 or ps[-1] >= n_p:
                raise ValueError(f"event {e} has an invalid participant set {ps}")
        if self.top_slots < 1:
            raise ValueError("top_slots must be >= 1")
        deadline = self.deadline
        if deadline is not None:
            deadline = np.asarray(deadline, dtype=np.int64).copy()
            if deadline.shape != (n_e,):
                raise ValueError("deadline needs one entry per event")
            deadline.setflags(write=False)
        for arr in (lengths, pref, coords):
            arr.setflags(write=False)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "pref", pref)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "attendees", attendees)
        object.__setattr__(self, "deadline", deadline)

    @property
    def n_events(self):
        return len(self.lengths)

    @property
    def n_participants(self):
        return len(self.coords)

    @property
    def horizon(self):
        return self.days * self.slots

    def position(self, day, slot):
        return day * self.slots + slot

    def day_slot(self, position):
        return divmod(int(position), self.slots)

    def end_limit(self, event):
        """Exclusive end position allowed for ``event``."""
        if self.deadline is None:
            return self.horizon
        return int(min(self.deadline[event], self.horizon))

    def shared_participants(self):
        """Boolean E x E matrix: events with a common attendee (diagonal False)."""
        member = np.zeros((self.n_events, self.n_participants), dtype=bool)
        for e, ps in enumerate(self.attendees):
            member[e, list(ps)] = True
        share = (member.astype(np.int64) @ member.T.astype(np.int64)) > 0
        np.fill_diagonal(share, False)
        return share

    def attendee_prefs(self, event):
        """``|P_e| x days x slots`` preferences of the event's attendees."""
        return self.pref[event, list(self.attendees[event])]

    def with_deadline(self, deadline):
        return MeetingInstance(self.lengths, self.attendees, self.coords, self.days, self.slots,
                               self.pref, self.top_slots, deadline)

    def to_dict(self):
        out = {
            "days": self.days,
            "slots": self.slots,
            "top_slots": self.top_slots,
            "lengths": self.lengths.tolist(),
            "coords": self.coords.tolist(),
            "attendees": [list(ps) for ps in self.attendees],
            # only attendee rows are stored
            "pref": [self.attendee_prefs(e).tolist() for e in range(self.n_events)],
        }
        if self.deadline is not None:
            out["deadline"] = self.deadline.tolist()
        return out

    @classmethod
    def from_dict(cls, data):
        n_e, n_p = len(data["lengths"]), len(data["coords"])
        pref = np.zeros((n_e, n_p, data["days"], data["slots"]))
        for e, ps in enumerate(data["attendees"]):
            pref[e, list(ps)] = np.asarray(data["pref"][e], dtype=np.float64)
        return cls(data["lengths"], data["attendees"], data["coords"], data["days"],
                   data["slots"], pref, data.get("top_slots", 24), data.get("deadline"))


def save_meeting_instance(instance, path):
    with open(path, "w") as fh:
        json.dump(instance.to_dict(), fh)


def load_meeting_instance(path):
    with open(path) as fh:
        return MeetingInstance.from_dict(json.load(fh))


@dataclass(frozen=True)
class Schedule:
    """Per-event start ``(day, slot)`` or None, with its social welfare."""

    starts: tuple
    social_welfare: float
    anomaly: bool = False

    @classmethod
    def from_positions(cls, instance, positions, anomaly=False):
        """Build from start positions on the time axis (-1 or None = unscheduled)."""
        starts = []
        for p in positions:
            if p is None or p < 0:
                starts.append(None)
            else:
                starts.append(instance.day_slot(p))
        starts = tuple(starts)
        return cls(starts, schedule_welfare(instance, starts), bool(anomaly))

    def positions(self, instance):
        return np.array([-1 if st is None else instance.position(*st) for st in self.starts],
                        dtype=np.int64)

    @property
    def n_scheduled(self):
        return sum(st is not None for st in self.starts)


def schedule_welfare(instance, starts):
    """Sum over scheduled events of the attendees' preferences at the start."""
    total = 0.0
    for e, st in enumerate(starts):
        if st is not None:
            d, s = st
            total += float(instance.pref[e, list(instance.attendees[e]), d, s].sum())
    return total


def overlap_violations(instance, schedule):
    """Pairs of scheduled events that share a participant and overlap in time."""
    pos = schedule.positions(instance)
    share = instance.shared_participants()
    out = []
    for a in range(instance.n_events):
        if pos[a] < 0:
            continue
        for b in range(a + 1, instance.n_events):
            if pos[b] < 0 or not share[a, b]:
                continue
            if pos[a] < pos[b] + instance.lengths[b] and pos[b] < pos[a] + instance.lengths[a]:
                out.append((a, b))
    return out


def availability_violations(instance, schedule):
    """Events scheduled where an attendee is unavailable, or outside the calendar."""
    out = []
    for e, st in enumerate(schedule.starts):
        if st is None:
            continue
        d, s = st
        if not (0 <= d < instance.days and 0 <= s < instance.slots):
            out.append(e)
        elif np.any(instance.pref[e, list(instance.attendees[e]), d, s] == 0):
            out.append(e)
    return out


def validate_schedule(instance, schedule):
    """None when both hard constraints hold, otherwise a description."""
    if len(schedule.starts) != instance.n_events:
        return f"schedule has {len(schedule.starts)} entries for {instance.n_events} events"
    problems = []
    for a, b in overlap_violations(instance, schedule):
        problems.append(f"events {a} and {b} share a participant and overlap")
    for e in availability_violations(instance, schedule):
        problems.append(f"event {e} is scheduled where an attendee is unavailable")
    return "; ".join(problems) or None


def participant_values(instance, schedule):
    """Per-participant sum of realized preferences over their scheduled events."""
    vals = np.zeros(instance.n_participants)
    for e, st in enumerate(schedule.starts):
        if st is not None:
            ps = list(instance.attendees[e])
            vals[ps] += instance.pref[e, ps, st[0], st[1]]
    return vals


def event_values(instance, schedule):
    """Per-event joint utility at its start (0 when unscheduled)."""
    vals = np.zeros(instance.n_events)
    for e, st in enumerate(schedule.starts):
        if st is not None:
            vals[e] = instance.pref[e, list(instance.attendees[e]), st[0], st[1]].sum()
    return vals


def schedule_fairness(instance, schedule):
    """Gini and Jain over participants and over events."""
    pv, ev = participant_values(instance, schedule), event_values(instance, schedule)
    return {"gini_participants": gini(pv), "jain_participants": jain(pv),
            "gini_events": gini(ev), "jain_events": jain(ev)}
