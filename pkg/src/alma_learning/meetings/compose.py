"""Longer calendars built by placing smaller instances side by side in time."""

import numpy as np

from .model import MeetingInstance


def compose_large_instance(parts):
    """Concatenate calendars day-wise; each part keeps its preferences inside its own day band.

    All parts must have the same participants count and slots per day. The
    participant coordinates of the first part are kept.
    """
    parts = list(parts)
    if not parts:
        raise ValueError("need at least one sub-instance")
    first = parts[0]
    for i, p in enumerate(parts[1:], 1):
        if p.n_participants != first.n_participants or p.slots != first.slots:
            raise ValueError(f"sub-instance {i} has {p.n_participants} participants and {p.slots} "
                             f"slots, expected {first.n_participants} and {first.slots}")
    days = sum(p.days for p in parts)
    n_events = sum(p.n_events for p in parts)
    pref = np.zeros((n_events, first.n_participants, days, first.slots))
    lengths, attendees = [], []
    e0 = d0 = 0
    for p in parts:
        pref[e0:e0 + p.n_events, :, d0:d0 + p.days] = p.pref
        lengths.extend(p.lengths.tolist())
        attendees.extend(p.attendees)
        e0 += p.n_events
        d0 += p.days
    return MeetingInstance(lengths, attendees, first.coords, days, first.slots, pref,
                           first.top_slots)


def day_bands(parts):
    """Per-event ``(first_position, end_position)`` of the band its part occupies."""
    bands = []
    start = 0
    for p in parts:
        end = start + p.days * p.slots
        bands.extend([(start, end)] * p.n_events)
        start = end
    return bands


def restrict_to_bands(instance, bands):
    """Copy of ``instance`` where each event must also end inside its band."""
    return instance.with_deadline([end for _, end in bands])
