"""Synthetic meeting instances: lengths, attendance, clustered participants, preferences."""

import math
from dataclasses import dataclass

import numpy as np

from .._validation import check_seed
from .model import MeetingInstance


def default_time_of_day(hour):
    """Workday availability: morning and afternoon peaks with a lunch dip, near zero at night."""
    hour = np.asarray(hour, dtype=np.float64)
    bump = np.exp(-((hour - 10.0) ** 2) / 4.5) + np.exp(-((hour - 15.0) ** 2) / 4.5)
    peak = 1.0 + math.exp(-25.0 / 4.5)
    return bump / peak


def default_day_decay(day, rate=0.1):
    return np.exp(-rate * np.asarray(day, dtype=np.float64))


@dataclass(frozen=True)
class MeetingGenParams:
    """Knobs of the meeting generator.

    The two logistic models are sampled by inverse CDF truncated to
    ``(0, max]`` and rounded up. The default steepness values put 1% of
    untruncated length samples above 11 hours and 3% of attendance samples
    above 90 people.
    """

    length_x0: float = 2.0
    length_k: float = math.log(99.0) / 9.0
    length_max: int = 11
    attendance_x0: float = 5.0
    attendance_k: float = math.log(97.0 / 3.0) / 85.0
    attendance_max: int = 90
    p_uniform: float = 0.3
    placement_sd: float = 0.05
    recency_base: float = 2.0
    proximity_tau: float = 0.1
    day_decay_rate: float = 0.1
    noise_sd: float = 0.1
    blocked_per_day: int = 4
    top_slots: int = 24

    def __post_init__(self):
        if not 0 <= self.p_uniform <= 1:
            raise ValueError("p_uniform must lie in [0, 1]")
        if not self.noise_sd > 0:
            raise ValueError("noise_sd must be > 0")
        if self.top_slots < 1:
            raise ValueError("top_slots must be >= 1")
        if self.length_max < 1 or self.attendance_max < 1:
            raise ValueError("length_max and attendance_max must be >= 1")
        if self.length_k <= 0 or self.attendance_k <= 0:
            raise ValueError("logistic steepness must be > 0")
        if self.placement_sd < 0 or self.proximity_tau <= 0 or self.recency_base < 1:
            raise ValueError("invalid clustering parameters")
        if self.blocked_per_day < 0:
            raise ValueError("blocked_per_day must be >= 0")


def _logistic_cdf(x, x0, k):
    return 1.0 / (1.0 + np.exp(-k * (x - x0)))


def sample_truncated_logistic(rng, size, x0, k, upper):
    """Integers in ``[1, upper]``: ceil of a logistic draw truncated to ``(0, upper]``."""
    lo, hi = _logistic_cdf(0.0, x0, k), _logistic_cdf(float(upper), x0, k)
    u = rng.uniform(lo, hi, size=size)
    x = x0 + np.log(u / (1.0 - u)) / k
    return np.clip(np.ceil(x), 1, upper).astype(np.int64)


def place_participants(rng, n, p_uniform=0.3, sd=0.05, recency_base=2.0):
    """Points on the unit square grown so that clusters emerge."""
    pts = np.empty((n, 2))
    for i in range(n):
        if i == 0 or rng.random() < p_uniform:
            pts[i] = rng.random(2)
            continue
        w = recency_base ** (np.arange(i) - (i - 1))
        centre = pts[rng.choice(i, p=w / w.sum())]
        pts[i] = np.clip(rng.normal(centre, sd), 0.0, 1.0)
    return pts


def choose_attendees(rng, coords, count, tau=0.1):
    """A random anchor plus ``count - 1`` others drawn without replacement, weight exp(-dist/tau)."""
    n = len(coords)
    anchor = int(rng.integers(n))
    if count <= 1:
        return [anchor]
    others = np.delete(np.arange(n), anchor)
    dist = np.linalg.norm(coords[others] - coords[anchor], axis=1)
    w = np.exp(-dist / tau)
    w = np.maximum(w, 1e-300)
    picked = rng.choice(others, size=count - 1, replace=False, p=w / w.sum())
    return sorted([anchor, *map(int, picked)])


def preference_mean(days, slots, day_decay_rate=0.1):
    """``days x slots`` product of the time-of-day and day-decay curves."""
    hours = (np.arange(slots) + 0.5) * 24.0 / slots
    return default_day_decay(np.arange(days), day_decay_rate)[:, None] * default_time_of_day(hours)[None, :]


def generate_meeting_instance(n_events, n_participants, days=7, slots=24, params=None, seed=None):
    """Sample a meeting instance.

    Each attendee's preference for an event is a clamped normal draw around
    the product curve. Up to ``blocked_per_day`` slots per participant and
    day are then zeroed, drawn with probability proportional to the
    time-of-day curve.
    """
    params = params or MeetingGenParams()
    if min(n_events, n_participants, days, slots) < 1:
        raise ValueError("sizes must be >= 1")
    if params.blocked_per_day >= slots:
        raise ValueError(f"blocked_per_day ({params.blocked_per_day}) must be < slots ({slots})")
    rng = np.random.default_rng(check_seed(seed))
    lengths = sample_truncated_logistic(rng, n_events, params.length_x0, params.length_k,
                                        params.length_max)
    cap = min(params.attendance_max, n_participants)
    counts = sample_truncated_logistic(rng, n_events, params.attendance_x0, params.attendance_k, cap)
    coords = place_participants(rng, n_participants, params.p_uniform, params.placement_sd,
                                params.recency_base)
    attendees = [choose_attendees(rng, coords, int(c), params.proximity_tau) for c in counts]
    mean = preference_mean(days, slots, params.day_decay_rate)
    pref = np.zeros((n_events, n_participants, days, slots))
    for e, ps in enumerate(attendees):
        noise = rng.normal(0.0, params.noise_sd, size=(len(ps), days, slots))
        pref[e, ps] = np.clip(mean[None] + noise, 0.0, 1.0)
    if params.blocked_per_day:
        tod = default_time_of_day((np.arange(slots) + 0.5) * 24.0 / slots)
        p_block = tod / tod.sum()
        for p in range(n_participants):
            for d in range(days):
                k = int(rng.integers(0, params.blocked_per_day + 1))
                if k:
                    blocked = rng.choice(slots, size=k, replace=False, p=p_block)
                    pref[:, p, d, blocked] = 0.0
    return MeetingInstance(lengths, attendees, coords, days, slots, pref, params.top_slots)
