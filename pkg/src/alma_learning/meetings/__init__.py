"""Meeting scheduling as an allocation problem: events bid for start slots."""

from .compose import compose_large_instance, day_bands, restrict_to_bands
from .generation import MeetingGenParams, generate_meeting_instance
from .model import (MeetingInstance, Schedule, availability_violations, event_values,
                    load_meeting_instance, overlap_violations, participant_values,
                    save_meeting_instance, schedule_fairness, validate_schedule)
from .schedulers import (aggregate_event_preferences, brute_force_schedule, candidate_lists,
                         greedy_meetings, meeting_arena, meeting_loss, msrac, schedule_with_alma)

__all__ = [
    "MeetingGenParams", "MeetingInstance", "Schedule", "aggregate_event_preferences",
    "availability_violations", "brute_force_schedule", "candidate_lists",
    "compose_large_instance", "day_bands", "event_values", "generate_meeting_instance",
    "greedy_meetings", "load_meeting_instance", "meeting_arena", "meeting_loss", "msrac",
    "overlap_violations", "participant_values", "restrict_to_bands", "save_meeting_instance",
    "schedule_fairness", "schedule_with_alma", "validate_schedule",
]
