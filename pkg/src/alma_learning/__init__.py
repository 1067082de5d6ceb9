"""Decentralized assignment with ALMA and ALMA-Learning, baselines, metrics and meetings."""

from .allocators import ALMAAllocator, ALMALearningAllocator, GreedyAllocator, HungarianAllocator
from .baselines import brute_force, greedy, hungarian
from .core import (UNMATCHED, Allocation, AssignmentInstance, RunConfig, load_instance,
                   preference_order, save_instance, validate_allocation, welfare)
from .engine import Arena, BackoffModel, IntervalConflicts, UnitCapacity, backoff_probability, run_stage
from .generators import GeneratorSpec, gen_binary, gen_map, gen_noisy_common, generate
from .harness import ExperimentReport, ExperimentSpec, report_csv, report_json, run_experiment
from .learning import (AgentLearnerState, TrainResult, TrainTrace, evaluate, init_learner,
                       starting_resource_stabilization, train)
from .metrics import gini, jain, mixed_outcome_values, relative_sw_loss

__version__ = "0.1.0"
