"""Grid domains: scenarios, simulator rules, text views and ground-truth PDDL."""
from .bindings import LABEL_BINDINGS, label_for, label_index
from .generate import SizeOutOfRange, all_small_maps, generate_map, shortest_plan
from .golden import golden_domain, to_ground_truth_pddl
from .rules import (
    FAIL,
    INVALID,
    SUCCESS,
    ExecutionTrace,
    StepOutcome,
    TraceStep,
    UnknownAction,
    goal_reached,
    normalize_action,
    run_sequence,
    step,
)
from .scenario import ACTION_VOCAB, DOMAINS, SIZE_RANGES, VARIANTS, GridScenario, Item, pos_name
from .text import (
    ScenarioDescription,
    TranscriptParseError,
    describe,
    format_trace,
    parse_description,
    parse_transcript,
    simulation_prompt,
    task_description,
    transcript,
)

__all__ = [
    "ACTION_VOCAB", "DOMAINS", "FAIL", "INVALID", "LABEL_BINDINGS", "SIZE_RANGES", "SUCCESS", "VARIANTS",
    "ExecutionTrace", "GridScenario", "Item", "ScenarioDescription", "SizeOutOfRange", "StepOutcome",
    "TraceStep", "TranscriptParseError", "UnknownAction", "all_small_maps", "describe", "format_trace", "generate_map",
    "goal_reached", "golden_domain", "label_for", "label_index", "normalize_action", "parse_description", "parse_transcript",
    "pos_name", "run_sequence", "shortest_plan", "simulation_prompt", "step", "task_description",
    "to_ground_truth_pddl", "transcript",
]
